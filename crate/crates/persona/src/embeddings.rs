//! Pretrained word vectors in the common text format: `token v1 v2 ...` per
//! line, with an optional `count dim` first line.

use std::collections::HashMap;

use crate::error::{PersonaError, Result};

#[derive(Debug, Clone, Default)]
pub struct Embeddings {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl Embeddings {
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }
}

pub fn parse(text: &str) -> Result<Embeddings> {
    let mut out = Embeddings::default();
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| PersonaError::Data(format!("embeddings line {}: bad number", i + 1)))?;
        if i == 0 && values.len() == 1 && token.parse::<usize>().is_ok() {
            continue;
        }
        if out.dim == 0 {
            out.dim = values.len();
        }
        if values.len() != out.dim {
            return Err(PersonaError::Data(format!(
                "embeddings line {}: {} values, expected {}",
                i + 1,
                values.len(),
                out.dim
            )));
        }
        // lowercase to match the tokenizer; first occurrence wins
        out.vectors.entry(token.to_lowercase()).or_insert(values);
    }
    Ok(out)
}
