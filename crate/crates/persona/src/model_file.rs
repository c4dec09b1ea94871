//! Plain-text model files.
//!
//! ```text
//! persona-model 1
//! kind logreg
//! ...
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so a save and
//! load reproduces every weight bit for bit. Vocabulary rows are
//! `token<TAB>values`; tokens never contain tabs or newlines.

use std::fmt::Write;

use persona_core::classify::attentive::AttentivePoolModel;
use persona_core::classify::logreg::NgramLogRegModel;
use persona_core::classify::majority::MajorityModel;
use persona_core::classify::TrainedModel;
use persona_core::text::Vocabulary;

use crate::error::{PersonaError, Result};

const MAGIC: &str = "persona-model 1";

fn floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn save(model: &TrainedModel) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    match model {
        TrainedModel::Majority(m) => {
            let _ = writeln!(out, "kind majority");
            let _ = writeln!(out, "class {}", m.predicted_class);
            let _ = writeln!(out, "counts {} {}", m.class_counts[0], m.class_counts[1]);
        }
        TrainedModel::LogReg(m) => {
            let _ = writeln!(out, "kind logreg");
            let _ = writeln!(out, "n_range {} {}", m.n_range.0, m.n_range.1);
            let _ = writeln!(out, "l2 {:e}", m.l2);
            let _ = writeln!(out, "bias {:e}", m.bias);
            let _ = writeln!(out, "rows {}", m.weights.len());
            for (token, w) in m.vocabulary.tokens().iter().zip(&m.weights) {
                let _ = writeln!(out, "{token}\t{w:e}");
            }
        }
        TrainedModel::Attentive(m) => {
            let _ = writeln!(out, "kind attentive");
            let _ = writeln!(out, "dim {}", m.dim);
            let _ = writeln!(out, "bias {:e}", m.bias);
            let _ = writeln!(out, "query {}", floats(&m.query));
            let _ = writeln!(out, "output {}", floats(&m.output));
            let _ = writeln!(out, "rows {}", m.vocabulary.len());
            for (i, token) in m.vocabulary.tokens().iter().enumerate() {
                let _ = writeln!(out, "{token}\t{}", floats(m.embedding(i)));
            }
        }
        TrainedModel::Memorizer(_) => {
            return Err(PersonaError::Config(
                "the memorizer is a test fixture and cannot be saved".into(),
            ))
        }
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> PersonaError {
        PersonaError::ModelFile {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let (i, l) = self.inner.next().ok_or_else(|| PersonaError::ModelFile {
            line: self.line + 1,
            message: "unexpected end of file".into(),
        })?;
        self.line = i + 1;
        Ok(l)
    }

    /// Reads `key value...` and returns the value part.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if line == key => Ok(""),
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        self.parse(v)
    }

    fn float_list(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.field(key)?;
        self.floats(v)
    }

    fn floats(&self, s: &str) -> Result<Vec<f64>> {
        s.split_whitespace().map(|v| self.parse(v)).collect()
    }

    /// `rows` vocabulary rows of `token<TAB>floats`.
    fn rows(&mut self, rows: usize, width: usize) -> Result<(Vec<String>, Vec<f64>)> {
        let mut tokens = Vec::with_capacity(rows);
        let mut values = Vec::with_capacity(rows * width);
        for _ in 0..rows {
            let line = self.next_line()?;
            let (token, rest) = line
                .split_once('\t')
                .ok_or_else(|| self.err("expected token<TAB>values"))?;
            let v = self.floats(rest)?;
            if v.len() != width {
                return Err(self.err(format!("expected {width} values, found {}", v.len())));
            }
            tokens.push(token.to_string());
            values.extend(v);
        }
        Ok((tokens, values))
    }
}

fn vocabulary(lines: &Lines, tokens: Vec<String>) -> Result<Vocabulary> {
    if tokens.first().map(String::as_str) != Some(Vocabulary::UNKNOWN_TOKEN) {
        return Err(lines.err("first vocabulary row must be the unknown token"));
    }
    let n = tokens.len();
    let vocab = Vocabulary::from_tokens(tokens.into_iter().skip(1));
    if vocab.len() != n {
        return Err(lines.err("duplicate vocabulary token"));
    }
    Ok(vocab)
}

pub fn load(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next_line()? != MAGIC {
        return Err(lines.err(format!("expected header `{MAGIC}`")));
    }
    let kind = lines.field("kind")?;
    let model = match kind {
        "majority" => {
            let class: u8 = lines.number("class")?;
            let counts = lines.field("counts")?;
            let counts: Vec<usize> = counts
                .split_whitespace()
                .map(|c| lines.parse(c))
                .collect::<Result<_>>()?;
            if class > 1 || counts.len() != 2 {
                return Err(lines.err("bad majority model"));
            }
            TrainedModel::Majority(MajorityModel {
                predicted_class: class,
                class_counts: [counts[0], counts[1]],
            })
        }
        "logreg" => {
            let range = lines.field("n_range")?;
            let range: Vec<usize> = range
                .split_whitespace()
                .map(|c| lines.parse(c))
                .collect::<Result<_>>()?;
            if range.len() != 2 || range[0] == 0 || range[0] > range[1] {
                return Err(lines.err("bad n_range"));
            }
            let l2 = lines.number("l2")?;
            let bias = lines.number("bias")?;
            let rows = lines.number("rows")?;
            let (tokens, weights) = lines.rows(rows, 1)?;
            TrainedModel::LogReg(NgramLogRegModel {
                vocabulary: vocabulary(&lines, tokens)?,
                weights,
                bias,
                n_range: (range[0], range[1]),
                l2,
            })
        }
        "attentive" => {
            let dim: usize = lines.number("dim")?;
            let bias = lines.number("bias")?;
            let query = lines.float_list("query")?;
            let output = lines.float_list("output")?;
            if query.len() != dim || output.len() != dim {
                return Err(lines.err(format!("query and output need {dim} values")));
            }
            let rows = lines.number("rows")?;
            let (tokens, embeddings) = lines.rows(rows, dim)?;
            TrainedModel::Attentive(AttentivePoolModel {
                vocabulary: vocabulary(&lines, tokens)?,
                dim,
                embeddings,
                query,
                output,
                bias,
            })
        }
        other => return Err(lines.err(format!("unknown model kind {other:?}"))),
    };
    Ok(model)
}
