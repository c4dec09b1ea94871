//! One JSON value per line.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{read_file, PersonaError, Result};
use crate::ingest::decode_utf8;

/// Parses every non-blank line; errors name the 1-based line.
pub fn parse<T: DeserializeOwned>(bytes: &[u8], what: &str) -> Result<Vec<T>> {
    let text = decode_utf8(bytes)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| PersonaError::Json {
            context: format!("{what} line {}", i + 1),
            source: e,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    parse(&read_file(path)?, &path.display().to_string())
}

pub fn to_string<T: Serialize>(values: &[T]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&serde_json::to_string(v).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| PersonaError::io(path, e))?;
    file.write_all(to_string(values).as_bytes())
        .map_err(|e| PersonaError::io(path, e))
}
