//! Append-only annotation log: one JSON record per line, later lines win.
//!
//! ```text
//! {"subscene_id":"e1:s1:0-4:Ross","annotator_id":"a1","AGR":1,"CON":0,"EXT":-1,"OPN":0,"NEU":1,"ts":"2024-01-01T00:00:00.000Z"}
//! ```

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use persona_core::annotation::{scores_from_raw, AnnotationRecord, AnnotationStore, Upsert};
use persona_core::TraitMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PersonaError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    subscene_id: String,
    annotator_id: String,
    #[serde(rename = "AGR")]
    agr: i64,
    #[serde(rename = "CON")]
    con: i64,
    #[serde(rename = "EXT")]
    ext: i64,
    #[serde(rename = "OPN")]
    opn: i64,
    #[serde(rename = "NEU")]
    neu: i64,
    /// RFC 3339 text, or epoch milliseconds.
    ts: Value,
}

pub fn format_timestamp(ms: i64) -> String {
    DateTime::<Utc>::from_timestamp_millis(ms)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::String(s) => DateTime::parse_from_rfc3339(s)
            .ok()
            .map(|t| t.timestamp_millis()),
        Value::Number(n) => n.as_i64(),
        _ => None,
    }
}

pub fn now_ms() -> i64 {
    Utc::now().timestamp_millis()
}

pub fn record_to_line(record: &AnnotationRecord) -> String {
    let s = record.scores.map(|_, s| i64::from(s));
    let line = Line {
        subscene_id: record.subscene_id.clone(),
        annotator_id: record.annotator_id.clone(),
        agr: s.0[0],
        con: s.0[1],
        ext: s.0[2],
        opn: s.0[3],
        neu: s.0[4],
        ts: Value::String(format_timestamp(record.timestamp_ms)),
    };
    serde_json::to_string(&line).expect("records serialize")
}

fn line_to_record(text: &str, line_no: usize) -> Result<AnnotationRecord> {
    let context = || format!("annotation store line {line_no}");
    let line: Line = serde_json::from_str(text).map_err(|e| PersonaError::Json {
        context: context(),
        source: e,
    })?;
    let raw = TraitMap([line.agr, line.con, line.ext, line.opn, line.neu]);
    let scores =
        scores_from_raw(&raw).map_err(|e| PersonaError::Data(format!("{}: {e}", context())))?;
    let timestamp_ms = parse_timestamp(&line.ts)
        .ok_or_else(|| PersonaError::schema(format!("{}.ts", context()), "bad timestamp"))?;
    Ok(AnnotationRecord {
        subscene_id: line.subscene_id,
        annotator_id: line.annotator_id,
        scores,
        timestamp_ms,
    })
}

/// Reads every record in file order. A missing file holds no records.
pub fn read_records(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(PersonaError::io(path, e)),
    };
    let text = crate::ingest::decode_utf8(&bytes)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| line_to_record(l, i + 1))
        .collect()
}

/// Replays records into a store. With `known` set, records for other
/// sub-scenes are errors; without it, every id seen is registered.
pub fn replay(records: Vec<AnnotationRecord>, known: Option<&[String]>) -> Result<AnnotationStore> {
    let mut store = match known {
        Some(ids) => AnnotationStore::new(ids.iter().cloned()),
        None => {
            let mut s = AnnotationStore::default();
            for r in &records {
                s.register_subscene(r.subscene_id.clone());
            }
            s
        }
    };
    for r in records {
        let (sub, who) = (r.subscene_id.clone(), r.annotator_id.clone());
        if let Upsert::Replaced(_) = store.record(r)? {
            log::info!("annotation by {who} on {sub} replaced by a later line");
        }
    }
    Ok(store)
}

pub fn load_store(path: &Path, known: Option<&[String]>) -> Result<AnnotationStore> {
    replay(read_records(path)?, known)
}

/// Write handle for the log. Every append is flushed and synced before returning.
#[derive(Debug)]
pub struct AnnotationLog {
    path: PathBuf,
    file: File,
}

impl AnnotationLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| PersonaError::io(&path, e))?;
        Ok(AnnotationLog { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &AnnotationRecord) -> Result<()> {
        let mut line = record_to_line(record);
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| PersonaError::io(&self.path, e))
    }
}
