//! Binary label tables: `subscene_id,main_speaker,AGR,CON,EXT,OPN,NEU`.

use persona_core::annotation::BinaryLabelSet;
use persona_core::{Trait, TraitMap};

use crate::error::{PersonaError, Result};
use crate::ingest::decode_utf8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub subscene_id: String,
    pub main_speaker: Option<String>,
    /// Present when the table carries the dialogue text itself.
    pub text: Option<String>,
    pub labels: TraitMap<u8>,
}

/// Accepts `y`/`n`, `1`/`0` and `true`/`false`, case-insensitively.
pub fn parse_label_token(token: &str) -> Option<u8> {
    match token.trim().to_ascii_lowercase().as_str() {
        "y" | "1" | "true" | "1.0" => Some(1),
        "n" | "0" | "false" | "0.0" => Some(0),
        _ => None,
    }
}

enum Column {
    Id,
    Speaker,
    Text,
    Label(Trait),
}

fn column(header: &str) -> Option<Column> {
    let h = header
        .trim()
        .trim_start_matches('\u{feff}')
        .to_ascii_lowercase();
    match h.as_str() {
        "subscene_id" | "id" | "#id" | "#authid" => Some(Column::Id),
        "main_speaker" | "character" | "speaker" => Some(Column::Speaker),
        "text" => Some(Column::Text),
        _ => {
            let code = h.strip_prefix('c').filter(|c| c.len() == 3).unwrap_or(&h);
            code.parse::<Trait>().ok().map(Column::Label)
        }
    }
}

pub fn parse(bytes: &[u8]) -> Result<Vec<LabelRow>> {
    let text = decode_utf8(bytes)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let (mut id, mut speaker, mut body) = (None, None, None);
    let mut traits: TraitMap<Option<usize>> = TraitMap::default();
    for (i, h) in headers.iter().enumerate() {
        match column(h) {
            Some(Column::Id) => id = id.or(Some(i)),
            Some(Column::Speaker) => speaker = speaker.or(Some(i)),
            Some(Column::Text) => body = body.or(Some(i)),
            Some(Column::Label(t)) => traits[t] = traits[t].or(Some(i)),
            None => {}
        }
    }
    let missing = |name: &str| PersonaError::schema(format!("header.{name}"), "missing column");
    let id = id.ok_or_else(|| missing("subscene_id"))?;
    let mut cols = [0usize; 5];
    for t in Trait::ALL {
        cols[t.position()] = traits[t].ok_or_else(|| missing(t.code()))?;
    }

    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut labels = TraitMap([0u8; 5]);
        for t in Trait::ALL {
            let col = cols[t.position()];
            labels[t] = parse_label_token(&record[col]).ok_or_else(|| PersonaError::Label {
                row: row + 1,
                column: headers[col].to_string(),
                value: record[col].to_string(),
            })?;
        }
        rows.push(LabelRow {
            subscene_id: record[id].to_string(),
            main_speaker: speaker.map(|c| record[c].to_string()),
            text: body.map(|c| record[c].to_string()),
            labels,
        });
    }
    Ok(rows)
}

pub fn read(path: &std::path::Path) -> Result<Vec<LabelRow>> {
    parse(&crate::error::read_file(path)?)
}

/// Writes aggregated labels; `speaker_of` supplies the main speaker column.
pub fn write_labels<'a>(
    labels: &[BinaryLabelSet],
    speaker_of: impl Fn(&str) -> Option<&'a str>,
) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["subscene_id", "main_speaker"];
    header.extend(Trait::ALL.map(Trait::code));
    writer.write_record(&header)?;
    for set in labels {
        let mut record = vec![
            set.subscene_id.clone(),
            speaker_of(&set.subscene_id).unwrap_or_default().to_string(),
        ];
        record.extend(set.labels.0.iter().map(u8::to_string));
        writer.write_record(&record)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| PersonaError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Per-trait share of the dominant class.
pub fn majority_shares(rows: &[LabelRow]) -> TraitMap<f64> {
    TraitMap::from_fn(|t| {
        let labels: Vec<u8> = rows.iter().map(|r| r.labels[t]).collect();
        persona_core::cv::majority_share(&labels)
    })
}
