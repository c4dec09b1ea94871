//! Transcript and essays parsers, plus the canonical transcript writer.

use std::collections::BTreeSet;

use persona_core::{EssayDocument, Scene, Trait, TraitMap};
use serde_json::{json, Map, Value};

use crate::error::{PersonaError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TranscriptOptions {
    /// Skip utterances whose speaker is empty instead of failing.
    pub drop_empty_speaker: bool,
}

pub fn decode_utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| PersonaError::Encoding {
        offset: e.valid_up_to(),
    })
}

pub fn parse_transcript(bytes: &[u8]) -> Result<Vec<Scene>> {
    parse_transcript_with(bytes, TranscriptOptions::default())
}

pub fn parse_transcript_with(bytes: &[u8], options: TranscriptOptions) -> Result<Vec<Scene>> {
    let text = decode_utf8(bytes)?;
    let doc: Value = serde_json::from_str(text).map_err(|e| PersonaError::Json {
        context: "transcript".into(),
        source: e,
    })?;
    let top = doc
        .as_object()
        .ok_or_else(|| PersonaError::schema("$", "expected an object"))?;
    let episodes = array_field(top, "episodes", "")?;

    let mut scenes = Vec::new();
    for (e, episode) in episodes.iter().enumerate() {
        let path = format!("episodes[{e}]");
        let episode = object(episode, &path)?;
        let episode_id = id_field(episode, "episode_id", &path)?;
        let mut seen = BTreeSet::new();
        for (s, scene) in array_field(episode, "scenes", &path)?.iter().enumerate() {
            let path = format!("{path}.scenes[{s}]");
            let scene = object(scene, &path)?;
            let scene_id = id_field(scene, "scene_id", &path)?;
            if !seen.insert(scene_id.clone()) {
                return Err(PersonaError::schema(
                    format!("{path}.scene_id"),
                    format!("duplicate scene id {scene_id:?} in episode {episode_id:?}"),
                ));
            }
            let mut turns = Vec::new();
            for (u, utt) in array_field(scene, "utterances", &path)?.iter().enumerate() {
                let path = format!("{path}.utterances[{u}]");
                let utt = object(utt, &path)?;
                let speaker = speaker(utt, &path)?;
                if speaker.is_empty() {
                    if options.drop_empty_speaker {
                        log::warn!("{path}: dropping utterance with empty speaker");
                        continue;
                    }
                    return Err(PersonaError::schema(
                        format!("{path}.speaker"),
                        "empty speaker",
                    ));
                }
                let text = match utt.get("text") {
                    Some(Value::String(t)) => t.trim_end().to_string(),
                    Some(_) => {
                        return Err(PersonaError::schema(
                            format!("{path}.text"),
                            "expected a string",
                        ))
                    }
                    None => {
                        return Err(PersonaError::schema(
                            format!("{path}.text"),
                            "missing field",
                        ))
                    }
                };
                turns.push((speaker, text));
            }
            scenes.push(Scene::from_turns(episode_id.clone(), scene_id, turns));
        }
    }
    Ok(scenes)
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| PersonaError::schema(path, "expected an object"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn array_field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Vec<Value>> {
    match obj.get(key) {
        Some(Value::Array(a)) => Ok(a),
        Some(_) => Err(PersonaError::schema(join(path, key), "expected a list")),
        None => Err(PersonaError::schema(join(path, key), "missing field")),
    }
}

/// Ids are strings; integer ids are accepted and printed in decimal.
fn id_field(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) if n.is_u64() || n.is_i64() => Ok(n.to_string()),
        Some(_) => Err(PersonaError::schema(join(path, key), "expected a string")),
        None => Err(PersonaError::schema(join(path, key), "missing field")),
    }
}

/// A speaker is a name or a list of names; lists keep the first name.
fn speaker(obj: &Map<String, Value>, path: &str) -> Result<String> {
    let at = || join(path, "speaker");
    match obj.get("speaker") {
        Some(Value::String(s)) => Ok(s.trim().to_string()),
        Some(Value::Array(names)) => match names.first() {
            Some(Value::String(s)) => Ok(s.trim().to_string()),
            Some(_) => Err(PersonaError::schema(
                format!("{}[0]", at()),
                "expected a string",
            )),
            None => Ok(String::new()),
        },
        Some(_) => Err(PersonaError::schema(
            at(),
            "expected a string or a list of strings",
        )),
        None => Err(PersonaError::schema(at(), "missing field")),
    }
}

/// Writes scenes in the input schema. Consecutive scenes with the same
/// episode id share one episode entry.
pub fn transcript_to_json(scenes: &[Scene]) -> Value {
    let mut episodes: Vec<(String, Vec<Value>)> = Vec::new();
    for scene in scenes {
        let utterances: Vec<Value> = scene
            .utterances
            .iter()
            .map(|u| json!({ "speaker": u.speaker, "text": u.text }))
            .collect();
        let entry = json!({ "scene_id": scene.scene_id, "utterances": utterances });
        match episodes.last_mut() {
            Some((id, list)) if *id == scene.episode_id => list.push(entry),
            _ => episodes.push((scene.episode_id.clone(), vec![entry])),
        }
    }
    let episodes: Vec<Value> = episodes
        .into_iter()
        .map(|(id, scenes)| json!({ "episode_id": id, "scenes": scenes }))
        .collect();
    json!({ "episodes": episodes })
}

pub fn write_transcript(scenes: &[Scene]) -> String {
    let mut out =
        serde_json::to_string_pretty(&transcript_to_json(scenes)).expect("json values serialize");
    out.push('\n');
    out
}

/// Column aliases for the essays table: the canonical names plus the
/// `#AUTHID`, `TEXT`, `cAGR`... spellings of the distributed corpus.
fn essay_column(header: &str) -> Option<EssayColumn> {
    let h = header
        .trim()
        .trim_start_matches('\u{feff}')
        .to_ascii_lowercase();
    match h.as_str() {
        "id" | "#authid" | "authid" | "doc_id" => Some(EssayColumn::Id),
        "text" => Some(EssayColumn::Text),
        _ => {
            let code = h.strip_prefix('c').filter(|c| c.len() == 3).unwrap_or(&h);
            code.parse::<Trait>().ok().map(EssayColumn::Label)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EssayColumn {
    Id,
    Text,
    Label(Trait),
}

/// Parses a binary label token: `y`/`1` is 1, `n`/`0` is 0 (case-insensitive).
pub fn parse_binary_label(token: &str) -> Option<u8> {
    match token.trim().to_ascii_lowercase().as_str() {
        "y" | "1" => Some(1),
        "n" | "0" => Some(0),
        _ => None,
    }
}

/// Decodes UTF-8, falling back to Latin-1 (the distributed essays file is not UTF-8).
fn decode_lenient(bytes: &[u8]) -> std::borrow::Cow<'_, str> {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.into(),
        Err(e) => {
            log::warn!(
                "input is not UTF-8 (byte {}), decoding as Latin-1",
                e.valid_up_to()
            );
            bytes.iter().map(|&b| b as char).collect::<String>().into()
        }
    }
}

pub fn parse_essays(bytes: &[u8]) -> Result<Vec<EssayDocument>> {
    let text = decode_lenient(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();

    let mut id_col = None;
    let mut text_col = None;
    let mut label_cols: TraitMap<Option<usize>> = TraitMap::default();
    for (i, h) in headers.iter().enumerate() {
        match essay_column(h) {
            Some(EssayColumn::Id) => id_col = id_col.or(Some(i)),
            Some(EssayColumn::Text) => text_col = text_col.or(Some(i)),
            Some(EssayColumn::Label(t)) => label_cols[t] = label_cols[t].or(Some(i)),
            None => {}
        }
    }
    let missing = |name: &str| PersonaError::schema(format!("header.{name}"), "missing column");
    let id_col = id_col.ok_or_else(|| missing("id"))?;
    let text_col = text_col.ok_or_else(|| missing("text"))?;
    let mut cols = [0usize; 5];
    for t in Trait::ALL {
        cols[t.position()] = label_cols[t].ok_or_else(|| missing(t.code()))?;
    }

    let mut docs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let row = row + 1;
        let mut labels = TraitMap([0u8; 5]);
        for t in Trait::ALL {
            let col = cols[t.position()];
            let token = &record[col];
            labels[t] = parse_binary_label(token).ok_or_else(|| PersonaError::Label {
                row,
                column: headers[col].to_string(),
                value: token.to_string(),
            })?;
        }
        docs.push(EssayDocument {
            doc_id: record[id_col].to_string(),
            text: record[text_col].to_string(),
            labels,
        });
    }
    Ok(docs)
}
