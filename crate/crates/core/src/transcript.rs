//! Transcript and essay domain types.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::traits::TraitMap;

/// One speaker-attributed turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: String,
    pub text: String,
    /// 0-based position within the owning scene.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub episode_id: String,
    pub scene_id: String,
    pub utterances: Vec<Utterance>,
}

impl Scene {
    /// Builds a scene from `(speaker, text)` pairs, assigning contiguous indices.
    pub fn from_turns<S, T>(
        episode_id: impl Into<String>,
        scene_id: impl Into<String>,
        turns: impl IntoIterator<Item = (S, T)>,
    ) -> Self
    where
        S: Into<String>,
        T: Into<String>,
    {
        let utterances = turns
            .into_iter()
            .enumerate()
            .map(|(index, (speaker, text))| Utterance {
                speaker: speaker.into(),
                text: text.into(),
                index,
            })
            .collect();
        Scene {
            episode_id: episode_id.into(),
            scene_id: scene_id.into(),
            utterances,
        }
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Distinct speakers in order of first utterance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for u in &self.utterances {
            if !out.contains(&u.speaker.as_str()) {
                out.push(&u.speaker);
            }
        }
        out
    }

    /// Renumbers utterance indices to 0..n-1.
    pub fn reindex(&mut self) {
        for (i, u) in self.utterances.iter_mut().enumerate() {
            u.index = i;
        }
    }
}

/// A monologue document with five binary trait labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssayDocument {
    pub doc_id: String,
    pub text: String,
    pub labels: TraitMap<u8>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speakers_in_first_appearance_order() {
        let s = Scene::from_turns("e", "s", [("B", "x"), ("A", "y"), ("B", "z")]);
        assert_eq!(s.speakers(), ["B", "A"]);
        assert_eq!(s.utterances[2].index, 2);
    }
}
