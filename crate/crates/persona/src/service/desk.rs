use std::collections::{BTreeMap, BTreeSet};

use persona_core::annotation::{
    scores_from_raw, AnnotationError, AnnotationRecord, AnnotationStore, Upsert,
};
use persona_core::msf::SubScene;
use persona_core::{Trait, TraitMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::PersonaError;
use crate::store::{now_ms, AnnotationLog};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),
    #[error("unknown sub-scene {0:?}")]
    UnknownSubScene(String),
    #[error("{0}")]
    InvalidScores(String),
    #[error("could not persist annotation: {0}")]
    Persist(#[from] PersonaError),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::UnknownAnnotator(_) => 401,
            ServiceError::UnknownSubScene(_) => 404,
            ServiceError::InvalidScores(_) => 400,
            ServiceError::Persist(_) => 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskUtterance {
    pub index: usize,
    pub speaker: String,
    pub text: String,
    pub is_main: bool,
}

/// A sub-scene as shown to an annotator, with real speaker names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub subscene_id: String,
    pub main_speaker: String,
    pub utterances: Vec<TaskUtterance>,
    pub remaining_traits: Vec<Trait>,
    pub annotations_so_far: usize,
}

/// Request body for a submission. Scores stay raw until validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub annotator: String,
    pub subscene_id: String,
    pub scores: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub subscene_id: String,
    /// Annotators who have now scored this sub-scene.
    pub count: usize,
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    /// Number of sub-scenes per annotation count; 0 to 3 are always present.
    pub buckets: BTreeMap<usize, usize>,
    pub annotators: BTreeMap<String, usize>,
}

/// Corpus, registered annotators and the store, with an optional log that
/// every accepted submission is written to before it becomes visible.
#[derive(Debug)]
pub struct Desk {
    corpus: BTreeMap<String, SubScene>,
    annotators: BTreeSet<String>,
    store: AnnotationStore,
    log: Option<AnnotationLog>,
}

fn validate_scores(raw: &BTreeMap<String, i64>) -> Result<TraitMap<i64>, ServiceError> {
    let mut out: TraitMap<Option<i64>> = TraitMap::default();
    for (key, &value) in raw {
        let t: Trait = key
            .parse()
            .map_err(|_| ServiceError::InvalidScores(format!("unknown trait {key:?}")))?;
        out[t] = Some(value);
    }
    let mut scores = TraitMap([0i64; 5]);
    for t in Trait::ALL {
        scores[t] =
            out[t].ok_or_else(|| ServiceError::InvalidScores(format!("missing score for {t}")))?;
    }
    Ok(scores)
}

impl Desk {
    /// `store` must already be replayed over the same corpus ids.
    pub fn new(
        subscenes: Vec<SubScene>,
        annotators: impl IntoIterator<Item = String>,
        store: AnnotationStore,
        log: Option<AnnotationLog>,
    ) -> Self {
        let mut store = store;
        let corpus: BTreeMap<String, SubScene> =
            subscenes.into_iter().map(|s| (s.id.clone(), s)).collect();
        for id in corpus.keys() {
            store.register_subscene(id.clone());
        }
        Desk {
            corpus,
            annotators: annotators.into_iter().collect(),
            store,
            log,
        }
    }

    pub fn store(&self) -> &AnnotationStore {
        &self.store
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    fn check_annotator(&self, annotator: &str) -> Result<(), ServiceError> {
        if self.annotators.contains(annotator) {
            Ok(())
        } else {
            Err(ServiceError::UnknownAnnotator(annotator.to_string()))
        }
    }

    pub fn subscene(&self, id: &str) -> Result<&SubScene, ServiceError> {
        self.corpus
            .get(id)
            .ok_or_else(|| ServiceError::UnknownSubScene(id.to_string()))
    }

    /// The least-annotated sub-scene this annotator has not scored yet;
    /// ties go to the smallest id.
    pub fn next_task(&self, annotator: &str) -> Result<Option<AnnotationTask>, ServiceError> {
        self.check_annotator(annotator)?;
        let pick = self
            .corpus
            .values()
            .filter(|s| self.store.get(&s.id, annotator).is_none())
            .min_by_key(|s| self.store.count_for(&s.id));
        Ok(pick.map(|s| AnnotationTask {
            subscene_id: s.id.clone(),
            main_speaker: s.main_speaker.clone(),
            utterances: s
                .utterances
                .iter()
                .map(|u| TaskUtterance {
                    index: u.index,
                    speaker: u.speaker.clone(),
                    text: u.text.clone(),
                    is_main: u.speaker == s.main_speaker,
                })
                .collect(),
            remaining_traits: Trait::ALL.to_vec(),
            annotations_so_far: self.store.count_for(&s.id),
        }))
    }

    /// Validates, persists, then records. Nothing is written on error.
    pub fn submit(&mut self, submission: &Submission) -> Result<Ack, ServiceError> {
        self.check_annotator(&submission.annotator)?;
        let id = &submission.subscene_id;
        self.subscene(id)?;
        let raw = validate_scores(&submission.scores)?;
        let scores = scores_from_raw(&raw).map_err(|e| match e {
            AnnotationError::ScoreRange { .. } => ServiceError::InvalidScores(e.to_string()),
            other => ServiceError::Persist(other.into()),
        })?;
        let record = AnnotationRecord {
            subscene_id: id.clone(),
            annotator_id: submission.annotator.clone(),
            scores,
            timestamp_ms: now_ms(),
        };
        if let Some(log) = &mut self.log {
            log.append(&record)?;
        }
        let upsert = self.store.record(record).map_err(PersonaError::from)?;
        if let Upsert::Replaced(_) = upsert {
            log::info!("{} resubmitted {id}", submission.annotator);
        }
        Ok(Ack {
            subscene_id: id.clone(),
            count: self.store.count_for(id),
            replaced: matches!(upsert, Upsert::Replaced(_)),
        })
    }

    pub fn progress(&self) -> Progress {
        let mut buckets: BTreeMap<usize, usize> = (0..=3).map(|b| (b, 0)).collect();
        for id in self.corpus.keys() {
            *buckets.entry(self.store.count_for(id)).or_default() += 1;
        }
        let mut annotators: BTreeMap<String, usize> =
            self.annotators.iter().map(|a| (a.clone(), 0)).collect();
        for r in self.store.records() {
            *annotators.entry(r.annotator_id.clone()).or_default() += 1;
        }
        Progress {
            total: self.corpus.len(),
            buckets,
            annotators,
        }
    }
}
