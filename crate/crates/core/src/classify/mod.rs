//! Desk-scale trait classifiers.
//!
//! Each trait is a separate binary task. Models are trained on plain
//! `(text, label)` pairs; [`ModelSpec`] picks the model family and its
//! settings so the cross-validation harness can treat them uniformly.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::formats::FormattedItem;
use crate::traits::Trait;
use crate::transcript::EssayDocument;

pub mod attentive;
pub mod logreg;
pub mod majority;

pub use attentive::{attentive_forward, train_attentive, AttentiveConfig, AttentivePoolModel};
pub use logreg::{train_logreg, LogRegConfig, NgramLogRegModel};
pub use majority::{train_majority, MajorityModel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("no training items")]
    EmptyDataset,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("empty token sequence")]
    EmptySequence,
    #[error("token index {index} outside vocabulary of size {size}")]
    IndexOutOfVocab { index: usize, size: usize },
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("texts and labels differ in length ({texts} vs {labels})")]
    LengthMismatch { texts: usize, labels: usize },
}

/// Anything that carries a text and five binary labels.
pub trait Labeled {
    fn text(&self) -> &str;
    fn label(&self, trait_: Trait) -> u8;
}

impl Labeled for FormattedItem {
    fn text(&self) -> &str {
        &self.text
    }
    fn label(&self, trait_: Trait) -> u8 {
        self.labels[trait_]
    }
}

impl Labeled for EssayDocument {
    fn text(&self) -> &str {
        &self.text
    }
    fn label(&self, trait_: Trait) -> u8 {
        self.labels[trait_]
    }
}

pub(crate) fn check_training_set(texts: &[&str], labels: &[u8]) -> Result<(), ClassifyError> {
    if texts.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            texts: texts.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(ClassifyError::BadLabel(bad));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(ClassifyError::SingleClass);
    }
    Ok(())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target, computed stably.
pub(crate) fn bce_with_logit(z: f64, y: u8) -> f64 {
    let softplus = z.max(0.0) + libm::log1p(libm::exp(-libm::fabs(z)));
    softplus - if y == 1 { z } else { 0.0 }
}

/// Looks up the label of an exact training text; falls back to the majority class.
///
/// Only useful as a harness self-check: evaluated on its own training data
/// it scores 100%.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memorizer {
    seen: BTreeMap<String, u8>,
    fallback: u8,
}

impl Memorizer {
    pub fn train(texts: &[&str], labels: &[u8]) -> Result<Self, ClassifyError> {
        let fallback = train_majority(labels)?.predicted_class;
        let seen = texts
            .iter()
            .zip(labels)
            .map(|(t, &l)| (String::from(*t), l))
            .collect();
        Ok(Memorizer { seen, fallback })
    }

    pub fn predict(&self, text: &str) -> u8 {
        self.seen.get(text).copied().unwrap_or(self.fallback)
    }
}

/// Model family plus settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Majority,
    LogReg(LogRegConfig),
    Attentive(AttentiveConfig),
    Memorizer,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Majority => "Majority",
            ModelSpec::LogReg(_) => "LogReg",
            ModelSpec::Attentive(_) => "Attentive",
            ModelSpec::Memorizer => "Memorizer",
        }
    }

    pub fn train(&self, texts: &[&str], labels: &[u8]) -> Result<TrainedModel, ClassifyError> {
        Ok(match self {
            ModelSpec::Majority => TrainedModel::Majority(train_majority(labels)?),
            ModelSpec::LogReg(cfg) => TrainedModel::LogReg(train_logreg(texts, labels, cfg)?),
            ModelSpec::Attentive(cfg) => {
                TrainedModel::Attentive(train_attentive(texts, labels, cfg)?.0)
            }
            ModelSpec::Memorizer => TrainedModel::Memorizer(Memorizer::train(texts, labels)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Majority(MajorityModel),
    LogReg(NgramLogRegModel),
    Attentive(AttentivePoolModel),
    Memorizer(Memorizer),
}

impl TrainedModel {
    pub fn predict(&self, text: &str) -> u8 {
        match self {
            TrainedModel::Majority(m) => m.predict(),
            TrainedModel::LogReg(m) => m.predict(text),
            TrainedModel::Attentive(m) => m.predict(text),
            TrainedModel::Memorizer(m) => m.predict(text),
        }
    }
}
