//! L2-regularized logistic regression over unigram and bigram counts.
//!
//! Count vectors are scaled to unit Euclidean length per document so one
//! learning rate works for both short utterances and long essays.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bce_with_logit, check_training_set, sigmoid, ClassifyError};
use crate::text::{tokenize, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub min_freq: usize,
    /// Stop once the objective improves by less than this between epochs.
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-4,
            learning_rate: 1.0,
            epochs: 300,
            min_freq: 2,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramLogRegModel {
    /// n-gram vocabulary; bigrams are the two tokens joined by a space.
    pub vocabulary: Vocabulary,
    /// One weight per vocabulary entry. The unknown slot never fires.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub n_range: (usize, usize),
    pub l2: f64,
}

pub(crate) fn ngrams(tokens: &[String], n_range: (usize, usize)) -> Vec<String> {
    let mut out = Vec::new();
    for n in n_range.0..=n_range.1 {
        for w in tokens.windows(n) {
            out.push(w.join(" "));
        }
    }
    out
}

/// Sparse, unit-length count vector. Unknown n-grams are dropped.
fn features(vocab: &Vocabulary, grams: &[String]) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = grams
        .iter()
        .map(|g| vocab.get(g))
        .filter(|&i| i != Vocabulary::UNKNOWN)
        .collect();
    idx.sort_unstable();
    let mut out: Vec<(usize, f64)> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some((j, c)) if *j == i => *c += 1.0,
            _ => out.push((i, 1.0)),
        }
    }
    let norm = libm::sqrt(out.iter().map(|(_, c)| c * c).sum::<f64>());
    if norm > 0.0 {
        out.iter_mut().for_each(|(_, c)| *c /= norm);
    }
    out
}

impl NgramLogRegModel {
    pub const N_RANGE: (usize, usize) = (1, 2);

    fn logit(&self, x: &[(usize, f64)]) -> f64 {
        self.bias + x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    pub fn featurize(&self, text: &str) -> Vec<(usize, f64)> {
        features(&self.vocabulary, &ngrams(&tokenize(text), self.n_range))
    }

    pub fn predict_proba(&self, text: &str) -> f64 {
        sigmoid(self.logit(&self.featurize(text)))
    }

    /// Class 1 when the probability is at least 0.5.
    pub fn predict(&self, text: &str) -> u8 {
        (self.predict_proba(text) >= 0.5) as u8
    }
}

/// Full-batch gradient descent on mean cross-entropy plus `l2/2 * |w|^2`.
/// The bias is not regularized.
pub fn train_logreg(
    texts: &[&str],
    labels: &[u8],
    config: &LogRegConfig,
) -> Result<NgramLogRegModel, ClassifyError> {
    check_training_set(texts, labels)?;
    let n_range = NgramLogRegModel::N_RANGE;
    let grams: Vec<Vec<String>> = texts
        .iter()
        .map(|t| ngrams(&tokenize(t), n_range))
        .collect();
    let vocabulary = Vocabulary::build(grams.iter().map(Vec::as_slice), config.min_freq);
    let rows: Vec<Vec<(usize, f64)>> = grams.iter().map(|g| features(&vocabulary, g)).collect();

    let mut model = NgramLogRegModel {
        weights: alloc::vec![0.0; vocabulary.len()],
        vocabulary,
        bias: 0.0,
        n_range,
        l2: config.l2,
    };
    let n = rows.len() as f64;
    let mut grad = alloc::vec![0.0; model.weights.len()];
    let mut previous = f64::INFINITY;
    for _ in 0..config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_bias = 0.0;
        let mut loss = 0.0;
        for (x, &y) in rows.iter().zip(labels) {
            let z = model.logit(x);
            loss += bce_with_logit(z, y);
            let g = sigmoid(z) - y as f64;
            grad_bias += g;
            for &(i, v) in x {
                grad[i] += g * v;
            }
        }
        let penalty: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * config.l2 / 2.0;
        let objective = loss / n + penalty;
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * (g / n + config.l2 * *w);
        }
        model.bias -= config.learning_rate * grad_bias / n;
        if previous - objective < config.tolerance && previous >= objective {
            break;
        }
        previous = objective;
    }
    Ok(model)
}
