//! Attention-pooling classifier over static token embeddings.
//!
//! For tokens `t_1..t_n` with embeddings `e_i`:
//!
//! ```text
//! s_i = u · e_i                 attention score against a learned query u
//! a   = softmax(s)
//! h   = Σ a_i e_i               pooled representation
//! p   = sigmoid(w · h + b)
//! ```
//!
//! Trained with mean binary cross-entropy and plain mini-batch gradient
//! descent. All randomness (initialization and batch order) comes from one
//! seeded [`SplitMix64`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{bce_with_logit, check_training_set, sigmoid, ClassifyError};
use crate::rng::SplitMix64;
use crate::text::{tokenize, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentiveConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early stop when training loss moved less than `tolerance` over this many epochs.
    pub patience: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub min_freq: usize,
    /// Embeddings start uniform in `(-init_range, init_range)`.
    pub init_range: f64,
}

impl Default for AttentiveConfig {
    fn default() -> Self {
        AttentiveConfig {
            dim: 16,
            learning_rate: 0.05,
            batch_size: 16,
            max_epochs: 200,
            patience: 10,
            tolerance: 1e-5,
            seed: 42,
            min_freq: 2,
            init_range: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentivePoolModel {
    pub vocabulary: Vocabulary,
    pub dim: usize,
    /// Row-major `vocabulary.len() × dim`.
    pub embeddings: Vec<f64>,
    pub query: Vec<f64>,
    pub output: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub probability: f64,
    pub logit: f64,
    pub attention: Vec<f64>,
    pub pooled: Vec<f64>,
}

/// Gradients of the mean loss. Embedding rows that received no gradient are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: BTreeMap<usize, Vec<f64>>,
    pub query: Vec<f64>,
    pub output: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: usize,
    /// Mean training loss after each epoch.
    pub losses: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl AttentivePoolModel {
    /// Embeddings are drawn row by row from `uniform(-init_range, init_range)`,
    /// then the output weights from `uniform(-1, 1)`. The query and bias start
    /// at zero, so attention starts as mean pooling.
    pub fn init(vocabulary: Vocabulary, dim: usize, init_range: f64, rng: &mut SplitMix64) -> Self {
        let embeddings = (0..vocabulary.len() * dim)
            .map(|_| rng.uniform(-init_range, init_range))
            .collect();
        let output = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let query = alloc::vec![0.0; dim];
        AttentivePoolModel {
            vocabulary,
            dim,
            embeddings,
            query,
            output,
            bias: 0.0,
        }
    }

    pub fn embedding(&self, index: usize) -> &[f64] {
        &self.embeddings[index * self.dim..(index + 1) * self.dim]
    }

    /// Overwrites rows for tokens the lookup knows; returns how many were replaced.
    /// Vectors of the wrong width are ignored.
    pub fn load_pretrained<F>(&mut self, mut lookup: F) -> usize
    where
        F: FnMut(&str) -> Option<Vec<f64>>,
    {
        let mut replaced = 0;
        for i in 1..self.vocabulary.len() {
            let token = String::from(self.vocabulary.token(i).expect("in range"));
            if let Some(v) = lookup(&token).filter(|v| v.len() == self.dim) {
                self.embeddings[i * self.dim..(i + 1) * self.dim].copy_from_slice(&v);
                replaced += 1;
            }
        }
        replaced
    }

    /// Token indices of a text; an empty text becomes a single unknown token.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        let ids = self.vocabulary.encode(&tokenize(text));
        if ids.is_empty() {
            alloc::vec![Vocabulary::UNKNOWN]
        } else {
            ids
        }
    }

    pub fn forward(&self, tokens: &[usize]) -> Result<Forward, ClassifyError> {
        if tokens.is_empty() {
            return Err(ClassifyError::EmptySequence);
        }
        let size = self.vocabulary.len();
        if let Some(&index) = tokens.iter().find(|&&t| t >= size) {
            return Err(ClassifyError::IndexOutOfVocab { index, size });
        }
        let scores: Vec<f64> = tokens
            .iter()
            .map(|&t| dot(&self.query, self.embedding(t)))
            .collect();
        let attention = softmax(&scores);
        let mut pooled = alloc::vec![0.0; self.dim];
        for (&t, &a) in tokens.iter().zip(&attention) {
            for (h, e) in pooled.iter_mut().zip(self.embedding(t)) {
                *h += a * e;
            }
        }
        let logit = dot(&self.output, &pooled) + self.bias;
        Ok(Forward {
            probability: sigmoid(logit),
            logit,
            attention,
            pooled,
        })
    }

    pub fn predict_proba(&self, text: &str) -> f64 {
        self.forward(&self.encode(text))
            .expect("encoded tokens are in vocabulary")
            .probability
    }

    /// Class 1 when the probability is at least 0.5.
    pub fn predict(&self, text: &str) -> u8 {
        (self.predict_proba(text) >= 0.5) as u8
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, batch: &[(&[usize], u8)]) -> Result<f64, ClassifyError> {
        let mut total = 0.0;
        for &(tokens, y) in batch {
            total += bce_with_logit(self.forward(tokens)?.logit, y);
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean cross-entropy over a batch and its analytic gradients.
    pub fn loss_and_gradients(
        &self,
        batch: &[(&[usize], u8)],
    ) -> Result<(f64, Gradients), ClassifyError> {
        let d = self.dim;
        let mut grads = Gradients {
            embeddings: BTreeMap::new(),
            query: alloc::vec![0.0; d],
            output: alloc::vec![0.0; d],
            bias: 0.0,
        };
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for &(tokens, y) in batch {
            let f = self.forward(tokens)?;
            total += bce_with_logit(f.logit, y);
            let g = (f.probability - y as f64) * scale;

            grads.bias += g;
            for (gw, h) in grads.output.iter_mut().zip(&f.pooled) {
                *gw += g * h;
            }
            let w_dot_h = dot(&self.output, &f.pooled);
            for (&t, &a) in tokens.iter().zip(&f.attention) {
                let e = self.embedding(t);
                // d loss / d score_i
                let ds = a * g * (dot(&self.output, e) - w_dot_h);
                for (gu, x) in grads.query.iter_mut().zip(e) {
                    *gu += ds * x;
                }
                let row = grads
                    .embeddings
                    .entry(t)
                    .or_insert_with(|| alloc::vec![0.0; d]);
                for ((r, w), u) in row.iter_mut().zip(&self.output).zip(&self.query) {
                    *r += a * g * w + ds * u;
                }
            }
        }
        Ok((total * scale, grads))
    }

    pub fn apply(&mut self, grads: &Gradients, learning_rate: f64) {
        let d = self.dim;
        for (&row, g) in &grads.embeddings {
            for (e, gk) in self.embeddings[row * d..(row + 1) * d].iter_mut().zip(g) {
                *e -= learning_rate * gk;
            }
        }
        for (u, g) in self.query.iter_mut().zip(&grads.query) {
            *u -= learning_rate * g;
        }
        for (w, g) in self.output.iter_mut().zip(&grads.output) {
            *w -= learning_rate * g;
        }
        self.bias -= learning_rate * grads.bias;
    }
}

/// Forward pass returning the positive-class probability and attention weights.
pub fn attentive_forward(
    model: &AttentivePoolModel,
    tokens: &[usize],
) -> Result<(f64, Vec<f64>), ClassifyError> {
    let f = model.forward(tokens)?;
    Ok((f.probability, f.attention))
}

/// Builds a vocabulary from the training texts and fits the model.
pub fn train_attentive(
    texts: &[&str],
    labels: &[u8],
    config: &AttentiveConfig,
) -> Result<(AttentivePoolModel, TrainReport), ClassifyError> {
    check_training_set(texts, labels)?;
    let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let vocabulary = Vocabulary::build(tokenized.iter().map(Vec::as_slice), config.min_freq);
    let mut rng = SplitMix64::new(config.seed);
    let mut model = AttentivePoolModel::init(vocabulary, config.dim, config.init_range, &mut rng);
    train_from(&mut model, texts, labels, config, &mut rng).map(|report| (model, report))
}

/// Continues training an existing model.
pub fn train_from(
    model: &mut AttentivePoolModel,
    texts: &[&str],
    labels: &[u8],
    config: &AttentiveConfig,
    rng: &mut SplitMix64,
) -> Result<TrainReport, ClassifyError> {
    check_training_set(texts, labels)?;
    let encoded: Vec<Vec<usize>> = texts.iter().map(|t| model.encode(t)).collect();
    let all: Vec<(&[usize], u8)> = encoded
        .iter()
        .map(Vec::as_slice)
        .zip(labels.iter().copied())
        .collect();
    let batch_size = config.batch_size.max(1);

    let mut order: Vec<usize> = (0..all.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 0..config.max_epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<(&[usize], u8)> = chunk.iter().map(|&i| all[i]).collect();
            let (_, grads) = model.loss_and_gradients(&batch)?;
            model.apply(&grads, config.learning_rate);
        }
        report.losses.push(model.loss(&all)?);
        report.epochs = epoch + 1;
        if epoch >= config.patience {
            let then = report.losses[epoch - config.patience];
            if libm::fabs(then - report.losses[epoch]) < config.tolerance {
                break;
            }
        }
    }
    Ok(report)
}
