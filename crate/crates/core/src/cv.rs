//! Seeded k-fold cross-validation.
//!
//! Fold assignment is fixed by name so that other implementations reproduce
//! it exactly: the indices `0..n` are shuffled with Fisher-Yates driven by
//! splitmix64 from the seed (`j = next() % (i + 1)` for `i` from `n-1` down
//! to 1), then dealt round-robin, position `p` of the shuffled list going to
//! fold `p % k`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classify::{ClassifyError, Labeled, ModelSpec};
use crate::rng::SplitMix64;
use crate::traits::Trait;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CvError {
    #[error("k = {k} is invalid for {n} items (need 2 <= k <= n)")]
    BadK { n: usize, k: usize },
    #[error("fold plan covers {plan} items but {items} were given")]
    PlanMismatch { plan: usize, items: usize },
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: ClassifyError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_items: usize,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

fn check_k(n: usize, k: usize) -> Result<(), CvError> {
    if k < 2 || k > n {
        return Err(CvError::BadK { n, k });
    }
    Ok(())
}

fn deal(order: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut folds = alloc::vec![Vec::new(); k];
    for (p, &i) in order.iter().enumerate() {
        folds[p % k].push(i);
    }
    folds
}

pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan, CvError> {
    check_k(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    Ok(FoldPlan {
        n_items: n,
        k,
        seed,
        folds: deal(&order, k),
    })
}

/// Like [`kfold_split`], but after shuffling the items are regrouped by label
/// (class 0 first, shuffled order kept within a class) before dealing, so
/// every fold gets a near-equal share of each class.
pub fn stratified_kfold_split(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan, CvError> {
    let n = labels.len();
    check_k(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    order.sort_by_key(|&i| labels[i]);
    Ok(FoldPlan {
        n_items: n,
        k,
        seed,
        folds: deal(&order, k),
    })
}

impl FoldPlan {
    pub fn test(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Training indices of a fold: the other folds concatenated in fold order.
    pub fn train(&self, fold: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }

    /// True when the folds partition `0..n_items`.
    pub fn is_partition(&self) -> bool {
        let mut seen = alloc::vec![false; self.n_items];
        for &i in self.folds.iter().flatten() {
            if i >= self.n_items || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// Rewrites the plan for items reordered so that old item `i` sits at `new_index[i]`.
    pub fn remap(&self, new_index: &[usize]) -> FoldPlan {
        FoldPlan {
            folds: self
                .folds
                .iter()
                .map(|f| f.iter().map(|&i| new_index[i]).collect())
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CvMode {
    #[default]
    Standard,
    /// Trains on every item, test fold included. Harness self-check only.
    Smoke,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub correct: usize,
    pub total: usize,
    /// Share of the most frequent class in the test fold.
    pub majority_share: f64,
}

impl FoldResult {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub trait_: Trait,
    pub model: alloc::string::String,
    pub folds: Vec<FoldResult>,
}

impl CvReport {
    /// Mean of the per-fold accuracies, as a fraction.
    pub fn mean_accuracy(&self) -> f64 {
        self.folds.iter().map(FoldResult::accuracy).sum::<f64>() / self.folds.len() as f64
    }

    pub fn mean_percent(&self) -> f64 {
        100.0 * self.mean_accuracy()
    }
}

/// Share of correct predictions.
pub fn accuracy(predicted: &[u8], truth: &[u8]) -> f64 {
    let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    correct as f64 / truth.len() as f64
}

/// Trains on the complement of one fold and scores the fold.
pub fn run_fold<T: Labeled>(
    items: &[T],
    trait_: Trait,
    spec: &ModelSpec,
    plan: &FoldPlan,
    fold: usize,
    mode: CvMode,
) -> Result<FoldResult, CvError> {
    if plan.n_items != items.len() {
        return Err(CvError::PlanMismatch {
            plan: plan.n_items,
            items: items.len(),
        });
    }
    let train = match mode {
        CvMode::Standard => plan.train(fold),
        CvMode::Smoke => (0..items.len()).collect(),
    };
    let texts: Vec<&str> = train.iter().map(|&i| items[i].text()).collect();
    let labels: Vec<u8> = train.iter().map(|&i| items[i].label(trait_)).collect();
    let model = spec
        .train(&texts, &labels)
        .map_err(|source| CvError::Fold { fold, source })?;

    let test = plan.test(fold);
    let mut correct = 0;
    let mut ones = 0;
    for &i in test {
        let y = items[i].label(trait_);
        ones += y as usize;
        correct += (model.predict(items[i].text()) == y) as usize;
    }
    let total = test.len();
    Ok(FoldResult {
        fold,
        correct,
        total,
        majority_share: ones.max(total - ones) as f64 / total as f64,
    })
}

/// Assembles a report from fold results in any order.
pub fn collect_report(trait_: Trait, spec: &ModelSpec, mut folds: Vec<FoldResult>) -> CvReport {
    folds.sort_by_key(|f| f.fold);
    CvReport {
        trait_,
        model: spec.name().into(),
        folds,
    }
}

pub fn cross_validate<T: Labeled>(
    items: &[T],
    trait_: Trait,
    spec: &ModelSpec,
    plan: &FoldPlan,
) -> Result<CvReport, CvError> {
    cross_validate_mode(items, trait_, spec, plan, CvMode::Standard)
}

pub fn cross_validate_mode<T: Labeled>(
    items: &[T],
    trait_: Trait,
    spec: &ModelSpec,
    plan: &FoldPlan,
    mode: CvMode,
) -> Result<CvReport, CvError> {
    let folds = (0..plan.k)
        .map(|fold| run_fold(items, trait_, spec, plan, fold, mode))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(collect_report(trait_, spec, folds))
}

/// Share of the dominant class over a whole label set.
pub fn majority_share(labels: &[u8]) -> f64 {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    ones.max(labels.len() - ones) as f64 / labels.len() as f64
}
