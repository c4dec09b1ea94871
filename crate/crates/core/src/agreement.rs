//! Inter-annotator agreement: Cohen's kappa between pairs of raters and
//! Fleiss' kappa across a fixed number of raters per item.
//!
//! Ratings are the raw ternary scores, not the binarized labels.

use alloc::string::String;
use alloc::vec::Vec;

use crate::annotation::{AnnotationStore, Score};
use crate::traits::{Trait, TraitMap};

const CATEGORIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgreementError {
    #[error("rating lists differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("no ratings to compare")]
    EmptyInput,
    #[error("item {item} has {found} ratings, expected {expected}")]
    UnequalRaterCount {
        item: usize,
        expected: usize,
        found: usize,
    },
    #[error("need at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("row {item} has {found} columns, expected {expected}")]
    RaggedMatrix {
        item: usize,
        expected: usize,
        found: usize,
    },
}

/// Disagreement weighting for Cohen's kappa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Agreement weight `1 - |i - j| / (k - 1)` over the ordered categories.
    Linear,
}

impl Weighting {
    fn weight(self, i: usize, j: usize) -> f64 {
        match self {
            Weighting::Unweighted => (i == j) as u8 as f64,
            Weighting::Linear => 1.0 - i.abs_diff(j) as f64 / (CATEGORIES - 1) as f64,
        }
    }
}

/// Unweighted Cohen's kappa.
///
/// When chance agreement is 1 (both raters used one and the same category
/// throughout) observed agreement is also 1 and the result is 1.
pub fn cohen_kappa(r1: &[Score], r2: &[Score]) -> Result<f64, AgreementError> {
    weighted_cohen_kappa(r1, r2, Weighting::Unweighted)
}

pub fn weighted_cohen_kappa(
    r1: &[Score],
    r2: &[Score],
    weighting: Weighting,
) -> Result<f64, AgreementError> {
    if r1.len() != r2.len() {
        return Err(AgreementError::LengthMismatch {
            left: r1.len(),
            right: r2.len(),
        });
    }
    if r1.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let n = r1.len() as f64;
    let mut m1 = [0usize; CATEGORIES];
    let mut m2 = [0usize; CATEGORIES];
    let mut observed = 0.0;
    for (a, b) in r1.iter().zip(r2) {
        m1[a.category()] += 1;
        m2[b.category()] += 1;
        observed += weighting.weight(a.category(), b.category());
    }
    let p_o = observed / n;
    let mut p_e = 0.0;
    for (i, &a) in m1.iter().enumerate() {
        for (j, &b) in m2.iter().enumerate() {
            p_e += weighting.weight(i, j) * (a as f64 / n) * (b as f64 / n);
        }
    }
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Ratings of one trait: items × raters, `None` where a rater skipped an item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    pub ratings: Vec<Vec<Option<Score>>>,
}

/// How annotations of an item are assigned to rater columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RaterSlots {
    /// One column per annotator id.
    #[default]
    ByAnnotator,
    /// Column k holds the k-th annotation of each item by submission time
    /// (ties broken by annotator id), for crowds where annotators vary per item.
    BySubmissionOrder,
}

impl RatingMatrix {
    pub fn new(
        items: Vec<String>,
        raters: Vec<String>,
        ratings: Vec<Vec<Option<Score>>>,
    ) -> Result<Self, AgreementError> {
        for (item, row) in ratings.iter().enumerate() {
            if row.len() != raters.len() {
                return Err(AgreementError::RaggedMatrix {
                    item,
                    expected: raters.len(),
                    found: row.len(),
                });
            }
        }
        Ok(RatingMatrix {
            items,
            raters,
            ratings,
        })
    }

    /// A complete matrix from rows of scores; raters are named `r0`, `r1`, ...
    pub fn complete(rows: &[Vec<Score>]) -> Result<Self, AgreementError> {
        let width = rows.first().map_or(0, Vec::len);
        let raters = (0..width).map(|i| alloc::format!("r{i}")).collect();
        let items = (0..rows.len()).map(|i| alloc::format!("item{i}")).collect();
        let ratings = rows
            .iter()
            .map(|r| r.iter().copied().map(Some).collect())
            .collect();
        RatingMatrix::new(items, raters, ratings)
    }

    /// Builds one matrix per trait from a store. Sub-scenes without
    /// annotations are left out.
    pub fn from_store(store: &AnnotationStore, slots: RaterSlots) -> TraitMap<RatingMatrix> {
        let mut items: Vec<String> = Vec::new();
        let mut per_item: Vec<Vec<&crate::annotation::AnnotationRecord>> = Vec::new();
        for r in store.records() {
            if items.last() != Some(&r.subscene_id) {
                items.push(r.subscene_id.clone());
                per_item.push(Vec::new());
            }
            per_item.last_mut().expect("pushed").push(r);
        }
        let raters: Vec<String> = match slots {
            RaterSlots::ByAnnotator => {
                let mut ids: Vec<String> =
                    store.records().map(|r| r.annotator_id.clone()).collect();
                ids.sort();
                ids.dedup();
                ids
            }
            RaterSlots::BySubmissionOrder => {
                let width = per_item.iter().map(Vec::len).max().unwrap_or(0);
                (0..width)
                    .map(|i| alloc::format!("slot{}", i + 1))
                    .collect()
            }
        };
        TraitMap::from_fn(|t| {
            let ratings = per_item
                .iter()
                .map(|recs| {
                    let mut row = alloc::vec![None; raters.len()];
                    match slots {
                        RaterSlots::ByAnnotator => {
                            for r in recs {
                                let col = raters.binary_search(&r.annotator_id).expect("collected");
                                row[col] = Some(r.scores[t]);
                            }
                        }
                        RaterSlots::BySubmissionOrder => {
                            let mut ordered = recs.clone();
                            ordered.sort_by(|a, b| {
                                (a.timestamp_ms, &a.annotator_id)
                                    .cmp(&(b.timestamp_ms, &b.annotator_id))
                            });
                            for (col, r) in ordered.into_iter().enumerate() {
                                row[col] = Some(r.scores[t]);
                            }
                        }
                    }
                    row
                })
                .collect();
            RatingMatrix {
                items: items.clone(),
                raters: raters.clone(),
                ratings,
            }
        })
    }

    /// Ratings of two raters on the items both of them rated.
    pub fn co_rated(&self, a: usize, b: usize) -> (Vec<Score>, Vec<Score>) {
        self.ratings
            .iter()
            .filter_map(|row| Some((row[a]?, row[b]?)))
            .unzip()
    }

    /// Keeps only items rated by exactly `n` raters.
    pub fn with_rater_count(&self, n: usize) -> RatingMatrix {
        let keep: Vec<usize> = (0..self.ratings.len())
            .filter(|&i| self.ratings[i].iter().flatten().count() == n)
            .collect();
        RatingMatrix {
            items: keep.iter().map(|&i| self.items[i].clone()).collect(),
            raters: self.raters.clone(),
            ratings: keep.iter().map(|&i| self.ratings[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairKappa {
    pub trait_: Trait,
    pub rater_a: usize,
    pub rater_b: usize,
    pub kappa: f64,
    pub n_items: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseSummary {
    pub pairs: Vec<PairKappa>,
    /// Mean over pairs, per trait.
    pub per_trait: TraitMap<f64>,
    /// Every (pair, trait) kappa weighted equally.
    pub mean: f64,
    /// Each (pair, trait) kappa weighted by its number of co-rated items.
    pub item_weighted_mean: f64,
}

/// Cohen's kappa for every unordered rater pair of one matrix.
///
/// Pairs without co-rated items are skipped.
pub fn pairwise_kappas(
    matrix: &RatingMatrix,
    trait_: Trait,
) -> Result<Vec<PairKappa>, AgreementError> {
    pairwise_kappas_weighted(matrix, trait_, Weighting::Unweighted)
}

pub fn pairwise_kappas_weighted(
    matrix: &RatingMatrix,
    trait_: Trait,
    weighting: Weighting,
) -> Result<Vec<PairKappa>, AgreementError> {
    let r = matrix.raters.len();
    if r < 2 {
        return Err(AgreementError::TooFewRaters(r));
    }
    let mut out = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            let (x, y) = matrix.co_rated(a, b);
            if x.is_empty() {
                continue;
            }
            out.push(PairKappa {
                trait_,
                rater_a: a,
                rater_b: b,
                kappa: weighted_cohen_kappa(&x, &y, weighting)?,
                n_items: x.len(),
            });
        }
    }
    Ok(out)
}

/// Average of Cohen's kappa over all rater pairs and all five traits.
pub fn average_pairwise_kappa(
    matrices: &TraitMap<RatingMatrix>,
) -> Result<PairwiseSummary, AgreementError> {
    average_pairwise_kappa_weighted(matrices, Weighting::Unweighted)
}

pub fn average_pairwise_kappa_weighted(
    matrices: &TraitMap<RatingMatrix>,
    weighting: Weighting,
) -> Result<PairwiseSummary, AgreementError> {
    let mut pairs = Vec::new();
    let mut per_trait = TraitMap::<f64>::default();
    for (t, m) in matrices.iter() {
        let ks = pairwise_kappas_weighted(m, t, weighting)?;
        if ks.is_empty() {
            return Err(AgreementError::EmptyInput);
        }
        per_trait[t] = ks.iter().map(|k| k.kappa).sum::<f64>() / ks.len() as f64;
        pairs.extend(ks);
    }
    let mean = pairs.iter().map(|k| k.kappa).sum::<f64>() / pairs.len() as f64;
    let total: usize = pairs.iter().map(|k| k.n_items).sum();
    let item_weighted_mean = pairs
        .iter()
        .map(|k| k.kappa * k.n_items as f64)
        .sum::<f64>()
        / total as f64;
    Ok(PairwiseSummary {
        pairs,
        per_trait,
        mean,
        item_weighted_mean,
    })
}

/// Fleiss' kappa. Every item must carry the same number `n >= 2` of ratings.
///
/// If all ratings fall in one category the chance term is 1 and, since the
/// observed agreement is then perfect too, the result is 1.
pub fn fleiss_kappa(matrix: &RatingMatrix) -> Result<f64, AgreementError> {
    if matrix.ratings.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let mut counts: Vec<[usize; CATEGORIES]> = Vec::with_capacity(matrix.ratings.len());
    let mut n_raters = None;
    for (item, row) in matrix.ratings.iter().enumerate() {
        let mut c = [0usize; CATEGORIES];
        for s in row.iter().flatten() {
            c[s.category()] += 1;
        }
        let n: usize = c.iter().sum();
        match n_raters {
            None if n < 2 => return Err(AgreementError::TooFewRaters(n)),
            None => n_raters = Some(n),
            Some(expected) if expected != n => {
                return Err(AgreementError::UnequalRaterCount {
                    item,
                    expected,
                    found: n,
                })
            }
            Some(_) => {}
        }
        counts.push(c);
    }
    let n = n_raters.expect("non-empty") as f64;
    let items = counts.len() as f64;

    let p_bar = counts
        .iter()
        .map(|c| {
            c.iter()
                .map(|&k| (k * k.saturating_sub(1)) as f64)
                .sum::<f64>()
                / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..CATEGORIES)
        .map(|j| {
            let p = counts.iter().map(|c| c[j]).sum::<usize>() as f64 / (items * n);
            p * p
        })
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}
