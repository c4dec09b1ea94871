//! Annotation storage and aggregation into binary trait labels.
//!
//! Every annotator scores every trait of a sub-scene with -1, 0 or +1. Scores
//! are summed per (sub-scene, trait) and the sums of one trait are split at
//! their corpus-wide median.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::traits::{Trait, TraitMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("unknown sub-scene {0:?}")]
    UnknownSubScene(String),
    #[error("score {value} for {trait_} is outside {{-1, 0, 1}}")]
    ScoreRange { trait_: Trait, value: i64 },
    #[error("median split of {trait_} needs at least 2 items, got {count}")]
    InsufficientData { trait_: Trait, count: usize },
}

/// A single judgment in {-1, 0, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Score(i8);

impl Score {
    pub const NEGATIVE: Score = Score(-1);
    pub const NEUTRAL: Score = Score(0);
    pub const POSITIVE: Score = Score(1);
    pub const ALL: [Score; 3] = [Score::NEGATIVE, Score::NEUTRAL, Score::POSITIVE];

    pub fn new(value: i64) -> Option<Score> {
        matches!(value, -1..=1).then_some(Score(value as i8))
    }

    pub const fn value(self) -> i8 {
        self.0
    }

    /// Category index 0, 1, 2 for -1, 0, +1.
    pub const fn category(self) -> usize {
        (self.0 + 1) as usize
    }
}

impl TryFrom<i64> for Score {
    type Error = &'static str;
    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Score::new(v).ok_or("score must be -1, 0 or 1")
    }
}

impl From<Score> for i64 {
    fn from(s: Score) -> i64 {
        s.0 as i64
    }
}

/// Validates raw per-trait integers into scores.
pub fn scores_from_raw(raw: &TraitMap<i64>) -> Result<TraitMap<Score>, AnnotationError> {
    let mut out = TraitMap([Score::NEUTRAL; 5]);
    for (t, &v) in raw.iter() {
        out[t] = Score::new(v).ok_or(AnnotationError::ScoreRange {
            trait_: t,
            value: v,
        })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub subscene_id: String,
    pub annotator_id: String,
    pub scores: TraitMap<Score>,
    /// Milliseconds since the Unix epoch, UTC.
    pub timestamp_ms: i64,
}

/// Outcome of an upsert.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Upsert {
    Inserted,
    Replaced(AnnotationRecord),
}

/// In-memory annotation store keyed by (sub-scene, annotator).
#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    known: BTreeSet<String>,
    records: BTreeMap<(String, String), AnnotationRecord>,
}

impl AnnotationStore {
    pub fn new<I, S>(subscene_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AnnotationStore {
            known: subscene_ids.into_iter().map(Into::into).collect(),
            records: BTreeMap::new(),
        }
    }

    pub fn register_subscene(&mut self, id: impl Into<String>) {
        self.known.insert(id.into());
    }

    pub fn knows(&self, subscene_id: &str) -> bool {
        self.known.contains(subscene_id)
    }

    pub fn subscene_ids(&self) -> impl Iterator<Item = &str> {
        self.known.iter().map(String::as_str)
    }

    /// Inserts a record, replacing any earlier one by the same annotator.
    pub fn record(&mut self, record: AnnotationRecord) -> Result<Upsert, AnnotationError> {
        if !self.known.contains(&record.subscene_id) {
            return Err(AnnotationError::UnknownSubScene(record.subscene_id));
        }
        let key = (record.subscene_id.clone(), record.annotator_id.clone());
        Ok(match self.records.insert(key, record) {
            Some(prev) => Upsert::Replaced(prev),
            None => Upsert::Inserted,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All records ordered by sub-scene, then annotator.
    pub fn records(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.records.values()
    }

    pub fn get(&self, subscene_id: &str, annotator_id: &str) -> Option<&AnnotationRecord> {
        self.records
            .get(&(String::from(subscene_id), String::from(annotator_id)))
    }

    /// Records for one sub-scene, ordered by annotator id.
    pub fn for_subscene<'a>(
        &'a self,
        subscene_id: &'a str,
    ) -> impl Iterator<Item = &'a AnnotationRecord> + 'a {
        self.records
            .range((String::from(subscene_id), String::new())..)
            .take_while(move |((s, _), _)| s == subscene_id)
            .map(|(_, r)| r)
    }

    pub fn count_for(&self, subscene_id: &str) -> usize {
        self.for_subscene(subscene_id).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitSum {
    pub subscene_id: String,
    pub trait_: Trait,
    pub sum: i32,
    pub n_annotators: usize,
}

/// One sum per (sub-scene, trait) that has at least one annotation.
///
/// Ordered by sub-scene id, then trait.
pub fn trait_sums(store: &AnnotationStore) -> Vec<TraitSum> {
    let mut acc: BTreeMap<&str, (TraitMap<i32>, usize)> = BTreeMap::new();
    for r in store.records() {
        let entry = acc.entry(&r.subscene_id).or_default();
        for (t, s) in r.scores.iter() {
            entry.0[t] += s.value() as i32;
        }
        entry.1 += 1;
    }
    acc.into_iter()
        .flat_map(|(id, (sums, n))| {
            Trait::ALL.into_iter().map(move |t| TraitSum {
                subscene_id: String::from(id),
                trait_: t,
                sum: sums[t],
                n_annotators: n,
            })
        })
        .collect()
}

/// A number that is an integer or an integer plus one half, stored doubled.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct HalfInt {
    pub twice: i64,
}

impl HalfInt {
    pub const fn from_int(v: i64) -> Self {
        HalfInt { twice: 2 * v }
    }

    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            let sign = if self.twice < 0 { "-" } else { "" };
            write!(f, "{sign}{}.5", self.twice.abs() / 2)
        }
    }
}

/// Median of integer values; even counts average the two middle values.
pub fn median(values: &[i32]) -> Option<HalfInt> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let twice = if n % 2 == 1 {
        2 * sorted[n / 2] as i64
    } else {
        sorted[n / 2 - 1] as i64 + sorted[n / 2] as i64
    };
    Some(HalfInt { twice })
}

/// Where items equal to the median go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TiePolicy {
    /// label 1 iff sum > median
    #[default]
    Above,
    /// label 1 iff sum >= median
    AtOrAbove,
}

impl TiePolicy {
    pub fn label(self, sum: i32, median: HalfInt) -> u8 {
        let twice = 2 * sum as i64;
        let hit = match self {
            TiePolicy::Above => twice > median.twice,
            TiePolicy::AtOrAbove => twice >= median.twice,
        };
        hit as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregationWarning {
    /// Every item fell into the same class.
    DegenerateSplit { trait_: Trait },
    /// An item did not have the expected number of annotators.
    AnnotatorCount { subscene_id: String, count: usize },
}

impl fmt::Display for AggregationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationWarning::DegenerateSplit { trait_ } => {
                write!(f, "median split of {trait_} put every item in one class")
            }
            AggregationWarning::AnnotatorCount { subscene_id, count } => {
                write!(f, "sub-scene {subscene_id} has {count} annotations")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedianSplit {
    pub trait_: Trait,
    pub median: HalfInt,
    /// `(subscene_id, label)` in input order.
    pub labels: Vec<(String, u8)>,
    pub warnings: Vec<AggregationWarning>,
}

/// Binarizes the sums of one trait at their median.
pub fn median_split(
    sums: &[TraitSum],
    trait_: Trait,
    tie: TiePolicy,
) -> Result<MedianSplit, AnnotationError> {
    let of_trait: Vec<&TraitSum> = sums.iter().filter(|s| s.trait_ == trait_).collect();
    if of_trait.len() < 2 {
        return Err(AnnotationError::InsufficientData {
            trait_,
            count: of_trait.len(),
        });
    }
    let values: Vec<i32> = of_trait.iter().map(|s| s.sum).collect();
    let m = median(&values).expect("non-empty");
    let labels: Vec<(String, u8)> = of_trait
        .iter()
        .map(|s| (s.subscene_id.clone(), tie.label(s.sum, m)))
        .collect();
    let mut warnings = Vec::new();
    let ones = labels.iter().filter(|(_, l)| *l == 1).count();
    if ones == 0 || ones == labels.len() {
        warnings.push(AggregationWarning::DegenerateSplit { trait_ });
    }
    Ok(MedianSplit {
        trait_,
        median: m,
        labels,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryLabelSet {
    pub subscene_id: String,
    pub labels: TraitMap<u8>,
    pub medians: TraitMap<HalfInt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateOptions {
    pub tie: TiePolicy,
    /// Items with fewer annotations are left out of the split.
    pub min_annotators: usize,
    /// Expected annotator count; other counts produce a warning.
    pub expected_annotators: usize,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions {
            tie: TiePolicy::Above,
            min_annotators: 3,
            expected_annotators: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub labels: Vec<BinaryLabelSet>,
    pub medians: TraitMap<HalfInt>,
    pub excluded: Vec<String>,
    pub warnings: Vec<AggregationWarning>,
}

/// Sums, filters and median-splits every trait of the store.
pub fn aggregate(
    store: &AnnotationStore,
    options: &AggregateOptions,
) -> Result<Aggregation, AnnotationError> {
    let all = trait_sums(store);
    let mut warnings = Vec::new();
    let mut excluded = Vec::new();
    let mut kept = Vec::with_capacity(all.len());
    for s in all {
        if s.trait_ == Trait::Agreeableness && s.n_annotators != options.expected_annotators {
            warnings.push(AggregationWarning::AnnotatorCount {
                subscene_id: s.subscene_id.clone(),
                count: s.n_annotators,
            });
        }
        if s.n_annotators < options.min_annotators {
            if s.trait_ == Trait::Agreeableness {
                excluded.push(s.subscene_id.clone());
            }
            continue;
        }
        kept.push(s);
    }

    let mut medians = TraitMap::<HalfInt>::default();
    let mut by_id: BTreeMap<String, TraitMap<u8>> = BTreeMap::new();
    for t in Trait::ALL {
        let split = median_split(&kept, t, options.tie)?;
        medians[t] = split.median;
        warnings.extend(split.warnings);
        for (id, label) in split.labels {
            by_id.entry(id).or_default()[t] = label;
        }
    }
    let labels = by_id
        .into_iter()
        .map(|(subscene_id, labels)| BinaryLabelSet {
            subscene_id,
            labels,
            medians,
        })
        .collect();
    Ok(Aggregation {
        labels,
        medians,
        excluded,
        warnings,
    })
}
