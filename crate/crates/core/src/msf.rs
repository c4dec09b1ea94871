//! Main-speaker sub-scene extraction.
//!
//! A window slides over the utterances of a scene and counts, per speaker,
//! how many of the utterances inside the window belong to that speaker. Each
//! speaker therefore gets an integer curve over window positions. Peaks of a
//! curve mark stretches where that speaker dominates the conversation, and
//! every peak yields a sub-scene whose main speaker is the curve's owner.
//!
//! Peaks are plateau-level local maxima: a maximal run of equal values is a
//! peak when the values on both sides of the run are strictly lower (or the
//! run touches the curve boundary) and the value reaches `min_peak_count`.
//! The peak is reported at the leftmost index of the run.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::transcript::{Scene, Utterance};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MsfError {
    #[error("scene {episode_id}/{scene_id} has no utterances")]
    EmptyScene {
        episode_id: String,
        scene_id: String,
    },
    #[error("invalid window configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Sliding-window and peak parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_size: usize,
    pub stride: usize,
    pub min_peak_count: usize,
    /// Extra utterances of context added on both sides of a span.
    pub pad: usize,
    /// Merge overlapping spans that share a main speaker.
    pub merge_overlapping: bool,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_size: 5,
            stride: 1,
            min_peak_count: 3,
            pad: 0,
            merge_overlapping: false,
        }
    }
}

impl WindowConfig {
    pub fn new(window_size: usize, stride: usize, min_peak_count: usize) -> Result<Self, MsfError> {
        let cfg = WindowConfig {
            window_size,
            stride,
            min_peak_count,
            ..WindowConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MsfError> {
        if self.window_size == 0 {
            return Err(MsfError::InvalidConfig("window_size must be at least 1"));
        }
        if self.stride == 0 {
            return Err(MsfError::InvalidConfig("stride must be at least 1"));
        }
        if self.min_peak_count > self.window_size {
            return Err(MsfError::InvalidConfig(
                "min_peak_count must not exceed window_size",
            ));
        }
        Ok(())
    }

    /// Number of window positions over a scene of `n` utterances.
    ///
    /// A scene no longer than the window is a single position.
    pub fn positions(&self, n: usize) -> usize {
        if n <= self.window_size {
            1
        } else {
            (n - self.window_size) / self.stride + 1
        }
    }

    /// Inclusive utterance range covered by window position `p`.
    pub fn window(&self, p: usize, n: usize) -> (usize, usize) {
        let start = p * self.stride;
        let end = (start + self.window_size).min(n) - 1;
        (start, end)
    }
}

/// Per-speaker utterance counts at every window position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceCurve {
    pub speaker: String,
    pub values: Vec<usize>,
}

/// A peak at `position` whose plateau extends to `plateau_end` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Peak {
    pub position: usize,
    pub plateau_end: usize,
}

/// Inclusive utterance range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubScene {
    pub id: String,
    pub episode_id: String,
    pub scene_id: String,
    pub main_speaker: String,
    pub span: Span,
    pub peak_position: usize,
    pub utterances: Vec<Utterance>,
}

impl SubScene {
    /// Canonical identifier: `episode:scene:start-end:speaker`.
    pub fn make_id(episode_id: &str, scene_id: &str, span: Span, speaker: &str) -> String {
        format!(
            "{episode_id}:{scene_id}:{}-{}:{speaker}",
            span.start, span.end
        )
    }
}

fn ensure_non_empty(scene: &Scene) -> Result<(), MsfError> {
    if scene.is_empty() {
        return Err(MsfError::EmptyScene {
            episode_id: scene.episode_id.clone(),
            scene_id: scene.scene_id.clone(),
        });
    }
    Ok(())
}

/// One curve per distinct speaker, in order of first utterance.
pub fn utterance_curves(
    scene: &Scene,
    config: &WindowConfig,
) -> Result<Vec<UtteranceCurve>, MsfError> {
    config.validate()?;
    ensure_non_empty(scene)?;
    let n = scene.len();
    let speakers = scene.speakers();
    let positions = config.positions(n);

    // speaker slot of every utterance
    let slots: Vec<usize> = scene
        .utterances
        .iter()
        .map(|u| {
            speakers
                .iter()
                .position(|s| *s == u.speaker)
                .unwrap_or_default()
        })
        .collect();

    let mut curves: Vec<UtteranceCurve> = speakers
        .iter()
        .map(|s| UtteranceCurve {
            speaker: String::from(*s),
            values: Vec::with_capacity(positions),
        })
        .collect();

    // prefix[i] holds per-speaker counts over utterances[..i]
    let mut prefix = alloc::vec![alloc::vec![0usize; speakers.len()]; n + 1];
    for (i, &slot) in slots.iter().enumerate() {
        let (done, rest) = prefix.split_at_mut(i + 1);
        rest[0].copy_from_slice(&done[i]);
        rest[0][slot] += 1;
    }
    for p in 0..positions {
        let (start, end) = config.window(p, n);
        for (k, curve) in curves.iter_mut().enumerate() {
            curve.values.push(prefix[end + 1][k] - prefix[start][k]);
        }
    }
    Ok(curves)
}

/// Peaks with their plateau extents, ascending by position.
pub fn find_plateau_peaks(values: &[usize], min_peak_count: usize) -> Vec<Peak> {
    let mut peaks = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let v = values[start];
        let mut end = start;
        while end + 1 < values.len() && values[end + 1] == v {
            end += 1;
        }
        let left_lower = start == 0 || values[start - 1] < v;
        let right_lower = end + 1 == values.len() || values[end + 1] < v;
        if v >= min_peak_count && left_lower && right_lower {
            peaks.push(Peak {
                position: start,
                plateau_end: end,
            });
        }
        start = end + 1;
    }
    peaks
}

/// Peak window indices of a curve, ascending.
pub fn find_peaks(curve: &UtteranceCurve, config: &WindowConfig) -> Vec<usize> {
    find_plateau_peaks(&curve.values, config.min_peak_count)
        .into_iter()
        .map(|p| p.position)
        .collect()
}

/// Extracts one sub-scene per (speaker, peak).
///
/// The span of a sub-scene is the peak window extended to the right across
/// the whole plateau, then padded by `config.pad` on both sides. Duplicate
/// `(main_speaker, span)` pairs are emitted once. Output is ordered by span
/// and then by speaker first appearance.
pub fn extract_subscenes(scene: &Scene, config: &WindowConfig) -> Result<Vec<SubScene>, MsfError> {
    let curves = utterance_curves(scene, config)?;
    let n = scene.len();

    let mut found: Vec<(usize, Span, usize)> = Vec::new();
    for (speaker_slot, curve) in curves.iter().enumerate() {
        let mut spans: Vec<(Span, usize)> =
            find_plateau_peaks(&curve.values, config.min_peak_count)
                .into_iter()
                .map(|peak| {
                    let (start, _) = config.window(peak.position, n);
                    let (_, end) = config.window(peak.plateau_end, n);
                    let span = Span {
                        start: start.saturating_sub(config.pad),
                        end: (end + config.pad).min(n - 1),
                    };
                    (span, peak.position)
                })
                .collect();
        if config.merge_overlapping {
            spans = merge_spans(spans);
        }
        for (span, position) in spans {
            if !found
                .iter()
                .any(|&(s, sp, _)| s == speaker_slot && sp == span)
            {
                found.push((speaker_slot, span, position));
            }
        }
    }
    found.sort_by_key(|&(slot, span, _)| (span, slot));

    Ok(found
        .into_iter()
        .map(|(slot, span, peak_position)| {
            let speaker = &curves[slot].speaker;
            SubScene {
                id: SubScene::make_id(&scene.episode_id, &scene.scene_id, span, speaker),
                episode_id: scene.episode_id.clone(),
                scene_id: scene.scene_id.clone(),
                main_speaker: speaker.clone(),
                span,
                peak_position,
                utterances: scene.utterances[span.start..=span.end].to_vec(),
            }
        })
        .collect())
}

// spans arrive ascending by peak position, hence ascending by start
fn merge_spans(spans: Vec<(Span, usize)>) -> Vec<(Span, usize)> {
    let mut out: Vec<(Span, usize)> = Vec::with_capacity(spans.len());
    for (span, pos) in spans {
        match out.last_mut() {
            Some((last, _)) if last.overlaps(&span) => last.end = last.end.max(span.end),
            _ => out.push((span, pos)),
        }
    }
    out
}
