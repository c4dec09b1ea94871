//! Acceptance suite: one status line per criterion.
//!
//! Dataset-dependent checks read the published files from
//! `PERSONA_FRIENDS_LABELS` (FriendsPersona label table, CSV) and
//! `PERSONA_ESSAYS` (essays table, CSV). Without them those lines report
//! SKIP and say why; they never report PASS.

use std::time::{Duration, Instant};

use persona::labels::{self, majority_shares, LabelRow};
use persona_core::agreement::{average_pairwise_kappa, cohen_kappa, fleiss_kappa, RatingMatrix};
use persona_core::annotation::{median_split, Score, TiePolicy, TraitSum};
use persona_core::classify::attentive::{AttentiveConfig, AttentivePoolModel};
use persona_core::classify::train_attentive;
use persona_core::cv::kfold_split;
use persona_core::formats::{
    anonymize, anonymize_with, to_full, to_single, to_single_plus_context, AnonymizeOptions,
};
use persona_core::msf::{extract_subscenes, utterance_curves, Span, SubScene, WindowConfig};
use persona_core::results::render_percent;
use persona_core::rng::SplitMix64;
use persona_core::text::{tokenize, Vocabulary, CONTEXT_SEPARATOR};
use persona_core::transcript::Utterance;
use persona_core::{Scene, Trait, TraitMap};

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

type Suite = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(format!("{detail} in {took:.2?}"))
}

// ---------------------------------------------------------------- majority

const FRIENDS_MAJORITY: [f64; 5] = [56.96, 53.59, 56.12, 64.98, 53.31];
const FRIENDS_ITEMS: usize = 711;
const ESSAYS_MAJORITY: [f64; 5] = [53.08, 50.81, 51.74, 51.54, 50.04];
const ESSAYS_ITEMS: usize = 2468;

fn compare_shares(
    shares: &TraitMap<f64>,
    expected: &[f64; 5],
    n: usize,
    expected_n: usize,
) -> Check {
    ensure(n == expected_n, || {
        format!("{n} items, expected {expected_n}")
    })?;
    let mut parts = Vec::new();
    for t in Trait::ALL {
        let got = 100.0 * shares[t];
        let want = expected[t.position()];
        ensure((got - want).abs() <= 0.01 + 1e-9, || {
            format!("{t} {got:.4}, expected {want}")
        })?;
        parts.push(format!("{t} {}", render_percent(shares[t])));
    }
    Ok(format!("{n} items, {}", parts.join(" ")))
}

/// A table with the given positive-class counts, to exercise the path
/// from label rows to rendered percentages when the real file is absent.
fn synthetic_rows(n: usize, positives: [usize; 5]) -> Vec<LabelRow> {
    (0..n)
        .map(|i| LabelRow {
            subscene_id: format!("x{i}"),
            main_speaker: None,
            text: None,
            labels: TraitMap::from_fn(|t| (i < positives[t.position()]) as u8),
        })
        .collect()
}

fn majority_check(
    var: &str,
    expected: &[f64; 5],
    expected_n: usize,
    load: fn(&str) -> Result<TraitMapN, String>,
    synthetic: [usize; 5],
) -> Status {
    match std::env::var(var) {
        Ok(path) => match timed(Duration::from_secs(60), || {
            let (shares, n) = load(&path)?;
            compare_shares(&shares, expected, n, expected_n)
        }) {
            Ok(d) => Status::Pass(d),
            Err(e) => Status::Fail(e),
        },
        Err(_) => {
            let rows = synthetic_rows(expected_n, synthetic);
            match compare_shares(&majority_shares(&rows), expected, rows.len(), expected_n) {
                Ok(_) => Status::Skip(format!(
                    "published data not available (set {var}); pipeline checked on a synthetic table with the same class counts"
                )),
                Err(e) => Status::Fail(format!("synthetic table: {e}")),
            }
        }
    }
}

type TraitMapN = (TraitMap<f64>, usize);

fn load_friends(path: &str) -> Result<TraitMapN, String> {
    let rows = labels::read(path.as_ref()).map_err(|e| e.to_string())?;
    Ok((majority_shares(&rows), rows.len()))
}

fn load_essays(path: &str) -> Result<TraitMapN, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{path}: {e}"))?;
    let docs = persona::ingest::parse_essays(&bytes).map_err(|e| e.to_string())?;
    let shares = TraitMap::from_fn(|t| {
        let l: Vec<u8> = docs.iter().map(|d| d.labels[t]).collect();
        persona_core::cv::majority_share(&l)
    });
    Ok((shares, docs.len()))
}

// ---------------------------------------------------------------- agreement

/// Cohen's kappa from a 3x3 contingency table in integer arithmetic.
fn oracle_cohen(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len() as i128;
    let mut table = [[0i128; 3]; 3];
    for (x, y) in a.iter().zip(b) {
        table[(x + 1) as usize][(y + 1) as usize] += 1;
    }
    let agree: i128 = (0..3).map(|c| table[c][c]).sum();
    let chance: i128 = (0..3)
        .map(|c| table[c].iter().sum::<i128>() * (0..3).map(|r| table[r][c]).sum::<i128>())
        .sum();
    if chance == n * n {
        return 1.0;
    }
    (agree * n - chance) as f64 / (n * n - chance) as f64
}

/// Fleiss' kappa from per-item category counts in integer arithmetic.
fn oracle_fleiss(rows: &[Vec<i64>]) -> f64 {
    let items = rows.len() as i128;
    let raters = rows[0].len() as i128;
    let mut totals = [0i128; 3];
    let mut pairs = 0i128;
    for row in rows {
        let mut c = [0i128; 3];
        for &s in row {
            c[(s + 1) as usize] += 1;
        }
        pairs += c.iter().map(|k| k * (k - 1)).sum::<i128>();
        for i in 0..3 {
            totals[i] += c[i];
        }
    }
    // P = pairs / (items r (r-1)),  Pe = sum totals^2 / (items r)^2
    let p_den = items * raters * (raters - 1);
    let e_num: i128 = totals.iter().map(|t| t * t).sum();
    let e_den = (items * raters).pow(2);
    if e_num == e_den {
        return 1.0;
    }
    (pairs * e_den - e_num * p_den) as f64 / (p_den * (e_den - e_num)) as f64
}

fn scores(v: &[i64]) -> Vec<Score> {
    v.iter()
        .map(|&x| Score::new(x).expect("in range"))
        .collect()
}

fn column(rows: &[Vec<i64>], r: usize) -> Vec<i64> {
    rows.iter().map(|row| row[r]).collect()
}

fn agreement_suite() -> Check {
    const TOL: f64 = 1e-12;
    let close = |a: f64, b: f64| (a - b).abs() <= TOL;

    let k =
        cohen_kappa(&scores(&[1, 1, 0, -1]), &scores(&[1, 0, 0, -1])).map_err(|e| e.to_string())?;
    ensure(close(k, 7.0 / 11.0), || {
        format!("worked Cohen example gave {k}")
    })?;
    let k = cohen_kappa(&scores(&[1, 0]), &scores(&[0, 1])).map_err(|e| e.to_string())?;
    ensure(close(k, -1.0), || format!("opposite raters gave {k}"))?;
    let k =
        cohen_kappa(&scores(&[1, 0, -1, 1]), &scores(&[1, 0, -1, 1])).map_err(|e| e.to_string())?;
    ensure(k == 1.0, || format!("perfect agreement gave {k}"))?;
    let m = RatingMatrix::complete(&[scores(&[1, 1, 0]), scores(&[0, 0, 1])])
        .map_err(|e| e.to_string())?;
    let f = fleiss_kappa(&m).map_err(|e| e.to_string())?;
    ensure(close(f, -1.0 / 3.0), || {
        format!("worked Fleiss example gave {f}")
    })?;

    let mut rng = SplitMix64::new(2024);
    let mut checked = 0;
    for _ in 0..300 {
        let items = 1 + rng.below(5);
        let rows: Vec<Vec<i64>> = (0..items)
            .map(|_| (0..3).map(|_| rng.below(3) as i64 - 1).collect())
            .collect();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let (x, y) = (column(&rows, a), column(&rows, b));
            let got = cohen_kappa(&scores(&x), &scores(&y)).map_err(|e| e.to_string())?;
            let want = oracle_cohen(&x, &y);
            ensure(close(got, want), || {
                format!("Cohen {x:?} vs {y:?}: {got} != {want}")
            })?;
        }
        let matrix = RatingMatrix::complete(&rows.iter().map(|r| scores(r)).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        // the degenerate case with disagreement has no defined value
        let want = oracle_fleiss(&rows);
        match fleiss_kappa(&matrix) {
            Ok(got) => ensure(close(got, want), || {
                format!("Fleiss {rows:?}: {got} != {want}")
            })?,
            Err(_) => ensure(!want.is_finite(), || {
                format!("Fleiss {rows:?} rejected, oracle {want}")
            })?,
        }
        // pairwise average over 5 identical trait copies equals the mean of the 3 pairs
        let pairs: Vec<f64> = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| oracle_cohen(&column(&rows, a), &column(&rows, b)))
            .collect();
        let summary = average_pairwise_kappa(&TraitMap::from_fn(|_| matrix.clone()))
            .map_err(|e| e.to_string())?;
        let mean = pairs.iter().sum::<f64>() / 3.0;
        ensure((summary.mean - mean).abs() <= TOL, || {
            format!("pairwise mean {} != {mean}", summary.mean)
        })?;
        checked += 1;
    }
    Ok(format!(
        "{checked} random matrices and 4 worked examples within {TOL:e}"
    ))
}

// ---------------------------------------------------------------- MSF

fn brute_counts(speakers: &[u8], who: u8, window: usize) -> Vec<usize> {
    let n = speakers.len();
    let positions = if n <= window { 1 } else { n - window + 1 };
    (0..positions)
        .map(|p| {
            speakers[p..(p + window).min(n)]
                .iter()
                .filter(|&&s| s == who)
                .count()
        })
        .collect()
}

/// Plateau maxima at or above `min`, reported at their left edge with the plateau end.
fn brute_peaks(v: &[usize], min: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut p = 0;
    while p < v.len() {
        let mut q = p;
        while q + 1 < v.len() && v[q + 1] == v[p] {
            q += 1;
        }
        let left_ok = p == 0 || v[p - 1] < v[p];
        let right_ok = q + 1 == v.len() || v[q + 1] < v[p];
        if v[p] >= min && left_ok && right_ok {
            out.push((p, q));
        }
        p = q + 1;
    }
    out
}

const CAST: [&str; 3] = ["Ross", "Rachel", "Monica"];

fn brute_subscenes(speakers: &[u8], window: usize, min: usize) -> Vec<(String, Span, usize)> {
    let n = speakers.len();
    let mut order: Vec<u8> = Vec::new();
    for &s in speakers {
        if !order.contains(&s) {
            order.push(s);
        }
    }
    let mut found: Vec<(Span, usize, usize)> = Vec::new();
    for (slot, &who) in order.iter().enumerate() {
        for (p, q) in brute_peaks(&brute_counts(speakers, who, window), min) {
            let span = Span {
                start: p,
                end: (q + window - 1).min(n - 1),
            };
            if !found.iter().any(|&(s, sl, _)| s == span && sl == slot) {
                found.push((span, slot, p));
            }
        }
    }
    found.sort_by_key(|&(span, slot, _)| (span, slot));
    found
        .into_iter()
        .map(|(span, slot, p)| (CAST[order[slot] as usize].to_string(), span, p))
        .collect()
}

fn msf_suite() -> Check {
    let mut rng = SplitMix64::new(7);
    let mut total_subscenes = 0;
    for case in 0..200 {
        let len = 1 + rng.below(12);
        let cast = 1 + rng.below(3);
        let speakers: Vec<u8> = (0..len).map(|_| rng.below(cast) as u8).collect();
        let window = 2 + rng.below(4);
        let min = 1 + rng.below(window.min(3));
        let config = WindowConfig {
            window_size: window,
            min_peak_count: min,
            ..WindowConfig::default()
        };
        let scene = Scene::from_turns(
            "e",
            format!("c{case}"),
            speakers
                .iter()
                .enumerate()
                .map(|(i, &s)| (CAST[s as usize], format!("line {i}"))),
        );

        let got = extract_subscenes(&scene, &config).map_err(|e| e.to_string())?;
        let again = extract_subscenes(&scene, &config).map_err(|e| e.to_string())?;
        ensure(got == again, || format!("case {case}: two runs differ"))?;
        let got_view: Vec<(String, Span, usize)> = got
            .iter()
            .map(|s| (s.main_speaker.clone(), s.span, s.peak_position))
            .collect();
        let want = brute_subscenes(&speakers, window, min);
        ensure(got_view == want, || {
            format!("case {case} {speakers:?} w={window} m={min}: {got_view:?} != {want:?}")
        })?;
        for s in &got {
            ensure(
                s.utterances == scene.utterances[s.span.start..=s.span.end],
                || format!("case {case}: span content"),
            )?;
        }

        let curves = utterance_curves(&scene, &config).map_err(|e| e.to_string())?;
        let positions = curves[0].values.len();
        for p in 0..positions {
            let mass: usize = curves.iter().map(|c| c.values[p]).sum();
            let width = (p + window).min(len) - p;
            ensure(mass == width, || {
                format!("case {case}: mass {mass} != window {width} at {p}")
            })?;
        }
        total_subscenes += got.len();
    }
    Ok(format!(
        "200 random scenes, {total_subscenes} sub-scenes, all equal to the brute-force extraction"
    ))
}

// ---------------------------------------------------------------- median split

fn split_labels(values: &[i32]) -> Result<Vec<u8>, String> {
    let sums: Vec<TraitSum> = values
        .iter()
        .enumerate()
        .map(|(i, &sum)| TraitSum {
            subscene_id: format!("s{i:03}"),
            trait_: Trait::Openness,
            sum,
            n_annotators: 3,
        })
        .collect();
    let split =
        median_split(&sums, Trait::Openness, TiePolicy::Above).map_err(|e| e.to_string())?;
    let mut by_id = split.labels;
    by_id.sort();
    Ok(by_id.into_iter().map(|(_, l)| l).collect())
}

fn median_suite() -> Check {
    let mut rng = SplitMix64::new(11);
    for case in 0..100 {
        let n = 2 + rng.below(39);
        let values: Vec<i32> = (0..n).map(|_| rng.below(7) as i32 - 3).collect();
        let labels = split_labels(&values)?;
        for i in 0..n {
            for j in 0..n {
                ensure(values[i] <= values[j] || labels[i] >= labels[j], || {
                    format!("case {case}: not monotone")
                })?;
            }
        }
        let shift = rng.below(21) as i32 - 10;
        let shifted: Vec<i32> = values.iter().map(|v| v + shift).collect();
        ensure(split_labels(&shifted)? == labels, || {
            format!("case {case}: shift {shift} changed labels")
        })?;

        // distinct sums with an even count split exactly in half
        let mut distinct: Vec<i32> = Vec::new();
        let want = 2 * (1 + rng.below(10));
        while distinct.len() < want {
            let v = rng.below(2001) as i32 - 1000;
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
        let ones = split_labels(&distinct)?.iter().filter(|&&l| l == 1).count();
        ensure(ones == want / 2, || {
            format!("case {case}: {ones} of {want} above the median")
        })?;
    }
    Ok("100 random sum vectors: monotone, shift invariant, balanced".into())
}

// ---------------------------------------------------------------- attentive

fn random_model(rng: &mut SplitMix64, vocab: usize, dim: usize) -> AttentivePoolModel {
    let v = Vocabulary::from_tokens((1..vocab).map(|i| format!("w{i}")));
    let mut m = AttentivePoolModel::init(v, dim, 1.0, rng);
    m.query = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    m.bias = rng.uniform(-1.0, 1.0);
    m
}

fn gradient_error(seed: u64) -> Result<f64, String> {
    const H: f64 = 1e-5;
    let mut rng = SplitMix64::new(seed);
    let (vocab, dim) = (5, 4);
    let model = random_model(&mut rng, vocab, dim);
    let owned: Vec<(Vec<usize>, u8)> = (0..5)
        .map(|i| {
            (
                (0..1 + rng.below(5)).map(|_| rng.below(vocab)).collect(),
                (i % 2) as u8,
            )
        })
        .collect();
    let batch: Vec<(&[usize], u8)> = owned.iter().map(|(t, y)| (t.as_slice(), *y)).collect();
    let (_, grads) = model
        .loss_and_gradients(&batch)
        .map_err(|e| e.to_string())?;

    // flat parameter view: embeddings, query, output, bias
    let params = |m: &AttentivePoolModel| -> Vec<f64> {
        m.embeddings
            .iter()
            .chain(&m.query)
            .chain(&m.output)
            .copied()
            .chain([m.bias])
            .collect()
    };
    let rebuild = |flat: &[f64]| -> AttentivePoolModel {
        let mut m = model.clone();
        let e = m.embeddings.len();
        m.embeddings.copy_from_slice(&flat[..e]);
        m.query.copy_from_slice(&flat[e..e + dim]);
        m.output.copy_from_slice(&flat[e + dim..e + 2 * dim]);
        m.bias = flat[e + 2 * dim];
        m
    };
    let mut analytic = vec![0.0; vocab * dim];
    for (&row, g) in &grads.embeddings {
        analytic[row * dim..(row + 1) * dim].copy_from_slice(g);
    }
    analytic.extend(&grads.query);
    analytic.extend(&grads.output);
    analytic.push(grads.bias);

    let base = params(&model);
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += H;
        let mut minus = base.clone();
        minus[i] -= H;
        let lp = rebuild(&plus).loss(&batch).map_err(|e| e.to_string())?;
        let lm = rebuild(&minus).loss(&batch).map_err(|e| e.to_string())?;
        let numeric = (lp - lm) / (2.0 * H);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

fn toy_corpus() -> (Vec<String>, Vec<u8>) {
    let people = [
        "my sister",
        "the neighbour",
        "our coach",
        "a stranger",
        "the teacher",
    ];
    let events = [
        "called today",
        "visited at noon",
        "sent a letter",
        "waved from the car",
    ];
    (0..20)
        .map(|i| {
            let y = (i % 2 == 0) as u8;
            let word = if y == 1 { "happy" } else { "gloomy" };
            (
                format!("{} {} looking {word}", people[i % 5], events[(i / 5) % 4]),
                y,
            )
        })
        .unzip()
}

fn model_bits(m: &AttentivePoolModel) -> Vec<u64> {
    m.embeddings
        .iter()
        .chain(&m.query)
        .chain(&m.output)
        .chain([&m.bias])
        .map(|x| x.to_bits())
        .collect()
}

fn attentive_suite() -> Check {
    let mut rng = SplitMix64::new(99);
    for case in 0..200 {
        let vocab = 2 + rng.below(20);
        let dim = 1 + rng.below(8);
        let model = random_model(&mut rng, vocab, dim);
        let tokens: Vec<usize> = (0..1 + rng.below(40)).map(|_| rng.below(vocab)).collect();
        let f = model.forward(&tokens).map_err(|e| e.to_string())?;
        let sum: f64 = f.attention.iter().sum();
        ensure(
            (sum - 1.0).abs() <= 1e-9 && f.attention.iter().all(|&a| a >= 0.0),
            || format!("case {case}: attention sums to {sum}"),
        )?;
    }

    let mut worst: f64 = 0.0;
    for seed in 0..6 {
        worst = worst.max(gradient_error(seed)?);
    }
    ensure(worst < 1e-4, || {
        format!("finite-difference relative error {worst:e}")
    })?;

    let (texts, labels) = toy_corpus();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let config = AttentiveConfig {
        min_freq: 1,
        ..AttentiveConfig::default()
    };
    let (model, report) = train_attentive(&refs, &labels, &config).map_err(|e| e.to_string())?;
    let correct = refs
        .iter()
        .zip(&labels)
        .filter(|(t, &y)| model.predict(t) == y)
        .count();
    ensure(report.epochs <= 200 && correct == 20, || {
        format!("toy corpus {correct}/20 after {} epochs", report.epochs)
    })?;

    let (again, _) = train_attentive(&refs, &labels, &config).map_err(|e| e.to_string())?;
    ensure(model_bits(&model) == model_bits(&again), || {
        "same seed gave different weights".into()
    })?;

    Ok(format!(
        "attention sums on 200 inputs, gradient error {worst:.1e} on 6 instances, toy corpus 20/20 after {} epochs, bitwise repeatable",
        report.epochs
    ))
}

// ---------------------------------------------------------------- cross-validation

fn cv_suite() -> Check {
    let mut plans = 0;
    for n in 10..=50 {
        for k in [2, 5, 10] {
            let plan = kfold_split(n, k, 42).map_err(|e| e.to_string())?;
            ensure(
                plan == kfold_split(n, k, 42).map_err(|e| e.to_string())?,
                || format!("n={n} k={k}: not repeatable"),
            )?;
            let mut seen = vec![0u8; n];
            for fold in &plan.folds {
                for &i in fold {
                    seen[i] += 1;
                }
            }
            ensure(
                plan.folds.len() == k && seen.iter().all(|&c| c == 1),
                || format!("n={n} k={k}: not a partition"),
            )?;
            let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            ensure(hi - lo <= 1, || format!("n={n} k={k}: sizes {sizes:?}"))?;
            plans += 1;
        }
    }
    Ok(format!("{plans} plans partition, repeat and balance"))
}

// ---------------------------------------------------------------- formats

const NAMES: [&str; 4] = ["Ross", "Rachel", "Monica", "Chandler"];
const WORDS: [&str; 7] = ["so", "we", "were", "on", "a", "break", "coffee"];

fn random_subscene(rng: &mut SplitMix64) -> SubScene {
    let n = 1 + rng.below(10);
    let utterances: Vec<Utterance> = (0..n)
        .map(|index| {
            let words: Vec<String> = (0..1 + rng.below(6))
                .map(|_| {
                    let w = rng.below(WORDS.len() + NAMES.len());
                    let w = if w < WORDS.len() {
                        WORDS[w]
                    } else {
                        NAMES[w - WORDS.len()]
                    };
                    if rng.below(4) == 0 {
                        w.to_uppercase()
                    } else {
                        w.to_string()
                    }
                })
                .collect();
            Utterance {
                speaker: NAMES[rng.below(4)].to_string(),
                text: format!("{}?", words.join(" ")),
                index,
            }
        })
        .collect();
    let main = utterances[rng.below(n)].speaker.clone();
    SubScene {
        id: SubScene::make_id(
            "e",
            "c",
            Span {
                start: 0,
                end: n - 1,
            },
            &main,
        ),
        episode_id: "e".into(),
        scene_id: "c".into(),
        main_speaker: main,
        span: Span {
            start: 0,
            end: n - 1,
        },
        peak_position: 0,
        utterances,
    }
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

fn format_suite() -> Check {
    let mut rng = SplitMix64::new(5);
    let labels = TraitMap([0u8; 5]);
    for case in 0..100 {
        let sub = random_subscene(&mut rng);
        let (anon, map) = anonymize(&sub);
        let err = |e: persona_core::formats::FormatError| e.to_string();
        let full = tokenize(&to_full(&anon, labels).text);
        let single = tokenize(&to_single(&anon, labels).map_err(err)?.text);
        let with_context = tokenize(&to_single_plus_context(&anon, labels).map_err(err)?.text);

        // F without one speaker mark per line, against S plus context without the separator
        let mut body = full.clone();
        for u in &anon.utterances {
            let at = body
                .iter()
                .position(|t| *t == u.speaker)
                .ok_or_else(|| format!("case {case}: mark missing"))?;
            body.remove(at);
        }
        let context: Vec<String> = with_context
            .iter()
            .filter(|t| *t != CONTEXT_SEPARATOR)
            .cloned()
            .collect();
        ensure(sorted(body) == sorted(context.clone()), || {
            format!("case {case}: F and S+C tokens differ")
        })?;
        ensure(context[..single.len()] == single[..], || {
            format!("case {case}: S is not the prefix of S+C")
        })?;

        // renaming is undone by the mapping, and a second pass changes nothing
        let (plain, plain_map) = anonymize_with(
            &sub,
            AnonymizeOptions {
                replace_mentions: false,
            },
        );
        ensure(plain_map.restore(&plain) == sub, || {
            format!("case {case}: restore did not invert")
        })?;
        let (twice, again) = anonymize(&anon);
        ensure(twice == anon && again.is_identity(), || {
            format!("case {case}: second pass changed the sub-scene")
        })?;
        ensure(
            map.mark_of(&sub.main_speaker).as_deref() == Some("speaker0"),
            || format!("case {case}: main speaker not speaker0"),
        )?;
    }
    Ok("100 random sub-scenes: tokens conserved, renaming inverted and stable".into())
}

// ---------------------------------------------------------------- driver

fn main() {
    let friends_counts = [405, 381, 399, 462, 379];
    let essays_counts = [1310, 1254, 1277, 1272, 1235];
    let mut results: Vec<(&str, Status)> = vec![
        (
            "friends-majority",
            majority_check(
                "PERSONA_FRIENDS_LABELS",
                &FRIENDS_MAJORITY,
                FRIENDS_ITEMS,
                load_friends,
                friends_counts,
            ),
        ),
        (
            "essays-majority",
            majority_check(
                "PERSONA_ESSAYS",
                &ESSAYS_MAJORITY,
                ESSAYS_ITEMS,
                load_essays,
                essays_counts,
            ),
        ),
    ];
    let suites: [Suite; 6] = [
        ("agreement-oracle", Duration::from_secs(60), agreement_suite),
        ("msf-oracle", Duration::from_secs(60), msf_suite),
        ("median-split", Duration::from_secs(60), median_suite),
        ("attentive", Duration::from_secs(120), attentive_suite),
        ("cv-harness", Duration::from_secs(60), cv_suite),
        ("format-transforms", Duration::from_secs(60), format_suite),
    ];
    let mut suites_ok = true;
    let mut suite_results = Vec::new();
    for (name, limit, f) in suites {
        let status = match timed(limit, f) {
            Ok(d) => Status::Pass(d),
            Err(e) => {
                suites_ok = false;
                Status::Fail(e)
            }
        };
        suite_results.push((name, status));
    }
    results.push((
        "neural-rows",
        if suites_ok {
            Status::Skip(
                "needs the real corpora and pretrained embeddings; the suites below cover the same code"
                    .into(),
            )
        } else {
            Status::Fail("a substitute property suite failed".into())
        },
    ));
    results.extend(suite_results);

    let mut failed = 0;
    for (name, status) in &results {
        let (tag, detail) = match status {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Status::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {name}: {detail}");
    }
    if failed > 0 {
        println!("failed criteria: {failed}");
        std::process::exit(1);
    }
}
