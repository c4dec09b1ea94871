//! The `persona` command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use persona_core::agreement::{
    average_pairwise_kappa_weighted, fleiss_kappa, RaterSlots, RatingMatrix, Weighting,
};
use persona_core::annotation::{aggregate, AggregateOptions, TiePolicy};
use persona_core::classify::attentive::{train_from, AttentiveConfig, AttentivePoolModel};
use persona_core::classify::{Labeled, LogRegConfig, ModelSpec, TrainedModel};
use persona_core::cv::{
    collect_report, kfold_split, run_fold, stratified_kfold_split, CvMode, FoldPlan,
};
use persona_core::formats::{
    anonymize_with, render, AnonymizeOptions, DialogueFormat, FormattedItem,
};
use persona_core::msf::{extract_subscenes, SubScene, WindowConfig};
use persona_core::results::{emit_results, render_percent, ResultTable, TableStyle};
use persona_core::rng::SplitMix64;
use persona_core::text::{tokenize, Vocabulary};
use persona_core::{EssayDocument, Trait, TraitMap};
use rayon::prelude::*;

use crate::error::{read_file, write_file, PersonaError, Result};
use crate::ingest::{parse_essays, parse_transcript_with, write_transcript, TranscriptOptions};
use crate::labels::{majority_shares, LabelRow};
use crate::service::{Desk, ServeOptions};
use crate::{embeddings, jsonl, labels, model_file, store};

#[derive(Debug, Parser)]
#[command(
    name = "persona",
    version,
    about = "Dialogue personality corpus toolkit"
)]
pub struct Cli {
    /// Log level filter (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a transcript (or essays table) and write it in canonical form.
    Ingest(IngestArgs),
    /// Cut scenes into main-speaker sub-scenes.
    Extract(ExtractArgs),
    /// Inter-annotator agreement over an annotation store.
    Agree(AgreeArgs),
    /// Median-split summed annotations into binary labels.
    Aggregate(AggregateArgs),
    /// Render labelled sub-scenes as classifier inputs.
    Format(FormatArgs),
    /// Print a seeded k-fold plan.
    Split(SplitArgs),
    /// Cross-validate models and write an accuracy table.
    Eval(EvalArgs),
    /// Train one model on a whole dataset and save it.
    Train(TrainArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input is an essays table; output is one document per line.
    #[arg(long)]
    pub essays: bool,
    #[arg(long)]
    pub drop_empty_speaker: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 3)]
    pub min_peak: usize,
    #[arg(long, default_value_t = 0)]
    pub pad: usize,
    /// Merge overlapping spans of the same speaker.
    #[arg(long)]
    pub merge: bool,
    #[arg(long)]
    pub drop_empty_speaker: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SlotArg {
    /// One column per annotator id.
    Annotator,
    /// Columns by submission order within each sub-scene.
    Order,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    None,
    Linear,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, value_enum, default_value = "annotator")]
    pub slots: SlotArg,
    #[arg(long, value_enum, default_value = "none")]
    pub weighting: WeightArg,
    /// Raters per item for Fleiss' kappa; items with other counts are left out.
    #[arg(long, default_value_t = 3)]
    pub raters: usize,
    #[arg(long)]
    pub markdown: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieArg {
    /// Label 1 only for sums strictly above the median.
    Above,
    /// Label 1 for sums at or above the median.
    AtOrAbove,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Sub-scene corpus; restricts the store and fills the speaker column.
    #[arg(long)]
    pub subscenes: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "above")]
    pub tie: TieArg,
    #[arg(long, default_value_t = 3)]
    pub min_annotators: usize,
    #[arg(long, default_value_t = 3)]
    pub expected_annotators: usize,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    /// S, SC (or S+C) or F.
    #[arg(long)]
    pub mode: DialogueFormat,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Leave speaker names inside utterance text untouched.
    #[arg(long)]
    pub keep_mentions: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Item count; taken from --labels when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Stratify on this trait's labels (needs --labels).
    #[arg(long)]
    pub stratify: Option<Trait>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Friends,
    Essays,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Majority,
    Logreg,
    Attentive,
}

/// Where the items come from and which model settings to use.
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetArg,
    /// Essays table, formatted items (JSONL), or sub-scenes (JSONL, with --labels).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Label table for friends; alone it supplies labels (and text, if it has a text column).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub keep_mentions: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Attentive embedding width.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Attentive epoch cap.
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Minimum token frequency for fold vocabularies.
    #[arg(long, default_value_t = 2)]
    pub min_freq: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Dialogue formats to evaluate (friends); all three by default.
    #[arg(long)]
    pub format: Vec<DialogueFormat>,
    #[arg(long, value_enum, default_values_t = [ModelArg::Majority])]
    pub model: Vec<ModelArg>,
    /// Traits to evaluate; all five by default.
    #[arg(long = "trait")]
    pub traits: Vec<Trait>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Stratify folds by each trait's labels.
    #[arg(long)]
    pub stratify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub markdown: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub format: Option<DialogueFormat>,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long = "trait")]
    pub trait_: Trait,
    /// Pretrained vectors (`token v1 ... vd` per line) for the attentive model.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Text to classify; reads one text per stdin line when omitted.
    #[arg(long)]
    pub text: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub subscenes: PathBuf,
    /// Registered annotator ids, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub annotators: Vec<String>,
    /// Directory with the web app bundle.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_exit() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).init();
    let mut stdout = String::new();
    let result = run(cli.command, &mut stdout);
    print!("{stdout}");
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command, appending its report to `out`.
pub fn run(command: Command, out: &mut String) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a, out),
        Command::Extract(a) => extract(a, out),
        Command::Agree(a) => agree(a, out),
        Command::Aggregate(a) => aggregate_cmd(a, out),
        Command::Format(a) => format_cmd(a, out),
        Command::Split(a) => split(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Serve(a) => serve(a),
    }
}

fn ingest(a: IngestArgs, out: &mut String) -> Result<()> {
    let bytes = read_file(&a.input)?;
    if a.essays {
        let docs = parse_essays(&bytes)?;
        let _ = writeln!(out, "{} documents", docs.len());
        if !docs.is_empty() {
            let shares = TraitMap::from_fn(|t| {
                let l: Vec<u8> = docs.iter().map(|d| d.labels[t]).collect();
                persona_core::cv::majority_share(&l)
            });
            let _ = writeln!(out, "majority {}", shares_line(&shares));
        }
        if let Some(path) = a.out {
            jsonl::write(&path, &docs)?;
        }
        return Ok(());
    }
    let options = TranscriptOptions {
        drop_empty_speaker: a.drop_empty_speaker,
    };
    let scenes = parse_transcript_with(&bytes, options)?;
    let utterances: usize = scenes.iter().map(|s| s.len()).sum();
    let _ = writeln!(out, "{} scenes, {utterances} utterances", scenes.len());
    if let Some(path) = a.out {
        write_file(&path, write_transcript(&scenes))?;
    }
    Ok(())
}

fn shares_line(shares: &TraitMap<f64>) -> String {
    shares
        .iter()
        .map(|(t, v)| format!("{t} {}", render_percent(*v)))
        .collect::<Vec<_>>()
        .join("  ")
}

fn extract(a: ExtractArgs, out: &mut String) -> Result<()> {
    let config = WindowConfig {
        window_size: a.window,
        stride: a.stride,
        min_peak_count: a.min_peak,
        pad: a.pad,
        merge_overlapping: a.merge,
    };
    config.validate()?;
    let options = TranscriptOptions {
        drop_empty_speaker: a.drop_empty_speaker,
    };
    let scenes = parse_transcript_with(&read_file(&a.input)?, options)?;
    let mut subscenes = Vec::new();
    for scene in &scenes {
        if scene.is_empty() {
            log::warn!(
                "skipping empty scene {}:{}",
                scene.episode_id,
                scene.scene_id
            );
            continue;
        }
        subscenes.extend(extract_subscenes(scene, &config)?);
    }
    jsonl::write(&a.out, &subscenes)?;
    let _ = writeln!(
        out,
        "{} sub-scenes from {} scenes",
        subscenes.len(),
        scenes.len()
    );
    Ok(())
}

fn agree(a: AgreeArgs, out: &mut String) -> Result<()> {
    let store = store::load_store(&a.store, None)?;
    let slots = match a.slots {
        SlotArg::Annotator => RaterSlots::ByAnnotator,
        SlotArg::Order => RaterSlots::BySubmissionOrder,
    };
    let weighting = match a.weighting {
        WeightArg::None => Weighting::Unweighted,
        WeightArg::Linear => Weighting::Linear,
    };
    let matrices = RatingMatrix::from_store(&store, slots);
    let summary = average_pairwise_kappa_weighted(&matrices, weighting)?;

    let mut table: Vec<[String; 4]> = Vec::new();
    for t in Trait::ALL {
        let pairs: Vec<String> = summary
            .pairs
            .iter()
            .filter(|p| p.trait_ == t)
            .map(|p| {
                let m = &matrices[t];
                format!(
                    "{}~{}={:.4}",
                    m.raters[p.rater_a], m.raters[p.rater_b], p.kappa
                )
            })
            .collect();
        let fleiss = match fleiss_kappa(&matrices[t].with_rater_count(a.raters)) {
            Ok(k) => format!("{k:.4}"),
            Err(e) => {
                log::warn!("{t}: Fleiss' kappa unavailable: {e}");
                "n/a".into()
            }
        };
        table.push([
            t.code().into(),
            format!("{:.4}", summary.per_trait[t]),
            fleiss,
            pairs.join(" "),
        ]);
    }
    table.push([
        "mean".into(),
        format!("{:.4}", summary.mean),
        String::new(),
        String::new(),
    ]);
    table.push([
        "item-weighted".into(),
        format!("{:.4}", summary.item_weighted_mean),
        String::new(),
        String::new(),
    ]);
    let header = ["trait", "pairwise", "fleiss", "pairs"];
    let _ = writeln!(
        out,
        "{} records, {} sub-scenes",
        store.len(),
        matrices[Trait::Agreeableness].items.len()
    );
    if a.markdown {
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|---|---|---|---|");
        for row in &table {
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
    } else {
        let line = |c: [&str; 4]| {
            format!("{:<14}{:>10}{:>10}  {}", c[0], c[1], c[2], c[3])
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "{}", line(header));
        for row in &table {
            let _ = writeln!(out, "{}", line([&row[0], &row[1], &row[2], &row[3]]));
        }
    }
    Ok(())
}

fn aggregate_cmd(a: AggregateArgs, out: &mut String) -> Result<()> {
    let subscenes: Option<Vec<SubScene>> = a.subscenes.as_deref().map(jsonl::read).transpose()?;
    let ids: Option<Vec<String>> = subscenes
        .as_ref()
        .map(|s| s.iter().map(|s| s.id.clone()).collect());
    let store = store::load_store(&a.store, ids.as_deref())?;
    let options = AggregateOptions {
        tie: match a.tie {
            TieArg::Above => TiePolicy::Above,
            TieArg::AtOrAbove => TiePolicy::AtOrAbove,
        },
        min_annotators: a.min_annotators,
        expected_annotators: a.expected_annotators,
    };
    let result = aggregate(&store, &options)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    let speakers: BTreeMap<&str, &str> = subscenes
        .iter()
        .flatten()
        .map(|s| (s.id.as_str(), s.main_speaker.as_str()))
        .collect();
    let csv = labels::write_labels(&result.labels, |id| speakers.get(id).copied())?;
    write_file(&a.out, csv)?;
    let _ = writeln!(
        out,
        "{} labelled, {} excluded, {} warnings",
        result.labels.len(),
        result.excluded.len(),
        result.warnings.len()
    );
    let medians: Vec<String> = result
        .medians
        .iter()
        .map(|(t, m)| format!("{t} {m}"))
        .collect();
    let _ = writeln!(out, "medians {}", medians.join("  "));
    Ok(())
}

fn format_items(
    subscenes: &[SubScene],
    rows: &[LabelRow],
    formats: &[DialogueFormat],
    options: AnonymizeOptions,
) -> Result<BTreeMap<DialogueFormat, Vec<FormattedItem>>> {
    let by_id: BTreeMap<&str, &LabelRow> =
        rows.iter().map(|r| (r.subscene_id.as_str(), r)).collect();
    let mut missing = 0;
    let mut out: BTreeMap<DialogueFormat, Vec<FormattedItem>> = BTreeMap::new();
    for sub in subscenes {
        let Some(row) = by_id.get(sub.id.as_str()) else {
            missing += 1;
            continue;
        };
        let (anon, _) = anonymize_with(sub, options);
        for &f in formats {
            out.entry(f)
                .or_default()
                .push(render(&anon, f, row.labels)?);
        }
    }
    if missing > 0 {
        log::warn!("{missing} sub-scenes have no labels and were skipped");
    }
    let known: std::collections::BTreeSet<&str> = subscenes.iter().map(|s| s.id.as_str()).collect();
    let orphans = rows
        .iter()
        .filter(|r| !known.contains(r.subscene_id.as_str()))
        .count();
    if orphans > 0 {
        log::warn!("{orphans} label rows match no sub-scene");
    }
    Ok(out)
}

fn format_cmd(a: FormatArgs, out: &mut String) -> Result<()> {
    let subscenes: Vec<SubScene> = jsonl::read(&a.input)?;
    let rows = labels::read(&a.labels)?;
    let options = AnonymizeOptions {
        replace_mentions: !a.keep_mentions,
    };
    let items = format_items(&subscenes, &rows, &[a.mode], options)?
        .remove(&a.mode)
        .unwrap_or_default();
    jsonl::write(&a.out, &items)?;
    let _ = writeln!(out, "{} items in format {}", items.len(), a.mode);
    Ok(())
}

fn split(a: SplitArgs, out: &mut String) -> Result<()> {
    let rows = a.labels.as_deref().map(labels::read).transpose()?;
    let plan = match (a.stratify, &rows) {
        (Some(t), Some(rows)) => {
            let l: Vec<u8> = rows.iter().map(|r| r.labels[t]).collect();
            stratified_kfold_split(&l, a.k, a.seed)?
        }
        (Some(_), None) => return Err(PersonaError::Config("--stratify needs --labels".into())),
        (None, _) => {
            let n =
                a.n.or(rows.as_ref().map(Vec::len))
                    .ok_or_else(|| PersonaError::Config("give --n or --labels".into()))?;
            kfold_split(n, a.k, a.seed)?
        }
    };
    let json = serde_json::to_string_pretty(&plan).expect("plans serialize");
    match a.out {
        Some(path) => {
            write_file(&path, json + "\n")?;
            let sizes: Vec<String> = plan.folds.iter().map(|f| f.len().to_string()).collect();
            let _ = writeln!(out, "{} folds, sizes {}", plan.k, sizes.join(" "));
        }
        None => {
            let _ = writeln!(out, "{json}");
        }
    }
    Ok(())
}

/// Evaluation items keyed by format (`None` for essays).
type Datasets = Vec<(Option<DialogueFormat>, Vec<Item>)>;

/// Text plus labels, whatever the source.
#[derive(Debug, Clone)]
pub struct Item {
    pub text: String,
    pub labels: TraitMap<u8>,
}

impl Labeled for Item {
    fn text(&self) -> &str {
        &self.text
    }

    fn label(&self, t: Trait) -> u8 {
        self.labels[t]
    }
}

impl From<FormattedItem> for Item {
    fn from(i: FormattedItem) -> Self {
        Item {
            text: i.text,
            labels: i.labels,
        }
    }
}

impl From<EssayDocument> for Item {
    fn from(d: EssayDocument) -> Self {
        Item {
            text: d.text,
            labels: d.labels,
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_datasets(data: &DataArgs, formats: &[DialogueFormat]) -> Result<Datasets> {
    let formats = if formats.is_empty() {
        &DialogueFormat::ALL[..]
    } else {
        formats
    };
    match data.dataset {
        DatasetArg::Essays => {
            let path = data
                .input
                .as_ref()
                .ok_or_else(|| PersonaError::Config("essays need --in".into()))?;
            let docs = if is_csv(path) {
                parse_essays(&read_file(path)?)?
            } else {
                jsonl::read(path)?
            };
            Ok(vec![(None, docs.into_iter().map(Item::from).collect())])
        }
        DatasetArg::Friends => match (&data.input, &data.labels) {
            (Some(subs), Some(labels_path)) => {
                let subscenes: Vec<SubScene> = jsonl::read(subs)?;
                let rows = labels::read(labels_path)?;
                let options = AnonymizeOptions {
                    replace_mentions: !data.keep_mentions,
                };
                Ok(format_items(&subscenes, &rows, formats, options)?
                    .into_iter()
                    .map(|(f, items)| (Some(f), items.into_iter().map(Item::from).collect()))
                    .collect())
            }
            (Some(items_path), None) => {
                let items: Vec<FormattedItem> = jsonl::read(items_path)?;
                let mut grouped: BTreeMap<DialogueFormat, Vec<Item>> = BTreeMap::new();
                for i in items.into_iter().filter(|i| formats.contains(&i.format)) {
                    grouped.entry(i.format).or_default().push(i.into());
                }
                Ok(grouped.into_iter().map(|(f, v)| (Some(f), v)).collect())
            }
            (None, Some(labels_path)) => {
                let rows = labels::read(labels_path)?;
                if rows.iter().all(|r| r.text.is_none()) {
                    log::info!(
                        "label table has no text column; only the majority model is meaningful"
                    );
                }
                let items = rows
                    .into_iter()
                    .map(|r| Item {
                        text: r.text.unwrap_or_default(),
                        labels: r.labels,
                    })
                    .collect();
                Ok(vec![(None, items)])
            }
            (None, None) => Err(PersonaError::Config(
                "friends need --in and/or --labels".into(),
            )),
        },
    }
}

fn model_spec(model: ModelArg, data: &DataArgs) -> ModelSpec {
    match model {
        ModelArg::Majority => ModelSpec::Majority,
        ModelArg::Logreg => ModelSpec::LogReg(LogRegConfig {
            min_freq: data.min_freq,
            ..LogRegConfig::default()
        }),
        ModelArg::Attentive => ModelSpec::Attentive(AttentiveConfig {
            dim: data.dim,
            max_epochs: data.epochs,
            min_freq: data.min_freq,
            seed: data.seed,
            ..AttentiveConfig::default()
        }),
    }
}

fn eval(a: EvalArgs, out: &mut String) -> Result<()> {
    let datasets = load_datasets(&a.data, &a.format)?;
    let traits = if a.traits.is_empty() {
        Trait::ALL.to_vec()
    } else {
        a.traits.clone()
    };
    let specs: Vec<ModelSpec> = a.model.iter().map(|&m| model_spec(m, &a.data)).collect();

    // one plan per (dataset, trait); trait-independent unless stratified
    let mut plans: BTreeMap<(usize, Trait), FoldPlan> = BTreeMap::new();
    for (d, (_, items)) in datasets.iter().enumerate() {
        if items.is_empty() {
            return Err(PersonaError::Data("no items to evaluate".into()));
        }
        let shared = kfold_split(items.len(), a.k, a.data.seed)?;
        for &t in &traits {
            let plan = if a.stratify {
                let l: Vec<u8> = items.iter().map(|i| i.labels[t]).collect();
                stratified_kfold_split(&l, a.k, a.data.seed)?
            } else {
                shared.clone()
            };
            plans.insert((d, t), plan);
        }
    }

    let mut jobs = Vec::new();
    for d in 0..datasets.len() {
        for s in 0..specs.len() {
            for &t in &traits {
                for fold in 0..a.k {
                    jobs.push((d, s, t, fold));
                }
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(d, s, t, fold)| {
            let plan = &plans[&(d, t)];
            run_fold(&datasets[d].1, t, &specs[s], plan, fold, CvMode::Standard)
                .map(|r| ((d, s, t), r))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut grouped: BTreeMap<(usize, usize, Trait), Vec<_>> = BTreeMap::new();
    for (key, r) in results {
        grouped.entry(key).or_default().push(r);
    }
    let mut table = ResultTable::new();
    for (d, (format, _)) in datasets.iter().enumerate() {
        for (s, spec) in specs.iter().enumerate() {
            for &t in &traits {
                let folds = grouped.remove(&(d, s, t)).unwrap_or_default();
                let report = collect_report(t, spec, folds);
                table
                    .set(spec.name(), *format, t, report.mean_accuracy())
                    .map_err(|e| PersonaError::Data(e.to_string()))?;
            }
        }
    }
    let counts: Vec<String> = datasets
        .iter()
        .map(|(f, items)| match f {
            Some(f) => format!("{f}: {} items", items.len()),
            None => format!("{} items", items.len()),
        })
        .collect();
    let _ = writeln!(out, "{}", counts.join(", "));
    let style = if a.markdown {
        TableStyle::Markdown
    } else {
        TableStyle::Csv
    };
    let _ = write!(out, "{}", emit_results(&table, style));
    if let Some(path) = a.out {
        write_file(&path, emit_results(&table, TableStyle::Csv))?;
    }
    Ok(())
}

fn train(a: TrainArgs, out: &mut String) -> Result<()> {
    let formats: Vec<DialogueFormat> = a.format.into_iter().collect();
    let datasets = load_datasets(&a.data, &formats)?;
    let Some((_, items)) = datasets.into_iter().next() else {
        return Err(PersonaError::Data("no items to train on".into()));
    };
    let texts: Vec<&str> = items.iter().map(|i| i.text.as_str()).collect();
    let labels: Vec<u8> = items.iter().map(|i| i.labels[a.trait_]).collect();
    let spec = model_spec(a.model, &a.data);
    let model = match (&spec, &a.embeddings) {
        (ModelSpec::Attentive(cfg), Some(path)) => {
            let text = String::from_utf8(read_file(path)?).map_err(|e| PersonaError::Encoding {
                offset: e.utf8_error().valid_up_to(),
            })?;
            let vectors = embeddings::parse(&text)?;
            let cfg = AttentiveConfig {
                dim: vectors.dim,
                ..*cfg
            };
            let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
            let vocab = Vocabulary::build(tokenized.iter().map(Vec::as_slice), cfg.min_freq);
            let mut rng = SplitMix64::new(cfg.seed);
            let mut model = AttentivePoolModel::init(vocab, cfg.dim, cfg.init_range, &mut rng);
            let replaced = model.load_pretrained(|t| vectors.get(t).map(<[f64]>::to_vec));
            let _ = writeln!(
                out,
                "{replaced} of {} rows from pretrained vectors",
                model.vocabulary.len() - 1
            );
            train_from(&mut model, &texts, &labels, &cfg, &mut rng)?;
            TrainedModel::Attentive(model)
        }
        (_, Some(_)) => {
            return Err(PersonaError::Config(
                "--embeddings applies to the attentive model only".into(),
            ))
        }
        _ => spec.train(&texts, &labels)?,
    };
    let correct = items
        .iter()
        .filter(|i| model.predict(&i.text) == i.labels[a.trait_])
        .count();
    write_file(&a.out, model_file::save(&model)?)?;
    let _ = writeln!(
        out,
        "{} on {} items, training accuracy {}",
        spec.name(),
        items.len(),
        render_percent(correct as f64 / items.len() as f64)
    );
    Ok(())
}

fn predict(a: PredictArgs, out: &mut String) -> Result<()> {
    let text = String::from_utf8(read_file(&a.model)?).map_err(|e| PersonaError::Encoding {
        offset: e.utf8_error().valid_up_to(),
    })?;
    let model = model_file::load(&text)?;
    match a.text {
        Some(t) => {
            let _ = writeln!(out, "{}", model.predict(&t));
        }
        None => {
            for line in std::io::stdin().lines() {
                let line = line.map_err(|e| PersonaError::io("<stdin>", e))?;
                let _ = writeln!(out, "{}", model.predict(&line));
            }
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let subscenes: Vec<SubScene> = jsonl::read(&a.subscenes)?;
    let ids: Vec<String> = subscenes.iter().map(|s| s.id.clone()).collect();
    let store = store::load_store(&a.store, Some(&ids))?;
    let log = store::AnnotationLog::open(&a.store)?;
    let annotators: Vec<String> = a
        .annotators
        .into_iter()
        .filter(|s| !s.trim().is_empty())
        .collect();
    if annotators.is_empty() {
        return Err(PersonaError::Config(
            "register at least one annotator".into(),
        ));
    }
    let desk = Desk::new(subscenes, annotators, store, Some(log));
    eprintln!(
        "serving {} sub-scenes on http://{}:{}",
        desk.len(),
        a.host,
        a.port
    );
    let options = ServeOptions {
        addr: SocketAddr::new(a.host, a.port),
        static_dir: a.static_dir,
    };
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| PersonaError::Config(format!("cannot start runtime: {e}")))?
        .block_on(crate::service::serve(desk, options))
}

/// Majority share per trait as rendered percentages, for reports.
pub fn majority_summary(rows: &[LabelRow]) -> String {
    shares_line(&majority_shares(rows))
}
