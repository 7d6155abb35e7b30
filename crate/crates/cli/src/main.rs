//! `entryshift`: train, tune, evaluate and bias-audit entry classifiers.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "entryshift", version, about = "Multi-label entry classification with counterfactual bias audits")]
struct Cli {
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, env = "ENTRYSHIFT_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate an entry file, printing a summary.
    Ingest(IngestArgs),
    /// Flag entries that carry exactly one bias label and generate their variants.
    Flag(FlagArgs),
    /// Add counterfactual variants of flagged train entries to the train split.
    Augment(AugmentArgs),
    /// Train a classifier and write a checkpoint.
    Train(TrainArgs),
    /// Tune per-tag decision thresholds on one split.
    Tune(TuneArgs),
    /// Score a model with a threshold table.
    Eval(EvalArgs),
    /// Measure counterfactual prediction shifts for one attribute.
    Audit(AuditArgs),
    /// Train a baseline and an augmented model and compare them.
    CdaExperiment(CdaArgs),
    /// Classify with a mask-fill provider and a verbalizer.
    Zeroshot(ZeroShotArgs),
    /// Render CSV, SVG or table files from a saved JSON report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Entry file (JSON lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Taxonomy JSON; defaults to `<stem>_taxonomy.json` beside the data, then the built-in one.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Only validate; nothing is written.
    #[arg(long, conflicts_with = "out")]
    pub validate: bool,
    /// Write the normalized entry stream here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttributeArg {
    Gender,
    Country,
}

#[derive(Args, Debug)]
pub struct LexiconArgs {
    #[arg(long, value_enum)]
    pub attribute: AttributeArg,
    /// Swap lexicon CSV; the bundled one is used when absent.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Exclusion list; the bundled one is used when absent.
    #[arg(long)]
    pub exclusions: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FlagArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// Subset file (JSON lines); per-label counts go to `<out>.counts.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Subset files from `flag`; repeat for each attribute.
    #[arg(long, required = true)]
    pub subset: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchArg {
    Base,
    Combinatorial,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Reference schedule: 3 epochs at learning rate 1e-4.
    Reference,
    /// Schedule sized for small corpora: 5 epochs at learning rate 1e-2.
    Desk,
}

#[derive(Args, Debug)]
pub struct ModelConfigArgs {
    #[arg(long, value_enum)]
    pub arch: Option<ArchArg>,
    /// `key = value` file applied on top of the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    /// Root seed for initialization, shuffling and dropout.
    #[arg(long, env = "ENTRYSHIFT_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelConfigArgs,
    /// Checkpoint path; the config echo goes to `<out>.config`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Args, Debug)]
pub struct ModelDataArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub io: ModelDataArgs,
    #[arg(long, value_enum, default_value = "validation")]
    pub split: SplitArg,
    /// Threshold table (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub io: ModelDataArgs,
    #[arg(long)]
    pub thresholds: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Metrics report (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[command(flatten)]
    pub io: ModelDataArgs,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// Tags that enter the overall score: `single-level` or `all`.
    #[arg(long, default_value = "single-level")]
    pub tags: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Heatmap data (long-format CSV).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CdaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelConfigArgs,
    #[arg(long, default_value = "single-level")]
    pub tags: String,
    #[arg(long, default_value = "cda_report.json")]
    pub out: PathBuf,
    /// Heatmap data for every arm and attribute.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregationArg {
    Max,
    Mean,
}

#[derive(Args, Debug)]
pub struct ZeroShotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `stub` or `file:<path>` (JSON lines of `{"id", "probs"}`).
    #[arg(long)]
    pub provider: String,
    /// Verbalizer CSV; the bundled one is used when absent.
    #[arg(long)]
    pub verbalizer: Option<PathBuf>,
    /// Prompt suffix holding exactly one `[MASK]`.
    #[arg(long)]
    pub template: Option<String>,
    #[arg(long, value_enum, default_value = "max")]
    pub aggregation: AggregationArg,
    /// Cutoff on group-normalized scores; defaults to 1 / group size.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub max_tokens: usize,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("outputs").required(true).multiple(true))]
pub struct ReportArgs {
    /// A report written by `audit` or `cda-experiment`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, group = "outputs")]
    pub csv: Option<PathBuf>,
    /// One SVG per matrix; `{n}` in the name is replaced by the matrix index.
    #[arg(long, group = "outputs")]
    pub svg: Option<PathBuf>,
    /// Side-by-side table of a `cda-experiment` report (CSV).
    #[arg(long, group = "outputs")]
    pub table: Option<PathBuf>,
}

/// Failure that should exit with the usage status.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        return fail("runtime", &e.to_string(), 1);
    }
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Flag(a) => commands::flag(a),
        Command::Augment(a) => commands::augment(a),
        Command::Train(a) => commands::train(a),
        Command::Tune(a) => commands::tune(a),
        Command::Eval(a) => commands::eval(a),
        Command::Audit(a) => commands::audit(a),
        Command::CdaExperiment(a) => commands::cda(a),
        Command::Zeroshot(a) => commands::zeroshot(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => fail("usage", &e.to_string(), 2),
        Err(e) => fail("runtime", &format!("{e:#}"), 1),
    }
}
