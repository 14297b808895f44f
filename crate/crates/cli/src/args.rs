use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pubdev_core::eval::Dimension;

#[derive(Debug, Parser)]
#[command(
    name = "pubdev",
    version,
    about = "Detect public software development projects from repository metadata"
)]
pub struct Cli {
    /// Lexicon file defining the keyword features; the built-in lexicon when absent.
    #[arg(long, global = true, env = "PUBDEV_SCHEMA")]
    pub schema: Option<PathBuf>,

    /// Run single-threaded.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw metadata, merge labels, drop forks and removed projects.
    Ingest(IngestArgs),
    /// Write the feature matrix as CSV.
    Featurize(FeaturizeArgs),
    /// Train and prune a decision tree.
    Train(TrainArgs),
    /// Predict every record with a model.
    Classify(ClassifyArgs),
    /// Precision and recall of a model on labeled data.
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Top/bottom count-ranking baselines.
    Baseline(BaselineArgs),
    /// List misclassified records and candidate lexicon strings.
    Report(ReportArgs),
    /// Manual review of records on error-prone leaves.
    #[command(subcommand)]
    Triage(TriageCommand),
    /// Generate a labeled synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Project metadata, CSV or NDJSON.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Input format; guessed from the extension when absent.
    #[arg(long, value_parser = ["csv", "ndjson"])]
    pub format: Option<String>,
    /// TOML file mapping record fields to input columns.
    #[arg(long, value_name = "PATH")]
    pub columns: Option<PathBuf>,
    /// Label store (NDJSON) merged over the input labels, last write winning.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Tree file, or `simple` for the built-in simple tree.
    #[arg(long, default_value = "simple")]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Output format; guessed from the extension when absent.
    #[arg(long, value_parser = ["csv", "ndjson"])]
    pub out_format: Option<String>,
    #[arg(long)]
    pub keep_forks: bool,
    #[arg(long)]
    pub keep_removed: bool,
    /// Drop records whose description is mostly non-ASCII letters.
    #[arg(long)]
    pub drop_non_english: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainParamsArgs {
    /// Pruning confidence factor in (0, 0.5].
    #[arg(long, default_value_t = 0.25)]
    pub cf: f64,
    #[arg(long, default_value_t = 2)]
    pub min_leaf: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: TrainParamsArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also print the tree as an indented listing.
    #[arg(long)]
    pub print: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write the report as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: TrainParamsArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-fold and pooled reports as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Strategy {
    Top,
    Bottom,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub strategy: Strategy,
    #[arg(long)]
    pub dimension: Dimension,
    /// Fractions of the dataset to select or delete; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub fraction: Vec<f64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.15)]
    pub threshold: f64,
    #[arg(long, default_value_t = 30)]
    pub top: usize,
    /// Full report as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TriageCommand {
    /// Flag leaves and write a session file with the review queue.
    Prepare(PrepareArgs),
    /// Serve the review API and UI for a session.
    Serve(ServeArgs),
    /// Write the latest decision for each reviewed project.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArgs,
    /// Flag exactly these leaf ids instead of selecting greedily.
    #[arg(long, value_delimiter = ',')]
    pub leaves: Vec<usize>,
    /// Share of misclassifications the flagged leaves should hold.
    #[arg(long, default_value_t = 0.5)]
    pub coverage: f64,
    /// Largest share of the dataset to route to review.
    #[arg(long, default_value_t = 0.4)]
    pub budget: f64,
    /// Text file with reviewer criteria replacing the built-in text.
    #[arg(long, value_name = "PATH")]
    pub criteria: Option<PathBuf>,
    #[arg(long, default_value = "triage")]
    pub session_id: String,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "PATH")]
    pub session: PathBuf,
    /// Label store receiving decisions; created when missing.
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Directory with the built UI bundle.
    #[arg(long, value_name = "DIR")]
    pub ui: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_name = "PATH")]
    pub session: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_parser = ["csv", "ndjson"])]
    pub out_format: Option<String>,
}
