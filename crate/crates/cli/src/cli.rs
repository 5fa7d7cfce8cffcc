use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Persuasion-technique detection toolkit.
///
/// Every option can also be set through an environment variable named
/// PERSUADE_<OPTION> (upper case, dashes as underscores).
#[derive(Debug, Parser)]
#[command(name = "persuade", version, about, long_about = None)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42, env = "PERSUADE_SEED")]
    pub seed: u64,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0, env = "PERSUADE_JOBS")]
    pub jobs: usize,

    /// Output file or directory, depending on the command.
    #[arg(long, global = true, env = "PERSUADE_OUT")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Convert gold data into the canonical JSON-lines corpus.
    Import(ImportArgs),
    /// Translate and back-translate a corpus along every covered direction.
    Augment(AugmentArgs),
    /// Build per-language training sets for a recipe.
    Assemble(AssembleArgs),
    /// Train the hashed n-gram one-vs-rest baseline.
    Train(TrainArgs),
    /// Write a score file for a corpus.
    Predict(PredictArgs),
    /// Pick the decision threshold that maximizes dev micro-F1.
    Tune(TuneArgs),
    /// Combine member scores by per-language thresholds and votes.
    Ensemble(EnsembleArgs),
    /// Micro/macro/per-label F1 of task-format predictions.
    Evaluate(EvaluateArgs),
    /// BLEU of back-translated paraphrases per (source, pivot) pair.
    Bleu(BleuArgs),
    /// Sequential ANOVA and effect tables over a directory of runs.
    Analyze(AnalyzeArgs),
    /// Aggregate human ratings of augmented text.
    Humaneval(HumanevalArgs),
    /// Write a canonical corpus in the task-labels format.
    Export(ExportArgs),
    /// Technique and coverage tables.
    Taxonomy(TaxonomyArgs),
    /// Serve the translator bridge protocol on stdin/stdout with the mock backend.
    BridgeMock(BridgeMockArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Canonical,
    Task,
}

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    /// Canonical JSON-lines file or task-labels TSV.
    #[arg(long, env = "PERSUADE_INPUT")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Canonical, env = "PERSUADE_FORMAT")]
    pub format: InputFormat,
    /// Language of a task-labels file.
    #[arg(long, env = "PERSUADE_LANGUAGE")]
    pub language: Option<String>,
    /// Directory of article<id>.txt files for a task-labels file.
    #[arg(long, env = "PERSUADE_ARTICLES")]
    pub articles: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Mock,
    Bridge,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockModeArg {
    Tagging,
    Lossy,
    Identity,
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentArgs {
    /// Gold corpus (canonical JSON-lines).
    #[arg(long, env = "PERSUADE_INPUT")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendKind::Mock, env = "PERSUADE_BACKEND")]
    pub backend: BackendKind,
    #[arg(long, value_enum, default_value_t = MockModeArg::Tagging, env = "PERSUADE_MOCK_MODE")]
    pub mock_mode: MockModeArg,
    /// Token period for the lossy mock.
    #[arg(long, default_value_t = 3, env = "PERSUADE_LOSSY_K")]
    pub lossy_k: usize,
    /// Bridge executable (with --backend bridge).
    #[arg(long, env = "PERSUADE_BRIDGE")]
    pub bridge: Option<PathBuf>,
    /// Argument passed to the bridge executable (repeatable).
    #[arg(long = "bridge-arg", allow_hyphen_values = true)]
    pub bridge_args: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct AssembleArgs {
    /// Gold corpus (canonical JSON-lines).
    #[arg(long, env = "PERSUADE_GOLD")]
    pub gold: PathBuf,
    /// Augmented corpora (repeatable).
    #[arg(long, env = "PERSUADE_POOL", value_delimiter = ',')]
    pub pool: Vec<PathBuf>,
    /// gold, +T, +BT, +BT-sl, +T+BT, +T+BT-sl or +span.
    #[arg(long, env = "PERSUADE_RECIPE", allow_hyphen_values = true)]
    pub recipe: String,
    /// Keep only additions carrying a technique with fewer gold examples.
    #[arg(long, env = "PERSUADE_LOW_FREQUENCY")]
    pub low_frequency: Option<usize>,
    /// Languages trained jointly, e.g. en,ge.
    #[arg(long, env = "PERSUADE_FAMILY_GROUP", value_delimiter = ',')]
    pub family_group: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    Micro,
    Macro,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, env = "PERSUADE_TRAIN")]
    pub train: PathBuf,
    #[arg(long, env = "PERSUADE_DEV")]
    pub dev: PathBuf,
    #[arg(long, default_value_t = 10, env = "PERSUADE_EPOCHS")]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1, env = "PERSUADE_LEARNING_RATE")]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 64, env = "PERSUADE_BATCH_SIZE")]
    pub batch_size: usize,
    /// Dev metric used to pick the best epoch.
    #[arg(long, value_enum, default_value_t = Selection::Micro, env = "PERSUADE_SELECTION")]
    pub selection: Selection,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long, env = "PERSUADE_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "PERSUADE_CORPUS")]
    pub corpus: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long, env = "PERSUADE_SCORES")]
    pub scores: PathBuf,
    #[arg(long, env = "PERSUADE_DEV")]
    pub dev: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    /// Ensemble TOML; member score paths are relative to it.
    #[arg(long, env = "PERSUADE_CONFIG")]
    pub config: PathBuf,
    /// Paragraphs to predict (defaults to the tuning corpus).
    #[arg(long, env = "PERSUADE_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Tune member thresholds and the voting threshold on this dev corpus.
    #[arg(long, env = "PERSUADE_TUNE_DEV")]
    pub tune_dev: Option<PathBuf>,
    /// Where to write the tuned configuration.
    #[arg(long, env = "PERSUADE_SAVE_CONFIG")]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, env = "PERSUADE_GOLD")]
    pub gold: PathBuf,
    /// Task-format predictions.
    #[arg(long, env = "PERSUADE_PRED")]
    pub pred: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BleuArgs {
    #[arg(long, env = "PERSUADE_LEDGER")]
    pub ledger: PathBuf,
    #[arg(long, env = "PERSUADE_ORIGINALS")]
    pub originals: PathBuf,
    #[arg(long, env = "PERSUADE_PARAPHRASES")]
    pub paraphrases: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Directory of `<training set>__<language>.json` evaluation reports.
    #[arg(long, env = "PERSUADE_RUNS")]
    pub runs: PathBuf,
    /// Training sets in the design (default: gold,+T,+BT,+BT-sl,+T+BT,+T+BT-sl).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, env = "PERSUADE_SETS")]
    pub sets: Vec<String>,
    /// Test languages in the design (default: the six training languages).
    #[arg(long, value_delimiter = ',', env = "PERSUADE_LANGUAGES")]
    pub languages: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct HumanevalArgs {
    #[arg(long, env = "PERSUADE_RATINGS")]
    pub ratings: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// Canonical corpus.
    #[arg(long, env = "PERSUADE_CORPUS")]
    pub corpus: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    Tsv,
}

#[derive(Debug, Args, Serialize)]
pub struct TaxonomyArgs {
    #[command(subcommand)]
    pub action: TaxonomyAction,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaxonomyAction {
    /// Technique/category table followed by the coverage matrix.
    Export {
        #[arg(long, value_enum, default_value_t = TableFormat::Tsv, env = "PERSUADE_FORMAT")]
        format: TableFormat,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct BridgeMockArgs {
    #[arg(long, value_enum, default_value_t = MockModeArg::Tagging, env = "PERSUADE_MOCK_MODE")]
    pub mock_mode: MockModeArg,
    #[arg(long, default_value_t = 3, env = "PERSUADE_LOSSY_K")]
    pub lossy_k: usize,
    /// Declared direction as source:target (repeatable; default every pair).
    #[arg(long = "direction")]
    pub directions: Vec<String>,
}
