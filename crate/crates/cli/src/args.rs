use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bbscore", version, about = "Brownian-bridge coherence scoring for latent trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample bridge trajectories into a trajectory file.
    Simulate(SimulateArgs),
    /// Fit a (shrunk) spatial covariance model on a trajectory file.
    Fit(FitArgs),
    /// Score every trajectory under a covariance model.
    Score(ScoreArgs),
    /// Write shuffled copies of every trajectory.
    Shuffle(ShuffleArgs),
    /// Original-vs-shuffled discrimination accuracy.
    Discriminate(DiscriminateArgs),
    /// Relative accuracy between two document sets.
    Relative(RelativeArgs),
    /// Threshold classification of ordinal coherence labels.
    Classify(ClassifyArgs),
    /// Compare two corpora under several covariance models.
    CompareDomains(CompareArgs),
    /// Train a linear encoder with the bridge likelihood objective.
    Train(TrainArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Latent dimension.
    #[arg(long)]
    pub d: usize,
    /// Horizon T (each trajectory has T+1 points).
    #[arg(long, short = 'T')]
    pub horizon: usize,
    /// Number of trajectories.
    #[arg(long)]
    pub n: usize,
    /// `identity`, `random-spd:<seed>` or a model file path.
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    /// `zero` or `random:<scale>`.
    #[arg(long, default_value = "zero")]
    pub endpoints: String,
    #[arg(long, default_value = "sim")]
    pub domain: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Only use records from this domain.
    #[arg(long)]
    pub domain: Option<String>,
    /// Shrinkage weight toward the scaled identity.
    #[arg(long, default_value_t = 1e-7)]
    pub epsilon: f64,
    /// Known generating covariance (same syntax as `simulate --sigma`); reports the recovery error.
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Allow scoring the corpus the model was fitted on.
    #[arg(long)]
    pub in_sample: bool,
    /// Also report the independent-marginal heuristic score.
    #[arg(long)]
    pub heuristic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("kind").required(true).args(["block_size", "windows"]))]
pub struct ShuffleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Global block shuffle with this block size.
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Local shuffle of this many disjoint windows.
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub window_size: usize,
    #[arg(long, default_value_t = 20)]
    pub copies: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Global,
    Local,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct DiscriminateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "global")]
    pub task: Task,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    pub block_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub window_size: usize,
    #[arg(long, default_value_t = 20)]
    pub copies: usize,
    /// Compare on p-values instead of raw scores.
    #[arg(long)]
    pub use_pvalue: bool,
    /// Average accuracy per document instead of pooling all pairs.
    #[arg(long)]
    pub per_document: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Truth {
    /// Every document in A is more coherent than every document in B.
    AMoreCoherent,
    /// Every document in B is more coherent than every document in A.
    BMoreCoherent,
    /// Compare record labels using the `--classes` order.
    Labels,
}

#[derive(Debug, Clone, Args)]
pub struct RelativeArgs {
    #[arg(long)]
    pub set_a: PathBuf,
    #[arg(long)]
    pub set_b: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "a-more-coherent")]
    pub truth: Truth,
    /// Label order from least to most coherent.
    #[arg(long, value_delimiter = ',', default_value = "low,medium,high")]
    pub classes: Vec<String>,
    #[arg(long)]
    pub use_pvalue: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Label order from least to most coherent.
    #[arg(long, value_delimiter = ',', default_value = "low,medium,high")]
    pub classes: Vec<String>,
    #[arg(long)]
    pub use_pvalue: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub corpus_a: PathBuf,
    #[arg(long)]
    pub corpus_b: PathBuf,
    /// `name=path`; repeat for each model.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    /// Only compare documents with equal ids.
    #[arg(long)]
    pub matched_ids: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON file with a `weights` matrix; defaults to the identity.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub step_size: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub epsilon: f64,
    /// Use one random interior triplet per sequence in each batch.
    #[arg(long)]
    pub triplet_mode: bool,
    /// Shrink toward `I` rather than `σ̂²·I`.
    #[arg(long)]
    pub ignore_scale: bool,
    /// Known generating covariance of the encoded space; reports the recovery error.
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
