use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "infometer", version, about = "Information-theoretic measurement with mandatory reporting manifests")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; generated and printed to stderr when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for surrogate, bootstrap and bipartition tasks.
    #[arg(long, global = true, env = "INFOMETER_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, global = true, default_value_t = 200)]
    pub surrogates: usize,
    /// Bootstrap replicates.
    #[arg(long, global = true, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, global = true, default_value_t = 0.95)]
    pub level: f64,
    /// Neighbour count for kNN estimators.
    #[arg(long, global = true, default_value_t = 4)]
    pub k: usize,
    /// Embedding as `l,k,tau`.
    #[arg(long, global = true)]
    pub embedding: Option<String>,
    /// Also show values in bits (stored values stay in nats).
    #[arg(long, global = true)]
    pub bits: bool,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    CsvSummary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy of one column (or several, for the kNN estimator).
    Entropy(EntropyArgs),
    /// KL divergence, cross-entropy or Jensen-Shannon divergence of two distributions.
    Kl(KlArgs),
    /// Mutual information between two column groups.
    Mi(DependenceArgs),
    /// Conditional mutual information I(X;Y|Z).
    Cmi(DependenceArgs),
    /// Transfer entropy from a source to a target column.
    Te(TeArgs),
    /// Active information storage of one column.
    Ais(SeriesArgs),
    /// Predictive information of one column.
    Predinfo(PredinfoArgs),
    /// Effective information of a TPM.
    Ei(TpmArgs),
    /// Bipartition Phi of a TPM.
    Phi(TpmArgs),
    /// Observational and/or causal autonomy.
    Autonomy(AutonomyArgs),
    /// Micro versus macro effective information.
    Emergence(EmergenceArgs),
    /// Recommend a measure and estimator.
    Advise(AdviseArgs),
    /// Directed TE between every pair of streams with corrected significance.
    Scan(ScanArgs),
    /// Generate ground-truth test systems.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntropyKind {
    Plugin,
    MillerMadow,
    Vasicek,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinRuleArg {
    EqualWidth,
    EqualFrequency,
}

#[derive(Debug, Args)]
pub struct Binning {
    /// Discretize real columns into this many bins first.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum, default_value_t = BinRuleArg::EqualFrequency)]
    pub bin_rule: BinRuleArg,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column name, or comma-separated names for a multivariate kNN estimate.
    #[arg(long)]
    pub column: String,
    #[arg(long, value_enum, default_value_t = EntropyKind::Plugin)]
    pub estimator: EntropyKind,
    /// Spacing window for Vasicek (default floor(sqrt(N))).
    #[arg(long)]
    pub m: Option<usize>,
    #[command(flatten)]
    pub binning: Binning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivergenceArg {
    Kl,
    CrossEntropy,
    Js,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Reverse,
}

#[derive(Debug, Args)]
pub struct KlArgs {
    /// Comma-separated probabilities (or counts) of p.
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q: String,
    #[arg(long, value_enum, default_value_t = DivergenceArg::Kl)]
    pub measure: DivergenceArg,
    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,
    /// Add this mass to every cell before normalizing.
    #[arg(long, conflicts_with = "clip_floor")]
    pub additive: Option<f64>,
    /// Raise reference cells to at least this value.
    #[arg(long)]
    pub clip_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DependenceKind {
    Ksg,
    Plugin,
}

#[derive(Debug, Args)]
pub struct DependenceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated column names.
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Conditioning columns (required for `cmi`).
    #[arg(long)]
    pub z: Option<String>,
    #[arg(long, value_enum, default_value_t = DependenceKind::Ksg)]
    pub estimator: DependenceKind,
    /// Rows are a time series: time-shift surrogates and block bootstrap.
    #[arg(long)]
    pub time_ordered: bool,
    #[command(flatten)]
    pub binning: Binning,
}

#[derive(Debug, Args)]
pub struct TeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub target: String,
    /// Further streams whose pasts are conditioned on.
    #[arg(long)]
    pub condition: Option<String>,
    #[arg(long, value_enum, default_value_t = DependenceKind::Ksg)]
    pub estimator: DependenceKind,
    /// Choose source lags up to this value by greedy selection.
    #[arg(long)]
    pub select_lags: Option<usize>,
    #[command(flatten)]
    pub binning: Binning,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: String,
    #[arg(long, value_enum, default_value_t = DependenceKind::Ksg)]
    pub estimator: DependenceKind,
    #[command(flatten)]
    pub binning: Binning,
}

#[derive(Debug, Args)]
pub struct PredinfoArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Past and future window length T.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct TpmArgs {
    /// TPM JSON: {"n": int, "tpm": [[...]]}.
    #[arg(long)]
    pub tpm: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmergenceArgs {
    #[arg(long)]
    pub tpm: PathBuf,
    /// Macro states as `0,1,2;3`.
    #[arg(long)]
    pub groups: String,
}

#[derive(Debug, Args)]
pub struct AutonomyArgs {
    /// TPM for the causal variant.
    #[arg(long)]
    pub tpm: Option<PathBuf>,
    /// System nodes of the TPM, comma-separated.
    #[arg(long)]
    pub v_nodes: Option<String>,
    /// Environment nodes of the TPM; defaults to all other nodes.
    #[arg(long)]
    pub e_nodes: Option<String>,
    /// Recorded activity for the observational variant.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// System columns of the recording.
    #[arg(long)]
    pub v_cols: Option<String>,
    /// Environment columns of the recording.
    #[arg(long)]
    pub e_cols: Option<String>,
    /// Column holding a trial identifier; rows of a trial must be contiguous.
    #[arg(long)]
    pub trial_column: Option<String>,
    /// Environment history length.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Uncertainty,
    CompareDistributions,
    Dependence,
    DirectedInfluence,
    TemporalMemory,
    AgentComplexity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKindArg {
    Discrete,
    Continuous,
    Mixed,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    #[arg(long, value_enum)]
    pub objective: ObjectiveArg,
    #[arg(long, value_enum, conflicts_with_all = ["continuous", "discrete"])]
    pub data_kind: Option<DataKindArg>,
    /// Shorthand for `--data-kind continuous`.
    #[arg(long)]
    pub continuous: bool,
    /// Shorthand for `--data-kind discrete`.
    #[arg(long, conflicts_with = "continuous")]
    pub discrete: bool,
    /// Dimension of the variables.
    #[arg(long, conflicts_with = "streams")]
    pub d: Option<usize>,
    /// Number of streams (directed influence).
    #[arg(long)]
    pub streams: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub n_samples: usize,
    /// Samples are time-ordered; implied by the temporal objectives.
    #[arg(long)]
    pub time_ordered: bool,
    /// A full TPM or do-access is available.
    #[arg(long)]
    pub interventional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    Bonferroni,
    BhFdr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditioningArg {
    AllOthers,
    Pairwise,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Restrict to these columns.
    #[arg(long)]
    pub columns: Option<String>,
    #[arg(long, value_enum, default_value_t = CorrectionArg::Bonferroni)]
    pub correction: CorrectionArg,
    #[arg(long, value_enum, default_value_t = ConditioningArg::AllOthers)]
    pub conditioning: ConditioningArg,
    #[arg(long, value_enum, default_value_t = DependenceKind::Ksg)]
    pub estimator: DependenceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    CoupledAr,
    PlantedNetwork,
    Chain,
    GaussianPair,
    UniformSymbols,
    ReactiveTpm,
    SelfCopyTpm,
    DegenerateTpm,
    TpmTrials,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub system: System,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1)]
    pub delay: usize,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 4)]
    pub alphabet: usize,
    /// Flip probability of the hidden environment node.
    #[arg(long, default_value_t = 0.05)]
    pub flip: f64,
    /// TPM to run for `tpm-trials`.
    #[arg(long)]
    pub tpm: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}
