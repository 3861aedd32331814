use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "gateslab",
    version,
    about = "Architecture encoders, ranking predictors and predictor-based NAS"
)]
pub struct Cli {
    /// Worker threads for parallel scoring.
    #[arg(long, global = true, env = "GATESLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset scored by the built-in oracle.
    Gen(GenArgs),
    /// Train a predictor on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Measure score variance across isomorphic relabellings.
    Isocheck(IsoArgs),
    /// Run predictor-based search or a baseline.
    Search(SearchArgs),
    /// Sweep the inner sample ratio r = n/k.
    #[command(name = "sweep-r")]
    SweepR(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    /// Space preset: oon/nb101, oon/nb101-5k, ooe/nb201 or ooe/enas.
    #[arg(long)]
    pub space: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Oracle seed (defaults to --seed).
    #[arg(long)]
    pub oracle_seed: Option<u64>,
    #[arg(long)]
    pub depth_coef: Option<f64>,
    #[arg(long)]
    pub noise_coef: Option<f64>,
    /// Also write an oracle checkpoint stub that `eval` accepts.
    #[arg(long)]
    pub oracle_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum EncoderArg {
    Gates,
    Gcn,
    GcnGlobal,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum LossArg {
    Mse,
    Hinge,
    Bce,
    Comparator,
    Listmle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FracMode {
    Prefix,
    Random,
}

/// Predictor hyperparameters shared by `train`, `search` and `sweep-r`.
#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "gates")]
    pub encoder: EncoderArg,
    #[arg(long, value_enum, default_value = "hinge")]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// ListMLE list length.
    #[arg(long, default_value_t = 4)]
    pub list_len: usize,
    /// Start from the small desk-scale widths instead of the full-scale defaults.
    #[arg(long)]
    pub desk: bool,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Hidden (information) width of GATES/GCN layers.
    #[arg(long)]
    pub hid: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    /// JSONL dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Separate test set; otherwise the tail of --data after --split.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Prefix fraction of --data used for training when --test is absent.
    #[arg(long, default_value_t = 0.9)]
    pub split: f64,
    /// Fraction of the training part actually used.
    #[arg(long, default_value_t = 1.0)]
    pub train_frac: f64,
    #[arg(long, value_enum, default_value = "prefix")]
    pub frac_mode: FracMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint path; the report and learning curve are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Predictor checkpoint or oracle stub.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Top-K cut-offs for N@K and Precision@K.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 50, 100])]
    pub ks: Vec<usize>,
    /// Seed of the comparator's randomized quicksort.
    #[arg(long, default_value_t = 0)]
    pub sort_seed: u64,
    /// Metrics JSON path; Precision@K CSV goes to `<out>.pk.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct IsoArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-group CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Strategy {
    Pbnas,
    Random,
    Evolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum InnerArg {
    Random,
    Ea,
}

/// Where ground truth comes from.
#[derive(Args, Debug, Serialize)]
pub struct SpaceArgs {
    /// Dataset used as both the search pool and the lookup evaluator.
    #[arg(long, conflicts_with = "space")]
    pub data: Option<PathBuf>,
    /// Open space scored by the synthetic oracle.
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub oracle_seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    #[command(flatten)]
    pub source: SpaceArgs,
    #[arg(long, value_enum, default_value = "pbnas")]
    pub strategy: Strategy,
    #[arg(long, value_enum, default_value = "random")]
    pub inner: InnerArg,
    /// Candidates per stage (random) or evolution steps (ea); defaults 2500 / 100.
    #[arg(long)]
    pub n: Option<usize>,
    /// Evaluations per stage after the first; defaults 5 / 1.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub pop: usize,
    #[arg(long, default_value_t = 5)]
    pub tournament: usize,
    /// First-stage uniform evaluations; defaults 100 / 50.
    #[arg(long)]
    pub initial: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub stages: usize,
    /// Total ground-truth evaluations.
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    /// Stop once one of the dataset's true top-K has been evaluated.
    #[arg(long)]
    pub stop_top: Option<usize>,
    #[arg(long)]
    pub warm_start: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10, 100, 1000])]
    pub r: Vec<usize>,
    /// Runs per ratio, seeded 0..N.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Target: any of the dataset's true top-K.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[arg(long, default_value_t = 100)]
    pub initial: usize,
    #[arg(long, default_value_t = 1000)]
    pub stages: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sweep CSV.
    #[arg(long)]
    pub out: PathBuf,
}
