//! Command-line definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "icegraph", version, about = "Graph neural network event classification on a sparse 3D sensor array")]
pub struct Cli {
    /// Worker threads (0 = one per CPU). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or check a detector geometry file.
    #[command(subcommand)]
    Geom(GeomCommand),
    /// Simulate weighted signal and background events.
    Sim(SimArgs),
    /// Split an event file per class into train, validation and test files.
    Split(SplitArgs),
    /// Train the graph network with early stopping on the validation set.
    Train(TrainArgs),
    /// Score events with a model and report ROC, AUC and the operating point.
    Eval(EvalArgs),
    /// Tune or apply the stochasticity baseline.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Put a baseline and a GNN summary side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum GeomCommand {
    /// Write the standard 86-string geometry.
    Build {
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a geometry file and check its invariants.
    Validate { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub geom: PathBuf,
    /// key=value simulator settings; missing keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_signal: usize,
    #[arg(long)]
    pub n_background: usize,
    /// Overrides `seed` from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.5, 0.25, 0.25])]
    pub fractions: Vec<f64>,
    /// Receives train.events, validation.events and test.events.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training events.
    #[arg(long)]
    pub events: PathBuf,
    /// Validation events used for early stopping.
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub geom: PathBuf,
    /// key=value trainer settings; missing keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `weighted_loss` from the config file.
    #[arg(long)]
    pub weighted_loss: Option<bool>,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Per-epoch CSV.
    #[arg(long)]
    pub report: PathBuf,
    /// Write 0 in the seconds column so the report is reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// One or more models; the best one on these events is reported.
    #[arg(long, required = true, num_args = 1..)]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub geom: PathBuf,
    #[arg(long)]
    pub roc_out: PathBuf,
    #[arg(long)]
    pub summary_out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub target_snr: f64,
    /// Events used to pick among several models; defaults to `--events`.
    #[arg(long)]
    pub selection_events: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BaselineCommand {
    /// Grid-search the two stochasticity cuts on a training set.
    Tune(BaselineTuneArgs),
    /// Apply tuned cuts to an event file.
    Eval(BaselineEvalArgs),
}

#[derive(Debug, Args)]
pub struct BaselineTuneArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub geom: PathBuf,
    #[arg(long)]
    pub out_cuts: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub target_snr: f64,
    /// Quantile levels per statistic.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// Denominator of the peak ratio: mean or median.
    #[arg(long, default_value = "mean")]
    pub peak_statistic: String,
    /// Extra fixed cut on the cosine of the zenith angle.
    #[arg(long)]
    pub cos_zenith_min: Option<f64>,
    /// Extra fixed cut on the total charge, photoelectrons.
    #[arg(long)]
    pub total_charge_min: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BaselineEvalArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub cuts: PathBuf,
    /// Defaults to the standard geometry; must match the one used for tuning.
    #[arg(long)]
    pub geom: Option<PathBuf>,
    #[arg(long)]
    pub summary_out: PathBuf,
    /// ROC of the baseline score.
    #[arg(long)]
    pub roc_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// GNN summary from `eval`.
    #[arg(long)]
    pub gnn: PathBuf,
    /// Baseline summary from `baseline eval`.
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub csv_out: PathBuf,
}
