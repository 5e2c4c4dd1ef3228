use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "luskin",
    version,
    about = "Fairness audits and repairs for tabular classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filtered positive-ratio test on the dataset's own labels.
    Audit(AuditArgs),
    /// Two-stage retraining through a synthetic fair training set.
    Retrain(RetrainArgs),
    /// Per-group decision thresholds tuned on a validation split.
    TuneThresholds(TuneArgs),
    /// Logistic training with a score-distribution penalty, one run per alpha.
    TrainFair(TrainFairArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Headed CSV file.
    #[arg(long, value_name = "CSV", required_unless_present = "demo")]
    pub data: Option<PathBuf>,
    /// JSON column list: `[{"name", "kind", "role"}, ...]`.
    #[arg(long, value_name = "JSON", required_unless_present = "demo")]
    pub schema: Option<PathBuf>,
    /// Use the built-in synthetic biased dataset instead of --data/--schema.
    #[arg(long, conflicts_with_all = ["data", "schema"])]
    pub demo: bool,
    #[arg(long, env = "LUSKIN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Directory for report.json, CSV tables and artifacts.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FairnessArgs {
    /// Protected group, e.g. `race=White`.
    #[arg(long, value_name = "COL=VAL")]
    pub protected: Option<String>,
    /// Row filter on an unprotected column; repeat for a conjunction.
    #[arg(long, num_args = 3, value_names = ["COL", "OP", "VAL"], action = clap::ArgAction::Append)]
    pub filter: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fairness: FairnessArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RetrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fairness: FairnessArgs,
    /// 1: selective risk adjustment, 2: risk-based flipping.
    #[arg(long, default_value = "2", value_parser = ["1", "2"])]
    pub algo: String,
    #[arg(long, default_value = "lr", value_parser = ["lr", "mlp"])]
    pub first_model: String,
    #[arg(long, default_value = "mlp", value_parser = ["lr", "mlp"])]
    pub second_model: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, value_name = "F,F,F", default_value = "0.4,0.4,0.2")]
    pub split: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Grouping column and reference group, e.g. `race=white`.
    #[arg(long, value_name = "COL=VAL")]
    pub protected: Option<String>,
    #[arg(long, default_value = "lr", value_parser = ["lr", "svm"])]
    pub model: String,
    /// Threshold before tuning; defaults to 0.5 for lr and 0 for svm.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Train, validation and test fractions.
    #[arg(long, value_name = "F,F,F", default_value = "0.6,0.2,0.2")]
    pub split: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainFairArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Grouping column and reference group, e.g. `race=white`.
    #[arg(long, value_name = "COL=VAL")]
    pub protected: Option<String>,
    /// Likelihood weight; a comma-separated list runs a sweep.
    #[arg(long, value_name = "A[,A..]", default_value = "0.01,0.1,0.2,1")]
    pub alpha: String,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Kernel width; defaults to half the bin width.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Train, validation and test fractions.
    #[arg(long, value_name = "F,F,F", default_value = "0.6,0.2,0.2")]
    pub split: String,
}
