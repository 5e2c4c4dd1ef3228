//! Command implementations behind the `luskin` binary.

pub mod args;
pub mod commands;
pub mod error;

pub use args::{
    AuditArgs, Cli, Command, DataArgs, FairnessArgs, RetrainArgs, TrainFairArgs, TuneArgs,
};
pub use commands::{
    cmd_audit, cmd_retrain, cmd_train_fair, cmd_tune_thresholds, parity_data, rate_gaps, Outcome,
    ParityData, EXIT_UNFAIR, PCA_COMPONENTS,
};
pub use error::{CliError, Result};

/// Exit status for any failure.
pub const EXIT_ERROR: i32 = 1;

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Audit(a) => cmd_audit(a),
        Command::Retrain(a) => cmd_retrain(a),
        Command::TuneThresholds(a) => cmd_tune_thresholds(a),
        Command::TrainFair(a) => cmd_train_fair(a),
    }
}
