//! Seeded experiment runner: configuration, stochastic replications and ODE
//! runs, log-slope fits against the analytic rates, and result files.

mod config;
mod fit;
mod output;
mod run;

pub use config::{Algorithm, ExperimentConfig, CHECKPOINTS_PER_DECADE};
pub use fit::{fit_log_regret, FitReport, FitResult, LogFit};
pub use output::{emit_outputs, render_svg, REGRET_HEADER};
pub use run::{
    predicted_slope, run_experiment, run_replication, CheckpointRow, DiagnosticsSummary,
    ExperimentResult, ReplicationResult,
};
