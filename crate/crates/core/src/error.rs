use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("a bandit instance needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("mean reward {value} for arm {arm} is outside [0, 1]")]
    MeanOutOfRange { arm: usize, value: f64 },
    #[error("invalid arm index: {arm} for {n_arms} arms")]
    InvalidArm { arm: usize, n_arms: usize },
    #[error("reward must be 0 or 1, got {0}")]
    InvalidReward(u8),
    #[error("gap must be non-negative, got {0}")]
    NegativeGap(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("not a probability vector: {0}")]
    NotOnSimplex(String),
    #[error("SAMBA step left the simplex: p[{arm}] = {value} (learning rate too large)")]
    SimplexViolation { arm: usize, value: f64 },
    #[error("integration drifted off the simplex at t = {time} (drift {drift:e}); reduce dt")]
    StepTooLarge { time: f64, drift: f64 },
    #[error("the alpha integral of a state-dependent schedule is path dependent")]
    PathDependentIntegral,
    #[error("log-slope fit needs at least 5 checkpoints spanning a decade: {0}")]
    InsufficientSpan(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("replication {replication} failed at step {step}: {source}")]
    Replication {
        replication: usize,
        step: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TooFewArms(_) => "too_few_arms",
            Error::MeanOutOfRange { .. } => "mean_out_of_range",
            Error::InvalidArm { .. } => "invalid_arm",
            Error::InvalidReward(_) => "invalid_reward",
            Error::NegativeGap(_) => "negative_gap",
            Error::NonFinite(_) => "non_finite",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NotOnSimplex(_) => "not_on_simplex",
            Error::SimplexViolation { .. } => "simplex_violation",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::PathDependentIntegral => "path_dependent_integral",
            Error::InsufficientSpan(_) => "insufficient_span",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Replication { .. } => "replication_failed",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}
