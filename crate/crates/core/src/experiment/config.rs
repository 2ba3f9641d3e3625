use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::error::{Error, Result};
use crate::policy_gradient::Baseline;
use crate::schedules::{Schedule, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SoftmaxPg,
    Samba,
    SoftmaxOde,
    SambaOde,
}

impl Algorithm {
    pub fn is_ode(self) -> bool {
        matches!(self, Algorithm::SoftmaxOde | Algorithm::SambaOde)
    }

    pub fn is_softmax(self) -> bool {
        matches!(self, Algorithm::SoftmaxPg | Algorithm::SoftmaxOde)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax_pg" => Ok(Self::SoftmaxPg),
            "samba" => Ok(Self::Samba),
            "softmax_ode" => Ok(Self::SoftmaxOde),
            "samba_ode" => Ok(Self::SambaOde),
            other => Err(Error::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Checkpoints per decade when none are given explicitly.
pub const CHECKPOINTS_PER_DECADE: u32 = 20;

fn default_schedule() -> ScheduleKind {
    ScheduleKind::Constant
}

fn default_dt() -> f64 {
    1e-2
}

fn default_replications() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Everything needed to reproduce one experiment.
///
/// `horizon` is a step count for the stochastic algorithms and a time for
/// the ODE systems. `checkpoint_times` defaults to geometric spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance_means: Vec<f64>,
    pub algorithm: Algorithm,
    pub alpha0: f64,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub baseline: Baseline,
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub checkpoint_times: Option<Vec<f64>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also write one CSV per replication (stochastic runs).
    #[serde(default)]
    pub per_rep: bool,
    /// Also write `regret.svg`.
    #[serde(default)]
    pub plot: bool,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, instance_means: Vec<f64>, alpha0: f64, horizon: f64) -> Self {
        Self {
            instance_means,
            algorithm,
            alpha0,
            schedule: default_schedule(),
            baseline: Baseline::default(),
            horizon,
            dt: default_dt(),
            replications: default_replications(),
            base_seed: 0,
            checkpoint_times: None,
            output_dir: default_output_dir(),
            per_rep: false,
            plot: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn instance(&self) -> Result<BanditInstance> {
        BanditInstance::new(self.instance_means.clone())
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.schedule, self.alpha0)
    }

    /// Checks every field; nothing runs until this passes.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        self.instance()?;
        self.schedule()?;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return invalid(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.algorithm.is_ode() {
            if !(self.dt > 0.0) || !self.dt.is_finite() || self.dt > self.horizon {
                return invalid(format!("dt must lie in (0, horizon], got {}", self.dt));
            }
        } else {
            if self.horizon.fract() != 0.0 || self.horizon > u32::MAX as f64 {
                return invalid(format!(
                    "stochastic horizon is a step count, got {}",
                    self.horizon
                ));
            }
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1".into());
        }
        if let Baseline::Fixed(b) = self.baseline {
            if !b.is_finite() {
                return invalid("fixed baseline must be finite".into());
            }
        }
        if let Some(times) = &self.checkpoint_times {
            if times.iter().any(|t| !(*t > 0.0) || *t > self.horizon) {
                return invalid("checkpoint times must lie in (0, horizon]".into());
            }
            if times.windows(2).any(|w| w[0] >= w[1]) {
                return invalid("checkpoint times must be strictly increasing".into());
            }
            if !self.algorithm.is_ode() && times.iter().any(|t| t.fract() != 0.0) {
                return invalid("stochastic checkpoints are step counts".into());
            }
        }
        Ok(())
    }

    /// Explicit checkpoints, or 20 per decade from `1` (or `dt` for short
    /// ODE horizons) up to and including the horizon.
    pub fn checkpoints(&self) -> Vec<f64> {
        if let Some(times) = &self.checkpoint_times {
            return times.clone();
        }
        let start: f64 = if self.algorithm.is_ode() && self.horizon < 1.0 {
            self.dt
        } else {
            1.0
        };
        let mut out: Vec<f64> = Vec::new();
        let mut k = 0;
        loop {
            let mut t = start * 10f64.powf(f64::from(k) / f64::from(CHECKPOINTS_PER_DECADE));
            if !self.algorithm.is_ode() {
                t = t.round();
            }
            if t >= self.horizon * (1.0 - 1e-12) {
                break;
            }
            if out.last().is_none_or(|&last| t > last) {
                out.push(t);
            }
            k += 1;
        }
        out.push(self.horizon);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let text =
            r#"{"instance_means":[0.3,0.7],"algorithm":"samba_ode","alpha0":1.0,"horizon":100.0}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.schedule, ScheduleKind::Constant);
        assert_eq!(cfg.baseline, Baseline::RunningMean);
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.replications, 1);
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);

        let mut full = cfg.clone();
        full.baseline = Baseline::Fixed(0.25);
        full.schedule = ScheduleKind::StateDependent;
        full.checkpoint_times = Some(vec![1.0, 2.0]);
        let back = ExperimentConfig::from_json(&full.to_json().unwrap()).unwrap();
        assert_eq!(back, full);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = r#"{"instance_means":[0.3,0.7],"algorithm":"samba","alpha0":0.1,"horizon":10,"speed":3}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::new(Algorithm::Samba, vec![0.3, 0.7], 0.1, 1000.0);
        ok.validate().unwrap();

        let mut bad = ok.clone();
        bad.horizon = 10.5;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.instance_means = vec![0.3];
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.replications = 0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.alpha0 = -1.0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.checkpoint_times = Some(vec![5.0, 3.0]);
        assert!(bad.validate().is_err());

        let mut bad = ExperimentConfig::new(Algorithm::SambaOde, vec![0.3, 0.7], 1.0, 1.0);
        bad.dt = 2.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_checkpoints_are_geometric() {
        let cfg = ExperimentConfig::new(Algorithm::SambaOde, vec![0.3, 0.7], 1.0, 1e4);
        let cps = cfg.checkpoints();
        assert_eq!(cps.len(), 81);
        assert_eq!(cps[0], 1.0);
        assert!((cps[20] - 10.0).abs() < 1e-9);
        assert_eq!(*cps.last().unwrap(), 1e4);

        let cfg = ExperimentConfig::new(Algorithm::Samba, vec![0.3, 0.7], 0.1, 1000.0);
        let cps = cfg.checkpoints();
        assert!(cps.iter().all(|t| t.fract() == 0.0));
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*cps.last().unwrap(), 1000.0);
    }
}
