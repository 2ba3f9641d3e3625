use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::fit::{fit_log_regret, FitReport, FitResult};
use crate::bandit::{sample_categorical, BanditInstance, RegretLedger, RngStream};
use crate::error::{Error, Result};
use crate::ode::{
    integrate_refining, regret_diagnostics, theorem1_cumulative_bound, theorem2_log_slope,
    theorem2_regret_bound, OdeProblem, OdeState, Record, SystemTag, Trajectory,
};
use crate::policy_gradient::{BaselineTracker, SoftmaxState};
use crate::samba::SambaState;
use crate::schedules::{Schedule, ScheduleKind};

/// One line of `regret.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub time: f64,
    pub mean_rg: f64,
    pub mean_regret: f64,
    pub std_regret: f64,
    /// Absent for non-constant schedules, where the closed-form bounds do
    /// not apply.
    pub theorem_bound: Option<f64>,
}

/// Per-replication record of a stochastic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: usize,
    /// Final ledger; `samples` holds `(checkpoint, rg)`.
    pub ledger: RegretLedger,
    /// Cumulative pseudo-regret at each checkpoint.
    pub regret: Vec<f64>,
    /// Running minimum of the optimal arm's probability at each checkpoint.
    pub optimal_floor: Vec<f64>,
    pub final_probs: Vec<f64>,
    pub plays: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub final_mean_probs: Vec<f64>,
    pub min_optimal_prob: f64,
    /// Step size actually used by the integrator after any refinement.
    pub step_size: Option<f64>,
    /// Softmax ODE: worst residual of the regret-decay identity over checkpoints.
    pub max_decay_identity_residual: Option<f64>,
    /// Softmax ODE: smallest slack of the decay lower bound over checkpoints.
    pub min_theorem1_slack: Option<f64>,
    /// Stochastic runs: share of replications whose most likely arm is optimal at the end.
    pub optimal_leader_fraction: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<CheckpointRow>,
    pub trajectory: Option<Trajectory>,
    pub replications: Vec<ReplicationResult>,
    pub fit: FitReport,
    pub diagnostics: DiagnosticsSummary,
}

impl ExperimentResult {
    pub fn n_arms(&self) -> usize {
        self.config.instance_means.len()
    }
}

/// Slope the regret curve should approach: `N^2 / alpha` for softmax,
/// `sum_{a != a*} 1 / (alpha gap_a)` for SAMBA.
pub fn predicted_slope(algorithm: Algorithm, instance: &BanditInstance, alpha: f64) -> f64 {
    if algorithm.is_softmax() {
        let n = instance.n_arms() as f64;
        n * n / alpha
    } else {
        theorem2_log_slope(instance, alpha)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let instance = config.instance()?;
    let schedule = config.schedule()?;
    let checkpoints = config.checkpoints();

    let (rows, trajectory, replications, diagnostics) = if config.algorithm.is_ode() {
        let (rows, trajectory, diagnostics) = run_ode(config, &instance, &schedule, &checkpoints)?;
        (rows, Some(trajectory), Vec::new(), diagnostics)
    } else {
        let reps = (0..config.replications)
            .into_par_iter()
            .map(|k| run_replication(config, &instance, &schedule, &checkpoints, k))
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let (rows, diagnostics) = aggregate(config, &instance, &checkpoints, &reps);
        (rows, None, reps, diagnostics)
    };

    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.time, r.mean_regret)).collect();
    let fit = match fit_log_regret(&series) {
        Ok(fit) => FitReport {
            result: Some(FitResult::new(
                fit,
                predicted_slope(config.algorithm, &instance, config.alpha0),
            )),
            skipped: None,
        },
        Err(err) => FitReport {
            result: None,
            skipped: Some(err.to_string()),
        },
    };

    Ok(ExperimentResult {
        config: config.clone(),
        rows,
        trajectory,
        replications,
        fit,
        diagnostics,
    })
}

fn rates(schedule: &Schedule, t: f64, probs: &[f64]) -> Result<Vec<f64>> {
    probs.iter().map(|&p| schedule.rate_at(t, p)).collect()
}

/// One seeded stochastic run; replication `k` draws from stream `k`.
pub fn run_replication(
    config: &ExperimentConfig,
    instance: &BanditInstance,
    schedule: &Schedule,
    checkpoints: &[f64],
    replication: usize,
) -> Result<ReplicationResult> {
    let n = instance.n_arms();
    let star = instance.optimal_arm();
    let horizon = config.horizon as u64;
    let mut rng = RngStream::new(config.base_seed, replication as u64);
    let mut ledger = RegretLedger::new();
    let mut plays = vec![0u64; n];
    let mut regret = Vec::with_capacity(checkpoints.len());
    let mut optimal_floor = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = 0;

    enum Learner {
        Softmax(SoftmaxState, BaselineTracker),
        Samba(SambaState),
    }
    let mut learner = match config.algorithm {
        Algorithm::SoftmaxPg => Learner::Softmax(
            SoftmaxState::uniform(n)?,
            BaselineTracker::new(config.baseline),
        ),
        Algorithm::Samba => Learner::Samba(SambaState::uniform(n, config.alpha0)?),
        other => {
            return Err(Error::InvalidConfig(format!(
                "{other:?} is not a stochastic algorithm"
            )))
        }
    };
    let probs_of = |l: &Learner| -> Vec<f64> {
        match l {
            Learner::Softmax(s, _) => s.probs().to_vec(),
            Learner::Samba(s) => s.probs().to_vec(),
        }
    };
    let mut floor = probs_of(&learner)[star];

    for step in 0..horizon {
        let t = step as f64;
        let result: Result<()> = (|| {
            let arm = match &learner {
                Learner::Softmax(s, _) => sample_categorical(s.probs(), &mut rng),
                Learner::Samba(s) => s.sample_arm(&mut rng),
            };
            let reward = instance.sample_reward(arm, &mut rng)?;
            ledger.record_step(instance.gaps()[arm])?;
            plays[arm] += 1;
            match &mut learner {
                Learner::Softmax(s, baseline) => {
                    let r = rates(schedule, t, s.probs())?;
                    s.pg_step_with_rates(arm, reward, baseline.value(), &r)?;
                    baseline.observe(reward);
                }
                Learner::Samba(s) => {
                    if schedule.kind == ScheduleKind::Constant {
                        s.samba_step(arm, reward)?;
                    } else {
                        s.step_with_schedule(arm, reward, schedule, t)?;
                    }
                }
            }
            Ok(())
        })();
        result.map_err(|source| Error::Replication {
            replication,
            step,
            source: Box::new(source),
        })?;

        let probs = probs_of(&learner);
        floor = floor.min(probs[star]);
        let done = (step + 1) as f64;
        while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] <= done {
            regret.push(ledger.cumulative_pseudo_regret);
            optimal_floor.push(floor);
            ledger.checkpoint(done, instance.instantaneous_regret(&probs));
            next_checkpoint += 1;
        }
    }

    Ok(ReplicationResult {
        replication,
        ledger,
        regret,
        optimal_floor,
        final_probs: probs_of(&learner),
        plays,
    })
}

fn aggregate(
    config: &ExperimentConfig,
    instance: &BanditInstance,
    checkpoints: &[f64],
    reps: &[ReplicationResult],
) -> (Vec<CheckpointRow>, DiagnosticsSummary) {
    let count = reps.len() as f64;
    let n = instance.n_arms();
    let rg0 = instance.instantaneous_regret(&vec![1.0 / n as f64; n]);
    let mut rows = Vec::with_capacity(checkpoints.len());
    for (i, &time) in checkpoints.iter().enumerate() {
        let mean_regret = reps.iter().map(|r| r.regret[i]).sum::<f64>() / count;
        let mean_rg = reps.iter().map(|r| r.ledger.samples[i].1).sum::<f64>() / count;
        let std_regret = if reps.len() > 1 {
            let ss: f64 = reps
                .iter()
                .map(|r| (r.regret[i] - mean_regret).powi(2))
                .sum();
            (ss / (count - 1.0)).sqrt()
        } else {
            0.0
        };
        let floor = reps
            .iter()
            .map(|r| r.optimal_floor[i])
            .fold(f64::INFINITY, f64::min);
        rows.push(CheckpointRow {
            time,
            mean_rg,
            mean_regret,
            std_regret,
            theorem_bound: theorem_bound(config, instance, rg0, floor, time),
        });
    }
    let mut final_mean_probs = vec![0.0; n];
    for r in reps {
        for (acc, p) in final_mean_probs.iter_mut().zip(&r.final_probs) {
            *acc += p / count;
        }
    }
    let leaders = reps
        .iter()
        .filter(|r| crate::samba::leader_of(&r.final_probs) == instance.optimal_arm())
        .count();
    let min_optimal_prob = reps
        .iter()
        .filter_map(|r| r.optimal_floor.last().copied())
        .fold(f64::INFINITY, f64::min);
    let diagnostics = DiagnosticsSummary {
        final_mean_probs,
        min_optimal_prob: if min_optimal_prob.is_finite() {
            min_optimal_prob
        } else {
            1.0 / n as f64
        },
        step_size: None,
        max_decay_identity_residual: None,
        min_theorem1_slack: None,
        optimal_leader_fraction: Some(leaders as f64 / count),
    };
    (rows, diagnostics)
}

fn theorem_bound(
    config: &ExperimentConfig,
    instance: &BanditInstance,
    rg0: f64,
    optimal_floor: f64,
    time: f64,
) -> Option<f64> {
    if config.schedule != ScheduleKind::Constant {
        return None;
    }
    if config.algorithm.is_softmax() {
        Some(theorem1_cumulative_bound(
            optimal_floor,
            rg0,
            config.alpha0,
            time,
        ))
    } else {
        theorem2_regret_bound(instance, config.alpha0, time).ok()
    }
}

fn run_ode(
    config: &ExperimentConfig,
    instance: &BanditInstance,
    schedule: &Schedule,
    checkpoints: &[f64],
) -> Result<(Vec<CheckpointRow>, Trajectory, DiagnosticsSummary)> {
    let system = match config.algorithm {
        Algorithm::SoftmaxOde => SystemTag::SoftmaxOde,
        _ => SystemTag::SambaOde,
    };
    let problem = OdeProblem::new(system, instance.clone(), *schedule);
    let initial = OdeState::uniform(system, instance.n_arms())?;
    let rg0 = instance.instantaneous_regret(&initial.probs);
    let trajectory = integrate_refining(
        &problem,
        &initial,
        config.horizon,
        config.dt,
        &Record::Times(checkpoints.to_vec()),
    )?;

    let rows = trajectory
        .samples
        .iter()
        .map(|s| CheckpointRow {
            time: s.time,
            mean_rg: s.rg,
            mean_regret: s.cumulative_regret,
            std_regret: 0.0,
            theorem_bound: theorem_bound(config, instance, rg0, s.optimal_floor, s.time),
        })
        .collect();

    let mut max_residual: Option<f64> = None;
    let mut min_slack: Option<f64> = None;
    if system == SystemTag::SoftmaxOde && schedule.kind == ScheduleKind::Constant {
        for s in &trajectory.samples {
            let d = regret_diagnostics(&s.probs, instance, schedule.alpha0)?;
            max_residual = Some(max_residual.map_or(d.decay_identity_residual, |m| {
                m.max(d.decay_identity_residual)
            }));
            min_slack =
                Some(min_slack.map_or(d.theorem1_bound_slack, |m| m.min(d.theorem1_bound_slack)));
        }
    }
    let last = trajectory.last();
    let diagnostics = DiagnosticsSummary {
        final_mean_probs: last.map_or_else(|| initial.probs.clone(), |s| s.probs.clone()),
        min_optimal_prob: last.map_or(initial.probs[instance.optimal_arm()], |s| s.optimal_floor),
        step_size: Some(trajectory.step_size),
        max_decay_identity_residual: max_residual,
        min_theorem1_slack: min_slack,
        optimal_leader_fraction: None,
    };
    Ok((rows, trajectory, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_slopes() {
        let inst = BanditInstance::new(vec![0.3, 0.7]).unwrap();
        assert!((predicted_slope(Algorithm::SambaOde, &inst, 1.0) - 2.5).abs() < 1e-12);
        assert_eq!(predicted_slope(Algorithm::SoftmaxOde, &inst, 1.0), 4.0);
        assert_eq!(predicted_slope(Algorithm::SoftmaxPg, &inst, 0.5), 8.0);
    }

    #[test]
    fn ledger_matches_play_counts() {
        for algorithm in [Algorithm::Samba, Algorithm::SoftmaxPg] {
            let mut cfg = ExperimentConfig::new(algorithm, vec![0.2, 0.5, 0.6], 0.2, 3000.0);
            cfg.base_seed = 9;
            let inst = cfg.instance().unwrap();
            let rep = run_replication(&cfg, &inst, &cfg.schedule().unwrap(), &cfg.checkpoints(), 0)
                .unwrap();
            let from_counts: f64 = rep
                .plays
                .iter()
                .zip(inst.gaps())
                .map(|(c, g)| *c as f64 * g)
                .sum();
            assert!((from_counts - rep.ledger.cumulative_pseudo_regret).abs() < 1e-9);
            assert_eq!(rep.ledger.step_count, 3000);
            assert!(rep.regret.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(rep.regret.len(), cfg.checkpoints().len());
        }
    }

    #[test]
    fn replication_errors_carry_index_and_step() {
        let mut cfg = ExperimentConfig::new(Algorithm::Samba, vec![0.0, 1.0], 1.5, 1000.0);
        cfg.replications = 2;
        let err = run_experiment(&cfg).unwrap_err();
        match err {
            Error::Replication {
                replication,
                source,
                ..
            } => {
                assert_eq!(replication, 0);
                assert!(matches!(*source, Error::SimplexViolation { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedules_run_for_both_learners() {
        for algorithm in [
            Algorithm::Samba,
            Algorithm::SoftmaxPg,
            Algorithm::SambaOde,
            Algorithm::SoftmaxOde,
        ] {
            for kind in [ScheduleKind::InverseLogTime, ScheduleKind::StateDependent] {
                let mut cfg = ExperimentConfig::new(algorithm, vec![0.3, 0.8], 0.5, 500.0);
                cfg.schedule = kind;
                cfg.dt = 0.05;
                let result = run_experiment(&cfg).unwrap();
                assert!(result.rows.iter().all(|r| r.theorem_bound.is_none()));
                assert!(result
                    .rows
                    .windows(2)
                    .all(|w| w[0].mean_regret <= w[1].mean_regret));
            }
        }
    }

    #[test]
    fn ode_bound_column_dominates() {
        for algorithm in [Algorithm::SambaOde, Algorithm::SoftmaxOde] {
            let cfg = ExperimentConfig::new(algorithm, vec![0.1, 0.4, 0.75], 1.0, 2000.0);
            let result = run_experiment(&cfg).unwrap();
            for row in &result.rows {
                assert!(row.mean_regret <= row.theorem_bound.unwrap() + 1e-9);
            }
            assert_eq!(result.rows.len(), cfg.checkpoints().len());
        }
    }
}
