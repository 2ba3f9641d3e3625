use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::error::{Error, Result};
use crate::policy_gradient::{softmax, softmax_jacobian};
use crate::schedules::{Schedule, ScheduleKind};

/// Which mean-field system a trajectory integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemTag {
    /// Softmax policy gradient, integrated in weight space.
    SoftmaxOde,
    /// SAMBA, integrated directly on the probabilities.
    SambaOde,
}

/// Weight drift of the softmax policy gradient,
/// `dw_a'/dt = alpha sum_a'' p_a'' (r_a'' - r*) (I[a' == a''] - p_a')`,
/// evaluated as `alpha J^T (r - r*)` with `J` the softmax Jacobian.
pub fn softmax_ode_rhs(weights: &[f64], instance: &BanditInstance, alpha: f64) -> Result<Vec<f64>> {
    instance.check_len(weights.len())?;
    let probs = softmax(weights)?;
    let jacobian = softmax_jacobian(&probs)?;
    let centred: Vec<f64> = instance
        .means()
        .iter()
        .map(|r| r - instance.optimal_mean())
        .collect();
    Ok(jacobian
        .transpose_mul_vec(&centred)
        .into_iter()
        .map(|x| alpha * x)
        .collect())
}

/// `dp_a/dt = -alpha p_a^2 gap_a` for every suboptimal arm; the optimal arm
/// gains what the others lose, so the derivative sums to zero.
pub fn samba_ode_rhs(probs: &[f64], instance: &BanditInstance, alpha: f64) -> Result<Vec<f64>> {
    instance.check_len(probs.len())?;
    let mut out = vec![0.0; probs.len()];
    samba_drift_into(probs, instance, |_| alpha, &mut out);
    Ok(out)
}

fn samba_drift_into(
    probs: &[f64],
    instance: &BanditInstance,
    rate: impl Fn(f64) -> f64,
    out: &mut [f64],
) {
    let star = instance.optimal_arm();
    let mut gained = 0.0;
    for (a, (&p, &gap)) in probs.iter().zip(instance.gaps()).enumerate() {
        if a == star {
            continue;
        }
        out[a] = -rate(p) * p * p * gap;
        gained -= out[a];
    }
    out[star] = gained;
}

/// A mean-field system together with its instance and learning-rate schedule.
#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub system: SystemTag,
    pub instance: BanditInstance,
    pub schedule: Schedule,
}

impl OdeProblem {
    pub fn new(system: SystemTag, instance: BanditInstance, schedule: Schedule) -> Self {
        Self {
            system,
            instance,
            schedule,
        }
    }

    fn rate(&self, t: f64, p: f64) -> f64 {
        match self.schedule.kind {
            ScheduleKind::Constant => self.schedule.alpha0,
            ScheduleKind::InverseLogTime => self.schedule.alpha0 / (std::f64::consts::E + t).ln(),
            ScheduleKind::StateDependent => {
                self.schedule.alpha0 / (1.0 - p.max(f64::MIN_POSITIVE).ln())
            }
        }
    }

    /// Probabilities of a state vector (weights or probabilities).
    pub(crate) fn probs_into(&self, y: &[f64], probs: &mut [f64]) {
        match self.system {
            SystemTag::SambaOde => probs.copy_from_slice(y),
            SystemTag::SoftmaxOde => {
                let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (p, &w) in probs.iter_mut().zip(y) {
                    *p = (w - max)
                        .clamp(-crate::policy_gradient::WEIGHT_CLIP, 0.0)
                        .exp();
                    total += *p;
                }
                probs.iter_mut().for_each(|p| *p /= total);
            }
        }
    }

    /// Allocation-free right-hand side. `probs` is scratch space.
    pub(crate) fn eval(&self, t: f64, y: &[f64], out: &mut [f64], probs: &mut [f64]) {
        self.probs_into(y, probs);
        match self.system {
            SystemTag::SambaOde => {
                samba_drift_into(probs, &self.instance, |p| self.rate(t, p), out)
            }
            SystemTag::SoftmaxOde => {
                // dw_a/dt = -alpha p_a (gap_a - rg)
                let rg = self.instance.instantaneous_regret(probs);
                for (a, (&p, &gap)) in probs.iter().zip(self.instance.gaps()).enumerate() {
                    out[a] = -self.rate(t, p) * p * (gap - rg);
                }
            }
        }
    }

    pub fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.instance.check_len(y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        let mut out = vec![0.0; y.len()];
        let mut probs = vec![0.0; y.len()];
        self.eval(t, y, &mut out, &mut probs);
        Ok(out)
    }
}
