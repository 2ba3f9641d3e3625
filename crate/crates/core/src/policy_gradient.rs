//! Softmax-parameterized policy and its stochastic policy-gradient update.

use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::error::{check_positive, Error, Result};
use crate::matrix::Matrix;

/// Hard bound applied to weights before exponentiation.
pub const WEIGHT_CLIP: f64 = 700.0;

/// Max-subtracted softmax. Invariant to adding a constant to every weight.
pub fn softmax(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weights"));
    }
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = weights
        .iter()
        .map(|&w| (w - max).clamp(-WEIGHT_CLIP, WEIGHT_CLIP).exp())
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

pub(crate) fn check_probability_vector(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::NotOnSimplex("empty vector".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
        return Err(Error::NotOnSimplex(format!(
            "entry outside [0, 1]: {probs:?}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotOnSimplex(format!("sums to {total}")));
    }
    Ok(())
}

/// Jacobian of the softmax map expressed in its output: entry `(a, a')` is
/// `dp_a / dw_a' = p_a (I[a == a'] - p_a')`.
pub fn softmax_jacobian(probs: &[f64]) -> Result<Matrix> {
    check_probability_vector(probs)?;
    Ok(Matrix::from_fn(probs.len(), |a, b| {
        let indicator = if a == b { 1.0 } else { 0.0 };
        probs[a] * (indicator - probs[b])
    }))
}

/// Weights of a softmax policy with the probabilities cached alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxState {
    weights: Vec<f64>,
    probs: Vec<f64>,
}

impl SoftmaxState {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let probs = softmax(&weights)?;
        Ok(Self { weights, probs })
    }

    pub fn uniform(n_arms: usize) -> Result<Self> {
        Self::new(vec![0.0; n_arms])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_arms(&self) -> usize {
        self.weights.len()
    }

    /// One stochastic gradient step with a shared learning rate:
    /// `w_a += alpha (R - B) (I[a == played] - p_a)` for every arm, using the
    /// probabilities from before the step.
    pub fn pg_step(&mut self, played: usize, reward: u8, baseline: f64, alpha: f64) -> Result<()> {
        check_positive("alpha", alpha)?;
        let rates = vec![alpha; self.n_arms()];
        self.pg_step_with_rates(played, reward, baseline, &rates)
    }

    /// Same update with a per-arm learning rate (state-dependent schedules).
    pub fn pg_step_with_rates(
        &mut self,
        played: usize,
        reward: u8,
        baseline: f64,
        rates: &[f64],
    ) -> Result<()> {
        let n = self.n_arms();
        if played >= n {
            return Err(Error::InvalidArm {
                arm: played,
                n_arms: n,
            });
        }
        if reward > 1 {
            return Err(Error::InvalidReward(reward));
        }
        if !baseline.is_finite() {
            return Err(Error::NonFinite("baseline"));
        }
        if rates.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rates.len(),
            });
        }
        for &rate in rates {
            check_positive("alpha", rate)?;
        }
        let advantage = f64::from(reward) - baseline;
        for a in 0..n {
            let indicator = if a == played { 1.0 } else { 0.0 };
            self.weights[a] += rates[a] * advantage * (indicator - self.probs[a]);
        }
        self.probs = softmax(&self.weights)?;
        Ok(())
    }
}

/// Baseline subtracted from the reward. Never depends on the arm being updated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Baseline {
    Zero,
    Fixed(f64),
    #[default]
    RunningMean,
}

/// Running value of a [`Baseline`] over the rewards seen so far.
#[derive(Debug, Clone)]
pub struct BaselineTracker {
    kind: Baseline,
    reward_sum: f64,
    count: u64,
}

impl BaselineTracker {
    pub fn new(kind: Baseline) -> Self {
        Self {
            kind,
            reward_sum: 0.0,
            count: 0,
        }
    }

    /// Current value. The running mean is 0 before any reward is observed.
    pub fn value(&self) -> f64 {
        match self.kind {
            Baseline::Zero => 0.0,
            Baseline::Fixed(b) => b,
            Baseline::RunningMean if self.count == 0 => 0.0,
            Baseline::RunningMean => self.reward_sum / self.count as f64,
        }
    }

    pub fn observe(&mut self, reward: u8) {
        self.reward_sum += f64::from(reward);
        self.count += 1;
    }
}

/// Expected weight drift of the policy-gradient update with the baseline held
/// at `baseline`:
/// `alpha * sum_a'' p_a'' (r_a'' - baseline) (I[a' == a''] - p_a')`.
pub fn drift_with_baseline(
    probs: &[f64],
    instance: &BanditInstance,
    alpha: f64,
    baseline: f64,
) -> Result<Vec<f64>> {
    instance.check_len(probs.len())?;
    let means = instance.means();
    let n = probs.len();
    Ok((0..n)
        .map(|target| {
            alpha
                * (0..n)
                    .map(|a| {
                        let indicator = if a == target { 1.0 } else { 0.0 };
                        probs[a] * (means[a] - baseline) * (indicator - probs[target])
                    })
                    .sum::<f64>()
        })
        .collect())
}

/// The mean-field weight drift with the baseline set to the optimal mean.
pub fn expected_update_direction(
    state: &SoftmaxState,
    instance: &BanditInstance,
    alpha: f64,
) -> Result<Vec<f64>> {
    drift_with_baseline(state.probs(), instance, alpha, instance.optimal_mean())
}
