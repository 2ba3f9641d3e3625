//! Closed-form solutions, regret bounds and the regret-decay diagnostics.

use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::error::{check_positive, Error, Result};
use crate::matrix::Matrix;
use crate::policy_gradient::{check_probability_vector, drift_with_baseline, softmax_jacobian};
use crate::schedules::Schedule;

/// Solution of `dp/dt = -alpha gap p^2` from `p(0) = p0`:
/// `p0 / (1 + alpha gap p0 t)`.
pub fn closed_form_samba(p0: f64, gap: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p0",
            value: p0,
        });
    }
    if !(gap >= 0.0) {
        return Err(Error::NegativeGap(gap));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
        });
    }
    check_positive("alpha", alpha)?;
    Ok(p0 / (1.0 + alpha * gap * p0 * t))
}

/// Upper bound on the softmax ODE's instantaneous regret at time `t` given
/// a lower bound `p_star_floor` on the optimal arm's probability over `[0, t]`:
/// `rg0 / (1 + rg0 alpha floor^2 t)`.
pub fn theorem1_regret_bound(p_star_floor: f64, rg0: f64, alpha: f64, t: f64) -> f64 {
    rg0 / (1.0 + rg0 * alpha * p_star_floor * p_star_floor * t)
}

/// Integral over `[0, horizon]` of [`theorem1_regret_bound`]:
/// `ln(1 + rg0 alpha floor^2 T) / (alpha floor^2)`.
pub fn theorem1_cumulative_bound(p_star_floor: f64, rg0: f64, alpha: f64, horizon: f64) -> f64 {
    let c = alpha * p_star_floor * p_star_floor;
    if c <= 0.0 {
        return rg0 * horizon;
    }
    (rg0 * c * horizon).ln_1p() / c
}

/// Cumulative regret bound for the SAMBA ODE from a uniform start:
/// `sum_{a != a*} ln(1 + alpha gap_a T / N) / (alpha gap_a)`.
///
/// A suboptimal arm tied with the optimum never moves and contributes its
/// full mass `T / N`, the limit of the summand as the gap goes to zero.
pub fn theorem2_regret_bound(instance: &BanditInstance, alpha: f64, horizon: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let n = instance.n_arms() as f64;
    Ok((0..instance.n_arms())
        .filter(|&a| a != instance.optimal_arm())
        .map(|a| {
            let gap = instance.gaps()[a];
            if gap == 0.0 {
                horizon / n
            } else {
                (alpha * gap * horizon / n).ln_1p() / (alpha * gap)
            }
        })
        .sum())
}

/// `sum_{a != a*} 1 / (alpha gap_a)`, the log-slope of [`theorem2_regret_bound`].
pub fn theorem2_log_slope(instance: &BanditInstance, alpha: f64) -> f64 {
    (0..instance.n_arms())
        .filter(|&a| a != instance.optimal_arm())
        .map(|a| 1.0 / (alpha * instance.gaps()[a]))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretDiagnostics {
    /// `sum_a gap_a p_a`
    pub rg: f64,
    /// `gap_a p_a` per arm.
    pub rg_vector: Vec<f64>,
    /// Entry `(a, a')` is `I[a == a'] - p_a'`.
    pub d_matrix: Matrix,
    /// `sum_a (gap_a p_a - rg p_a)^2`, i.e. the squared norm of
    /// `d_matrix^T rg_vector`.
    pub decay_norm_sq: f64,
    /// `d rg / dt` along the softmax flow, through the Jacobian chain rule.
    pub regret_derivative: f64,
    /// `|regret_derivative + alpha decay_norm_sq|`
    pub decay_identity_residual: f64,
    /// `alpha decay_norm_sq - alpha p_{a*}^2 rg^2`; never negative in exact arithmetic.
    pub theorem1_bound_slack: f64,
}

pub fn regret_diagnostics(
    probs: &[f64],
    instance: &BanditInstance,
    alpha: f64,
) -> Result<RegretDiagnostics> {
    instance.check_len(probs.len())?;
    check_probability_vector(probs)?;
    let n = probs.len();
    let d_matrix = Matrix::from_fn(n, |a, b| if a == b { 1.0 } else { 0.0 } - probs[b]);
    let rg_vector: Vec<f64> = probs
        .iter()
        .zip(instance.gaps())
        .map(|(p, g)| p * g)
        .collect();
    let rg: f64 = rg_vector.iter().sum();
    if rg == 0.0 {
        return Ok(RegretDiagnostics {
            rg,
            rg_vector,
            d_matrix,
            decay_norm_sq: 0.0,
            regret_derivative: 0.0,
            decay_identity_residual: 0.0,
            theorem1_bound_slack: 0.0,
        });
    }

    let projected = d_matrix.transpose_mul_vec(&rg_vector);
    let decay_norm_sq: f64 = projected.iter().map(|x| x * x).sum();

    let weight_drift = drift_with_baseline(probs, instance, alpha, instance.optimal_mean())?;
    let prob_drift = softmax_jacobian(probs)?.mul_vec(&weight_drift);
    let regret_derivative: f64 = instance
        .gaps()
        .iter()
        .zip(&prob_drift)
        .map(|(g, dp)| g * dp)
        .sum();

    let p_star = probs[instance.optimal_arm()];
    Ok(RegretDiagnostics {
        rg,
        rg_vector,
        d_matrix,
        decay_norm_sq,
        regret_derivative,
        decay_identity_residual: (regret_derivative + alpha * decay_norm_sq).abs(),
        theorem1_bound_slack: alpha * decay_norm_sq - alpha * p_star * p_star * rg * rg,
    })
}

/// `x^-lambda - elapsed_alpha_integral`.
pub fn lyapunov_value(x: f64, elapsed_alpha_integral: f64, lambda_exponent: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
        });
    }
    check_positive("lambda", lambda_exponent)?;
    Ok(x.powf(-lambda_exponent) - elapsed_alpha_integral)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    pub lambda_exponent: f64,
    pub schedule: Schedule,
}

impl LyapunovConfig {
    pub fn new(lambda_exponent: f64, schedule: Schedule) -> Result<Self> {
        check_positive("lambda", lambda_exponent)?;
        Ok(Self {
            lambda_exponent,
            schedule,
        })
    }

    /// Lyapunov value for a suboptimal arm's probability `x` at time `t`,
    /// with `alpha(s) * gap` as the integrand.
    pub fn value(&self, x: f64, t: f64, gap: f64) -> Result<f64> {
        let integral = gap * self.schedule.alpha_integral(t)?;
        lyapunov_value(x, integral, self.lambda_exponent)
    }
}
