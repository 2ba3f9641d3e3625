use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `Rg` against `ln T` over the final decade of
/// checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub log_slope: f64,
    pub intercept: f64,
    /// `Rg(T_max) - Rg(T_max / 2)`, interpolating linearly in `ln T`.
    pub doubling_increment: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub log_slope: f64,
    pub predicted_slope: f64,
    /// `log_slope / predicted_slope`
    pub ratio: f64,
    pub doubling_increment: f64,
    pub points_used: usize,
}

impl FitResult {
    pub fn new(fit: LogFit, predicted_slope: f64) -> Self {
        Self {
            log_slope: fit.log_slope,
            predicted_slope,
            ratio: fit.log_slope / predicted_slope,
            doubling_increment: fit.doubling_increment,
            points_used: fit.points_used,
        }
    }
}

/// What ends up in `fit.json`: the fit, or why there is none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub result: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

pub fn fit_log_regret(checkpoints: &[(f64, f64)]) -> Result<LogFit> {
    if checkpoints.len() < 5 {
        return Err(Error::InsufficientSpan(format!(
            "{} checkpoints",
            checkpoints.len()
        )));
    }
    if checkpoints
        .iter()
        .any(|(t, r)| !(*t > 0.0) || !r.is_finite())
    {
        return Err(Error::InsufficientSpan(
            "times must be positive and regrets finite".into(),
        ));
    }
    if checkpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InsufficientSpan("times must increase".into()));
    }
    let t_min = checkpoints[0].0;
    let t_max = checkpoints[checkpoints.len() - 1].0;
    if t_max < 10.0 * t_min * (1.0 - 1e-12) {
        return Err(Error::InsufficientSpan(format!("span {t_min}..{t_max}")));
    }

    let cutoff = t_max / 10.0 * (1.0 - 1e-12);
    let tail: Vec<(f64, f64)> = checkpoints
        .iter()
        .filter(|(t, _)| *t >= cutoff)
        .map(|&(t, r)| (t.ln(), r))
        .collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientSpan(
            "fewer than 2 checkpoints in the final decade".into(),
        ));
    }
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let log_slope = sxy / sxx;

    Ok(LogFit {
        log_slope,
        intercept: mean_y - log_slope * mean_x,
        doubling_increment: checkpoints[checkpoints.len() - 1].1
            - interpolate_log(checkpoints, t_max / 2.0),
        points_used: tail.len(),
    })
}

fn interpolate_log(points: &[(f64, f64)], t: f64) -> f64 {
    let idx = points.partition_point(|p| p.0 < t);
    if idx == 0 {
        return points[0].1;
    }
    if idx == points.len() {
        return points[idx - 1].1;
    }
    let (t0, r0) = points[idx - 1];
    let (t1, r1) = points[idx];
    let w = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
    r0 + w * (r1 - r0)
}
