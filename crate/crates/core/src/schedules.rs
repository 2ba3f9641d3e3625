//! Learning-rate schedules: constant, slowly decaying in time, and decaying in
//! the arm's own probability.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `alpha0`
    Constant,
    /// `alpha0 / ln(e + t)`
    InverseLogTime,
    /// `alpha0 / (1 - ln p_a)`
    StateDependent,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "inverse_log_time" => Ok(Self::InverseLogTime),
            "state_dependent" => Ok(Self::StateDependent),
            other => Err(Error::InvalidConfig(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub alpha0: f64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, alpha0: f64) -> Result<Self> {
        check_positive("alpha0", alpha0)?;
        Ok(Self { kind, alpha0 })
    }

    pub fn constant(alpha0: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant, alpha0)
    }

    pub fn inverse_log_time(alpha0: f64) -> Result<Self> {
        Self::new(ScheduleKind::InverseLogTime, alpha0)
    }

    pub fn state_dependent(alpha0: f64) -> Result<Self> {
        Self::new(ScheduleKind::StateDependent, alpha0)
    }

    pub fn is_time_based(&self) -> bool {
        self.kind != ScheduleKind::StateDependent
    }

    /// Rate at time `t` for an arm currently played with probability `p_a`.
    /// Always lies in `(0, alpha0]`.
    pub fn rate_at(&self, t: f64, p_a: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
            });
        }
        match self.kind {
            ScheduleKind::Constant => Ok(self.alpha0),
            ScheduleKind::InverseLogTime => Ok(self.alpha0 / (E + t).ln()),
            ScheduleKind::StateDependent => {
                if !(p_a > 0.0 && p_a <= 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "p_a",
                        value: p_a,
                    });
                }
                Ok(self.alpha0 / (1.0 - p_a.ln()))
            }
        }
    }

    /// `int_0^t alpha(s) ds` for the time-based schedules.
    pub fn alpha_integral(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
            });
        }
        match self.kind {
            ScheduleKind::Constant => Ok(self.alpha0 * t),
            ScheduleKind::InverseLogTime => Ok(self.alpha0 * integrate_inverse_log(t)),
            ScheduleKind::StateDependent => Err(Error::PathDependentIntegral),
        }
    }
}

const PANELS_PER_SEGMENT: usize = 128;

/// `int_0^t ds / ln(e + s)` by composite Simpson on segments over which
/// `e + s` doubles, so the relative accuracy does not degrade for large `t`.
fn integrate_inverse_log(t: f64) -> f64 {
    let f = |s: f64| 1.0 / (E + s).ln();
    let mut total = 0.0;
    let mut lo = 0.0;
    while lo < t {
        let hi = (2.0 * (E + lo) - E).min(t);
        total += simpson(f, lo, hi, PANELS_PER_SEGMENT);
        lo = hi;
    }
    total
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    debug_assert!(panels.is_multiple_of(2));
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}
