use serde::{Deserialize, Serialize};

use super::rhs::{OdeProblem, SystemTag};
use crate::error::{Error, Result};
use crate::policy_gradient::softmax;

/// Largest tolerated departure from the simplex before a step is rejected.
pub const SIMPLEX_DRIFT_LIMIT: f64 = 1e-6;
/// Number of times [`integrate_refining`] halves the step size.
pub const MAX_REFINEMENTS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub time: f64,
    pub probs: Vec<f64>,
    /// Present for the softmax system only.
    pub weights: Option<Vec<f64>>,
}

impl OdeState {
    pub fn from_weights(time: f64, weights: Vec<f64>) -> Result<Self> {
        let probs = softmax(&weights)?;
        Ok(Self {
            time,
            probs,
            weights: Some(weights),
        })
    }

    pub fn from_probs(time: f64, probs: Vec<f64>) -> Result<Self> {
        crate::policy_gradient::check_probability_vector(&probs)?;
        Ok(Self {
            time,
            probs,
            weights: None,
        })
    }

    /// Uniform starting point suited to `system`.
    pub fn uniform(system: SystemTag, n_arms: usize) -> Result<Self> {
        match system {
            SystemTag::SoftmaxOde => Self::from_weights(0.0, vec![0.0; n_arms]),
            SystemTag::SambaOde => Self::from_probs(0.0, vec![1.0 / n_arms as f64; n_arms]),
        }
    }
}

/// Which integration steps end up in the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    EveryStep,
    /// The initial state, every k-th step and the final step.
    Stride(usize),
    /// The first grid point at or after each requested time.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub probs: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    /// Instantaneous regret `sum_a gap_a p_a`.
    pub rg: f64,
    /// Trapezoid quadrature of `rg` from the initial time.
    pub cumulative_regret: f64,
    /// Smallest probability of the optimal arm seen on any step so far.
    pub optimal_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub system: SystemTag,
    pub step_size: f64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }
}

/// Classical fixed-step fourth-order Runge–Kutta from `initial.time` to
/// `initial.time + horizon`.
///
/// The step grid is `t0 + k dt`; the last step is shortened if `horizon` is
/// not a multiple of `dt`. Fails with [`Error::StepTooLarge`] as soon as the
/// probabilities leave the simplex by more than [`SIMPLEX_DRIFT_LIMIT`].
pub fn rk4_integrate(
    problem: &OdeProblem,
    initial: &OdeState,
    horizon: f64,
    dt: f64,
    record: &Record,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
        });
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let n = problem.instance.n_arms();
    let mut y = match (problem.system, &initial.weights) {
        (SystemTag::SoftmaxOde, Some(w)) => w.clone(),
        (SystemTag::SoftmaxOde, None) => initial.probs.iter().map(|p| p.ln()).collect(),
        (SystemTag::SambaOde, _) => initial.probs.clone(),
    };
    problem.instance.check_len(y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }

    let star = problem.instance.optimal_arm();
    let t0 = initial.time;
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as u64;

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut probs = vec![0.0; n];

    let mut recorder = Recorder::new(record, t0);
    problem.probs_into(&y, &mut probs);
    let mut rg = problem.instance.instantaneous_regret(&probs);
    let mut cumulative = 0.0;
    let mut floor = probs[star];
    recorder.offer(
        0,
        steps,
        t0,
        &y,
        &probs,
        rg,
        cumulative,
        floor,
        problem.system,
    );

    let mut t = t0;
    for k in 1..=steps {
        let t_next = if k == steps {
            t0 + horizon
        } else {
            t0 + k as f64 * dt
        };
        let h = t_next - t;

        problem.eval(t, &y, &mut k1, &mut probs);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        problem.eval(t + 0.5 * h, &tmp, &mut k2, &mut probs);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        problem.eval(t + 0.5 * h, &tmp, &mut k3, &mut probs);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        problem.eval(t + h, &tmp, &mut k4, &mut probs);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = t_next;

        problem.probs_into(&y, &mut probs);
        let drift = simplex_drift(&probs);
        if drift > SIMPLEX_DRIFT_LIMIT || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepTooLarge { time: t, drift });
        }
        let rg_next = problem.instance.instantaneous_regret(&probs);
        cumulative += 0.5 * h * (rg + rg_next);
        rg = rg_next;
        floor = floor.min(probs[star]);
        recorder.offer(
            k,
            steps,
            t,
            &y,
            &probs,
            rg,
            cumulative,
            floor,
            problem.system,
        );
    }

    Ok(Trajectory {
        system: problem.system,
        step_size: dt,
        samples: recorder.samples,
    })
}

/// [`rk4_integrate`], halving `dt` up to [`MAX_REFINEMENTS`] times while the
/// simplex check trips.
pub fn integrate_refining(
    problem: &OdeProblem,
    initial: &OdeState,
    horizon: f64,
    dt: f64,
    record: &Record,
) -> Result<Trajectory> {
    let mut step = dt;
    let mut attempt = 0;
    loop {
        match rk4_integrate(problem, initial, horizon, step, record) {
            Err(Error::StepTooLarge { .. }) if attempt < MAX_REFINEMENTS => {
                step /= 2.0;
                attempt += 1;
            }
            other => return other,
        }
    }
}

fn simplex_drift(probs: &[f64]) -> f64 {
    let total: f64 = probs.iter().sum();
    let below = probs.iter().map(|&p| -p).fold(0.0, f64::max);
    let above = probs.iter().map(|&p| p - 1.0).fold(0.0, f64::max);
    (total - 1.0).abs().max(below).max(above)
}

struct Recorder<'a> {
    record: &'a Record,
    next_time: usize,
    samples: Vec<TrajectorySample>,
    t0: f64,
}

impl<'a> Recorder<'a> {
    fn new(record: &'a Record, t0: f64) -> Self {
        Self {
            record,
            next_time: 0,
            samples: Vec::new(),
            t0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn offer(
        &mut self,
        step: u64,
        total_steps: u64,
        t: f64,
        y: &[f64],
        probs: &[f64],
        rg: f64,
        cumulative: f64,
        floor: f64,
        system: SystemTag,
    ) {
        let keep = match self.record {
            Record::EveryStep => true,
            Record::Stride(k) => step.is_multiple_of((*k).max(1) as u64) || step == total_steps,
            Record::Times(times) => {
                let mut hit = false;
                // tolerance absorbs k * dt rounding on the grid
                let slack = 1e-9 * (1.0 + t.abs());
                while self.next_time < times.len()
                    && times[self.next_time] - self.t0 <= t - self.t0 + slack
                {
                    hit = true;
                    self.next_time += 1;
                }
                hit
            }
        };
        if keep {
            self.samples.push(TrajectorySample {
                time: t,
                probs: probs.to_vec(),
                weights: (system == SystemTag::SoftmaxOde).then(|| y.to_vec()),
                rg,
                cumulative_regret: cumulative,
                optimal_floor: floor,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::BanditInstance;
    use crate::ode::closed_form_samba;
    use crate::schedules::Schedule;

    fn samba_problem(means: Vec<f64>, alpha: f64) -> OdeProblem {
        OdeProblem::new(
            SystemTag::SambaOde,
            BanditInstance::new(means).unwrap(),
            Schedule::constant(alpha).unwrap(),
        )
    }

    #[test]
    fn zero_drift_gives_constant_trajectory() {
        let problem = samba_problem(vec![0.4, 0.4, 0.4], 1.0);
        let init = OdeState::from_probs(0.0, vec![0.2, 0.3, 0.5]).unwrap();
        let traj = rk4_integrate(&problem, &init, 5.0, 0.1, &Record::EveryStep).unwrap();
        assert_eq!(traj.samples.len(), 51);
        for s in &traj.samples {
            assert_eq!(s.probs, init.probs);
            assert_eq!(s.cumulative_regret, 0.0);
        }
    }

    fn max_closed_form_error(dt: f64, horizon: f64) -> f64 {
        let problem = samba_problem(vec![0.3, 0.7], 1.0);
        let init = OdeState::uniform(SystemTag::SambaOde, 2).unwrap();
        let traj = rk4_integrate(&problem, &init, horizon, dt, &Record::EveryStep).unwrap();
        traj.samples
            .iter()
            .map(|s| (s.probs[0] - closed_form_samba(0.5, 0.4, 1.0, s.time).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn samba_matches_closed_form() {
        assert!(max_closed_form_error(1e-3, 100.0) < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let coarse = max_closed_form_error(0.4, 20.0);
        let fine = max_closed_form_error(0.2, 20.0);
        let ratio = coarse / fine;
        assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn record_policies() {
        let problem = samba_problem(vec![0.3, 0.7], 1.0);
        let init = OdeState::uniform(SystemTag::SambaOde, 2).unwrap();
        let strided = rk4_integrate(&problem, &init, 1.05, 0.1, &Record::Stride(4)).unwrap();
        let times: Vec<f64> = strided.samples.iter().map(|s| s.time).collect();
        assert_eq!(times.len(), 4);
        assert!((times[3] - 1.05).abs() < 1e-12);

        let at = rk4_integrate(
            &problem,
            &init,
            2.0,
            0.1,
            &Record::Times(vec![0.3, 0.31, 0.35, 1.0, 2.0]),
        )
        .unwrap();
        let times: Vec<f64> = at.samples.iter().map(|s| s.time).collect();
        assert_eq!(times.len(), 4);
        assert!((times[0] - 0.3).abs() < 1e-12);
        assert!((times[1] - 0.4).abs() < 1e-12);
        assert!((times[3] - 2.0).abs() < 1e-12);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_arguments() {
        let problem = samba_problem(vec![0.3, 0.7], 1.0);
        let init = OdeState::uniform(SystemTag::SambaOde, 2).unwrap();
        assert!(rk4_integrate(&problem, &init, 1.0, 0.0, &Record::EveryStep).is_err());
        assert!(rk4_integrate(&problem, &init, 0.05, 0.1, &Record::EveryStep).is_err());
        let wrong = OdeState::uniform(SystemTag::SambaOde, 3).unwrap();
        assert!(rk4_integrate(&problem, &wrong, 1.0, 0.1, &Record::EveryStep).is_err());
    }

    #[test]
    fn oversized_step_is_detected_and_refined() {
        // Starting close to the boundary, a huge step overshoots p_0 below 0.
        let problem = samba_problem(vec![0.0, 1.0], 1.0);
        let init = OdeState::from_probs(0.0, vec![0.9, 0.1]).unwrap();
        let err = rk4_integrate(&problem, &init, 40.0, 20.0, &Record::EveryStep).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
        let traj = integrate_refining(&problem, &init, 40.0, 20.0, &Record::EveryStep).unwrap();
        assert!(traj.step_size < 20.0);
        let last = traj.last().unwrap();
        let exact = closed_form_samba(0.9, 1.0, 1.0, 40.0).unwrap();
        assert!((last.probs[0] - exact).abs() < 1e-3);
    }
}
