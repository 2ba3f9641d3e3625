//! SAMBA: stochastic gradient on the probability simplex with
//! importance-weighted rewards and per-arm rate `alpha * p_a^2`.
//!
//! Every arm other than the leader (the current most likely arm) moves by
//!
//! ```text
//! p_a += alpha * p_a^2 * (R I[A = a] / p_a - R I[A = leader] / p_leader)
//! ```
//!
//! with all terms evaluated before the step. The leader then absorbs the
//! remaining mass, `p_leader = 1 - sum_{a != leader} p_a`, and is
//! recomputed. A step that would push any probability out of `(0, 1)` is an
//! error; the state is left untouched.

use crate::bandit::{sample_categorical, BanditInstance, RngStream};
use crate::error::{check_positive, Error, Result};
use crate::schedules::Schedule;

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SambaState {
    probs: Vec<f64>,
    leader: usize,
    alpha: f64,
}

/// Lowest index attaining the maximum.
pub fn leader_of(probs: &[f64]) -> usize {
    let mut best = 0;
    for (a, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = a;
        }
    }
    best
}

impl SambaState {
    pub fn new(probs: Vec<f64>, alpha: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        if probs.len() < 2 {
            return Err(Error::TooFewArms(probs.len()));
        }
        if let Some((arm, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p < 1.0))
        {
            return Err(Error::NotOnSimplex(format!(
                "p[{arm}] = {value} not in (0, 1)"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotOnSimplex(format!("sums to {total}")));
        }
        let leader = leader_of(&probs);
        Ok(Self {
            probs,
            leader,
            alpha,
        })
    }

    pub fn uniform(n_arms: usize, alpha: f64) -> Result<Self> {
        if n_arms < 2 {
            return Err(Error::TooFewArms(n_arms));
        }
        Self::new(vec![1.0 / n_arms as f64; n_arms], alpha)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_arms(&self) -> usize {
        self.probs.len()
    }

    /// Largest base rate for which no single step can leave the simplex.
    ///
    /// The worst case is the leader paying out: every other arm loses
    /// `alpha p_a^2 / p_leader <= alpha p_a`, which stays below `p_a` for any
    /// `alpha < 1`, whatever the state.
    pub fn admissible_alpha_bound(&self) -> f64 {
        1.0
    }

    pub fn sample_arm(&self, rng: &mut RngStream) -> usize {
        sample_categorical(&self.probs, rng)
    }

    /// Per-arm increments of one step with per-arm base rates, without any
    /// simplex check. The leader's entry is minus the sum of the others.
    pub fn increments(&self, played: usize, reward: u8, rates: &[f64]) -> Vec<f64> {
        let n = self.probs.len();
        let mut delta = vec![0.0; n];
        if reward == 0 {
            return delta;
        }
        let r = f64::from(reward);
        let p_leader = self.probs[self.leader];
        let mut moved = 0.0;
        for a in (0..n).filter(|&a| a != self.leader) {
            let p = self.probs[a];
            let own = if played == a { r / p } else { 0.0 };
            let lead = if played == self.leader {
                r / p_leader
            } else {
                0.0
            };
            delta[a] = rates[a] * p * p * (own - lead);
            moved += delta[a];
        }
        delta[self.leader] = -moved;
        delta
    }

    /// One SAMBA step with the state's own base rate.
    pub fn samba_step(&mut self, played: usize, reward: u8) -> Result<()> {
        let rates = vec![self.alpha; self.n_arms()];
        self.step_with_rates(played, reward, &rates)
    }

    /// One step with rates drawn from `schedule` at time `t`; the
    /// state-dependent schedule uses each arm's pre-step probability.
    pub fn step_with_schedule(
        &mut self,
        played: usize,
        reward: u8,
        schedule: &Schedule,
        t: f64,
    ) -> Result<()> {
        let rates = self
            .probs
            .iter()
            .map(|&p| schedule.rate_at(t, p))
            .collect::<Result<Vec<_>>>()?;
        self.step_with_rates(played, reward, &rates)
    }

    pub fn step_with_rates(&mut self, played: usize, reward: u8, rates: &[f64]) -> Result<()> {
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
        if rates.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rates.len(),
            });
        }
        let delta = self.increments(played, reward, rates);
        let mut next = self.probs.clone();
        let mut others = 0.0;
        for a in (0..n).filter(|&a| a != self.leader) {
            next[a] += delta[a];
            others += next[a];
        }
        next[self.leader] = 1.0 - others;
        let leader = self.leader;
        if let Some(arm) = (0..n)
            .filter(|&a| a != leader)
            .chain(std::iter::once(leader))
            .find(|&a| !(next[a] > 0.0 && next[a] < 1.0))
        {
            return Err(Error::SimplexViolation {
                arm,
                value: next[arm],
            });
        }
        self.leader = leader_of(&next);
        self.probs = next;
        Ok(())
    }
}

/// Exact expected one-step increment of every probability: the 2N outcomes
/// (played arm, reward) weighted by `p_arm * P(reward | arm)`.
pub fn expected_increment(state: &SambaState, instance: &BanditInstance) -> Result<Vec<f64>> {
    instance.check_len(state.n_arms())?;
    let n = state.n_arms();
    let rates = vec![state.alpha(); n];
    let mut mean = vec![0.0; n];
    for arm in 0..n {
        let r = instance.means()[arm];
        for (reward, weight) in [(0u8, 1.0 - r), (1u8, r)] {
            let delta = state.increments(arm, reward, &rates);
            for a in 0..n {
                mean[a] += state.probs()[arm] * weight * delta[a];
            }
        }
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_examples() {
        let mut s = SambaState::new(vec![0.3, 0.7], 0.1).unwrap();
        assert_eq!(s.leader(), 1);
        s.samba_step(0, 1).unwrap();
        assert!((s.probs()[0] - 0.33).abs() < 1e-12);
        assert!((s.probs()[1] - 0.67).abs() < 1e-12);

        let mut s = SambaState::new(vec![0.3, 0.7], 0.1).unwrap();
        s.samba_step(1, 1).unwrap();
        let expected = 0.3 - 0.1 * 0.09 / 0.7;
        assert!((s.probs()[0] - expected).abs() < 1e-12);
        assert!((s.probs()[0] - 0.287_143).abs() < 1e-6);
        assert!((s.probs()[1] - 0.712_857).abs() < 1e-6);
    }

    #[test]
    fn zero_reward_is_a_no_op() {
        let base = SambaState::new(vec![0.2, 0.5, 0.3], 0.4).unwrap();
        for arm in 0..3 {
            let mut s = base.clone();
            s.samba_step(arm, 0).unwrap();
            assert_eq!(s, base);
        }
    }

    #[test]
    fn boundary_learning_rate() {
        let mut s = SambaState::new(vec![0.5, 0.5], 0.99).unwrap();
        assert_eq!(s.leader(), 0);
        s.samba_step(0, 1).unwrap();
        assert!((s.probs()[1] - 0.005).abs() < 1e-12);

        let mut s = SambaState::new(vec![0.5, 0.5], 1.0).unwrap();
        let before = s.clone();
        let err = s.samba_step(0, 1).unwrap_err();
        assert!(matches!(err, Error::SimplexViolation { arm: 1, value } if value == 0.0));
        assert_eq!(s, before);
    }

    #[test]
    fn rejects_invalid_states_and_inputs() {
        assert!(SambaState::new(vec![0.5, 0.6], 0.1).is_err());
        assert!(SambaState::new(vec![1.0, 0.0], 0.1).is_err());
        assert!(SambaState::new(vec![1.0], 0.1).is_err());
        assert!(SambaState::new(vec![0.5, 0.5], 0.0).is_err());
        let mut s = SambaState::uniform(3, 0.1).unwrap();
        assert!(matches!(s.samba_step(3, 1), Err(Error::InvalidArm { .. })));
        assert!(matches!(s.samba_step(0, 2), Err(Error::InvalidReward(2))));
    }

    #[test]
    fn leader_tie_breaks_low() {
        assert_eq!(leader_of(&[0.25, 0.375, 0.375]), 1);
        assert_eq!(SambaState::uniform(4, 0.1).unwrap().leader(), 0);
    }

    #[test]
    fn admissible_bound_on_exhaustive_grid() {
        // Worst case for every grid state: the leader pays out. Any alpha just
        // below the returned bound keeps the step on the simplex.
        let step = 0.01;
        let grid: Vec<f64> = (1..100).map(|i| i as f64 * step).collect();
        let mut states = Vec::new();
        for &a in &grid {
            states.push(vec![a, 1.0 - a]);
            for &b in &grid {
                if a + b < 1.0 - 1e-12 {
                    states.push(vec![a, b, 1.0 - a - b]);
                }
            }
        }
        for probs in states {
            let s = SambaState::new(probs.clone(), 0.5).unwrap();
            let bound = s.admissible_alpha_bound();
            assert_eq!(bound, 1.0);
            let mut t = SambaState::new(probs, bound * (1.0 - 1e-9)).unwrap();
            let leader = t.leader();
            t.samba_step(leader, 1).unwrap();
        }
    }

    #[test]
    fn sample_arm_frequencies() {
        let s = SambaState::new(vec![0.3, 0.7], 0.1).unwrap();
        let mut rng = RngStream::new(99, 0);
        let n = 100_000;
        let zeros = (0..n).filter(|_| s.sample_arm(&mut rng) == 0).count();
        assert!((zeros as f64 / n as f64 - 0.3).abs() < 0.01);

        let eps = 1e-15;
        let s = SambaState::new(vec![1.0 - eps, eps], 0.1).unwrap();
        assert!((0..10_000).all(|_| s.sample_arm(&mut rng) == 0));
    }

    fn linear_scan(probs: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        probs.len() - 1
    }

    #[test]
    fn sample_arm_matches_linear_scan() {
        let mut gen = ChaCha8Rng::seed_from_u64(5);
        for case in 0..20 {
            let n = gen.gen_range(2..8);
            let raw: Vec<f64> = (0..n).map(|_| gen.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let s = SambaState::new(probs.clone(), 0.1).unwrap();
            let mut a = RngStream::new(77, case);
            let mut b = RngStream::new(77, case);
            for _ in 0..1000 {
                assert_eq!(s.sample_arm(&mut a), linear_scan(&probs, b.uniform()));
            }
        }
    }

    fn random_state(gen: &mut ChaCha8Rng, n: usize, alpha: f64) -> SambaState {
        let raw: Vec<f64> = (0..n).map(|_| gen.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        SambaState::new(raw.iter().map(|x| x / total).collect(), alpha).unwrap()
    }

    #[test]
    fn importance_weighted_reward_is_unbiased() {
        let mut gen = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = gen.gen_range(2..6);
            let s = random_state(&mut gen, n, 0.1);
            let means: Vec<f64> = (0..n).map(|_| gen.gen_range(0.0..1.0)).collect();
            for target in 0..n {
                // E[R_target I[A = target] / p_target], enumerated.
                let mut e = 0.0;
                for arm in 0..n {
                    let hit = if arm == target {
                        1.0 / s.probs()[target]
                    } else {
                        0.0
                    };
                    e += s.probs()[arm] * means[arm] * hit;
                }
                assert!((e - means[target]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gap_fixed_point_in_expectation() {
        let mut gen = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = gen.gen_range(2..6);
            let alpha = gen.gen_range(0.01..0.99);
            let s = random_state(&mut gen, n, alpha);
            let r = gen.gen_range(0.0..1.0);
            let inst = BanditInstance::new(vec![r; n]).unwrap();
            for d in expected_increment(&s, &inst).unwrap() {
                assert!(d.abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn random_trajectories_stay_on_simplex(
            seed in any::<u64>(),
            alpha in 0.01f64..0.99,
            n in 2usize..6,
        ) {
            let mut gen = ChaCha8Rng::seed_from_u64(seed);
            let means: Vec<f64> = (0..n).map(|_| gen.gen_range(0.0..1.0)).collect();
            let inst = BanditInstance::new(means).unwrap();
            let mut s = SambaState::uniform(n, alpha).unwrap();
            let mut rng = RngStream::new(seed, 1);
            for _ in 0..500 {
                let arm = s.sample_arm(&mut rng);
                let reward = inst.sample_reward(arm, &mut rng).unwrap();
                s.samba_step(arm, reward).unwrap();
                let total: f64 = s.probs().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                prop_assert!(s.probs().iter().all(|&p| p > 0.0 && p < 1.0));
                let max = s.probs().iter().cloned().fold(0.0, f64::max);
                prop_assert_eq!(s.probs()[s.leader()], max);
            }
        }
    }
}
