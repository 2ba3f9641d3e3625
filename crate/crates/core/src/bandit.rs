//! Bernoulli bandit instances, seeded reward streams and the pseudo-regret ledger.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of Bernoulli arms with known means.
///
/// The optimal arm is the lowest index attaining the largest mean, and
/// `gaps[a] = optimal_mean - means[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    means: Vec<f64>,
    optimal_arm: usize,
    optimal_mean: f64,
    gaps: Vec<f64>,
}

impl BanditInstance {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::TooFewArms(means.len()));
        }
        for (arm, &value) in means.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::MeanOutOfRange { arm, value });
            }
        }
        let mut optimal_arm = 0;
        for (arm, &m) in means.iter().enumerate() {
            if m > means[optimal_arm] {
                optimal_arm = arm;
            }
        }
        let optimal_mean = means[optimal_arm];
        let gaps = means.iter().map(|&m| optimal_mean - m).collect();
        Ok(Self {
            means,
            optimal_arm,
            optimal_mean,
            gaps,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal_arm
    }

    pub fn optimal_mean(&self) -> f64 {
        self.optimal_mean
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn gap(&self, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        Ok(self.gaps[arm])
    }

    pub fn n_arms(&self) -> usize {
        self.means.len()
    }

    pub fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.means.len() {
            Ok(())
        } else {
            Err(Error::InvalidArm {
                arm,
                n_arms: self.means.len(),
            })
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n_arms() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n_arms(),
                got: len,
            })
        }
    }

    /// Draws a {0,1} reward for `arm`; 1 with probability `means[arm]`.
    pub fn sample_reward(&self, arm: usize, rng: &mut RngStream) -> Result<u8> {
        self.check_arm(arm)?;
        Ok(u8::from(rng.uniform() < self.means[arm]))
    }

    /// Instantaneous expected regret `sum_a gap_a * p_a` of a policy.
    pub fn instantaneous_regret(&self, probs: &[f64]) -> f64 {
        self.gaps.iter().zip(probs).map(|(g, p)| g * p).sum()
    }
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id selecting an independent keystream,
/// so replications never share state and the sequence does not depend on
/// the platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Inverse-CDF draw from a categorical distribution.
///
/// Falls back to the last arm with positive mass if rounding leaves the
/// cumulative sum below the uniform draw.
pub fn sample_categorical(probs: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let idx = cumulative.partition_point(|&c| c <= u);
    if idx < probs.len() {
        idx
    } else {
        probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(probs.len() - 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub cumulative_pseudo_regret: f64,
    pub step_count: u64,
    /// `(time, rg)` checkpoints, when the caller records them.
    pub samples: Vec<(f64, f64)>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_step(&mut self, gap: f64) -> Result<()> {
        if gap.is_nan() {
            return Err(Error::NonFinite("gap"));
        }
        if gap < 0.0 {
            return Err(Error::NegativeGap(gap));
        }
        self.cumulative_pseudo_regret += gap;
        self.step_count += 1;
        Ok(())
    }

    pub fn checkpoint(&mut self, time: f64, rg: f64) {
        self.samples.push((time, rg));
    }
}
