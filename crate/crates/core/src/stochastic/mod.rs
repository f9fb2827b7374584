//! Stochastic particle and jump-process simulators, exact small-system
//! distributions, and large-deviation slope estimation.
//!
//! Every simulator is a pure function of its parameters and a `u64` seed fed
//! to ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`). Ensembles give
//! replica `r` the seed `seed ^ r` and collect results in replica order, so
//! they do not depend on scheduling.

mod exact;
mod jumps;
mod particles;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::CompensatedSum;

pub use exact::{
    ldp_slope_estimate, ldp_slope_from_log, reversibility_check, sanov_exact,
    sanov_log_probability, spin_flip_master, MagnetizationDistribution, ReversibilityReport,
    SlopeEstimate, TypeProbability, MASTER_STATE_LIMIT, SANOV_ALPHABET_LIMIT, SANOV_N_LIMIT,
};
pub use jumps::{
    birth_death_simulate, spin_flip_simulate, ssep_simulate, JumpPath, SpinState, SsepTrajectory,
};
pub use particles::{brownian_cloud, interacting_sde, Interaction, ParticleTrajectory, SdeModel};

pub type RngSeed = u64;

pub fn rng(seed: RngSeed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `f(seed ^ r)` for `r = 0..count` and returns results in replica order.
pub fn replicas<T, F>(count: usize, seed: RngSeed, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(RngSeed) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|r| f(seed ^ r as u64))
        .collect()
}

/// Pointwise ensemble statistics on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub replicas: usize,
    pub seed: RngSeed,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Unbiased sample variance.
    pub var: Vec<f64>,
}

impl EnsembleSummary {
    /// `samples[r][k]` is replica `r` at `times[k]`.
    pub fn from_samples(
        n: usize,
        seed: RngSeed,
        times: Vec<f64>,
        samples: &[Vec<f64>],
    ) -> Result<Self> {
        let r = samples.len();
        if r < 2 {
            return Err(invalid("an ensemble needs at least two replicas"));
        }
        if samples.iter().any(|s| s.len() != times.len()) {
            return Err(invalid("every replica needs one value per time"));
        }
        let mut mean = Vec::with_capacity(times.len());
        let mut var = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            let m = samples
                .iter()
                .map(|s| s[k])
                .collect::<CompensatedSum>()
                .value()
                / r as f64;
            let v = samples
                .iter()
                .map(|s| (s[k] - m).powi(2))
                .collect::<CompensatedSum>()
                .value()
                / (r - 1) as f64;
            mean.push(m);
            var.push(v);
        }
        Ok(Self {
            n,
            replicas: r,
            seed,
            times,
            mean,
            var,
        })
    }

    /// Standard error of the mean at time index `k`.
    pub fn standard_error(&self, k: usize) -> f64 {
        (self.var[k] / self.replicas as f64).sqrt()
    }
}

/// Number of steps `⌈t_end / dt⌉` (tolerating roundoff) and the step sizes,
/// the last one shortened to land on `t_end`.
pub(crate) fn step_sizes(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid("need dt > 0 and t_end >= 0"));
    }
    let ratio = t_end / dt;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    Ok((0..steps)
        .map(|k| {
            if k + 1 == steps {
                t_end - dt * k as f64
            } else {
                dt
            }
        })
        .collect())
}
