use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{ln_factorials, log_sum_exp, CompensatedSum};

pub const MASTER_STATE_LIMIT: usize = 2000;
pub const SANOV_ALPHABET_LIMIT: usize = 6;
pub const SANOV_N_LIMIT: usize = 200;
/// Largest number of types `sanov_exact` will enumerate.
const SANOV_TYPE_LIMIT: usize = 2_000_000;

/// Law of the magnetization of `n` spins, indexed by the up-count `k`
/// (`m = 2k/n - 1`), kept in log space so far tails stay accurate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationDistribution {
    pub n: usize,
    pub log_probabilities: Vec<f64>,
}

impl MagnetizationDistribution {
    pub fn magnetization(&self, k: usize) -> f64 {
        2.0 * k as f64 / self.n as f64 - 1.0
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_probabilities.iter().map(|l| l.exp()).collect()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities()
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.magnetization(k))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `log P(lo ≤ m ≤ hi)`; `-∞` when no lattice point falls in the bin.
    pub fn log_bin_probability(&self, lo: f64, hi: f64) -> f64 {
        let inside: Vec<f64> = (0..=self.n)
            .filter(|&k| (lo..=hi).contains(&self.magnetization(k)))
            .map(|k| self.log_probabilities[k])
            .collect();
        if inside.is_empty() {
            f64::NEG_INFINITY
        } else {
            log_sum_exp(&inside)
        }
    }
}

fn log_binomial_pmf(lnf: &[f64], trials: usize, p: f64) -> Vec<f64> {
    (0..=trials)
        .map(|j| {
            let mut v = lnf[trials] - lnf[j] - lnf[trials - j];
            if j > 0 {
                v += j as f64 * p.ln();
            }
            if j < trials {
                v += (trials - j) as f64 * (1.0 - p).ln();
            }
            v
        })
        .collect()
}

/// Transient law of the spin-flip magnetization started from `m0`.
///
/// The generator moves `m → m ∓ 2/n` at rates `n(1±m)/2`, which is the law
/// of `n` independent spins each flipping at rate 1. A spin that starts up is
/// up at time `t` with probability `(1 + e^{-2t})/2`, one that starts down with
/// `(1 - e^{-2t})/2`, so the forward equation is solved exactly by the
/// convolution of two binomial laws.
pub fn spin_flip_master(n: usize, m0: f64, t_end: f64) -> Result<MagnetizationDistribution> {
    if n > MASTER_STATE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{n} spins exceeds the limit of {MASTER_STATE_LIMIT}"
        )));
    }
    if !(t_end >= 0.0) {
        return Err(invalid("t_end must be nonnegative"));
    }
    let s0 = super::SpinState::from_magnetization(n, m0)?;
    let decay = (-2.0 * t_end).exp();
    let lnf = ln_factorials(n);
    let from_up = log_binomial_pmf(&lnf, s0.up, 0.5 * (1.0 + decay));
    let from_down = log_binomial_pmf(&lnf, n - s0.up, 0.5 * (1.0 - decay));
    let log_probabilities = (0..=n)
        .map(|k| {
            let terms: Vec<f64> = (k.saturating_sub(n - s0.up)..=k.min(s0.up))
                .map(|j| from_up[j] + from_down[k - j])
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    Ok(MagnetizationDistribution {
        n,
        log_probabilities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProbability {
    pub counts: Vec<usize>,
    pub probability: f64,
    pub log_probability: f64,
}

impl TypeProbability {
    pub fn frequencies(&self) -> Vec<f64> {
        let n: usize = self.counts.iter().sum();
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }
}

fn check_probability_vector(mu: &[f64]) -> Result<()> {
    if mu.is_empty() || mu.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(invalid("μ must be a nonnegative vector"));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("μ must sum to 1, got {total}")));
    }
    Ok(())
}

/// `log P(type = counts/n)` for `n = Σ counts` i.i.d. draws from `μ`.
pub fn sanov_log_probability(mu: &[f64], counts: &[usize]) -> Result<f64> {
    check_probability_vector(mu)?;
    if counts.len() != mu.len() {
        return Err(invalid("counts and μ differ in length"));
    }
    let n: usize = counts.iter().sum();
    let lnf = ln_factorials(n);
    let mut acc = lnf[n];
    for (&c, &p) in counts.iter().zip(mu) {
        if c > 0 {
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += c as f64 * p.ln() - lnf[c];
        }
    }
    Ok(acc)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact multinomial probability of every empirical type of `n` draws from `μ`.
pub fn sanov_exact(mu: &[f64], n: usize) -> Result<Vec<TypeProbability>> {
    check_probability_vector(mu)?;
    let k = mu.len();
    if k > SANOV_ALPHABET_LIMIT || n > SANOV_N_LIMIT || n == 0 {
        return Err(Error::TooLarge(format!(
            "alphabet {k} (max {SANOV_ALPHABET_LIMIT}) and n = {n} (1..={SANOV_N_LIMIT})"
        )));
    }
    let count = binomial(n + k - 1, k - 1);
    if count > SANOV_TYPE_LIMIT as f64 {
        return Err(Error::TooLarge(format!(
            "{count} types exceeds the limit of {SANOV_TYPE_LIMIT}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut counts = vec![0usize; k];
    fn rec(
        mu: &[f64],
        counts: &mut Vec<usize>,
        pos: usize,
        left: usize,
        out: &mut Vec<TypeProbability>,
    ) -> Result<()> {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            let lp = sanov_log_probability(mu, counts)?;
            out.push(TypeProbability {
                counts: counts.clone(),
                probability: lp.exp(),
                log_probability: lp,
            });
            return Ok(());
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(mu, counts, pos + 1, left - c, out)?;
        }
        Ok(())
    }
    rec(mu, &mut counts, 0, n, &mut out)?;
    Ok(out)
}

/// Least-squares fit of `-log P(n) ≈ slope · n + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub ns: Vec<usize>,
    pub neg_log_p: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Slopes between consecutive `n` values.
    pub successive_slopes: Vec<f64>,
}

/// Slope from `(n, log P)` pairs.
pub fn ldp_slope_from_log(points: &[(usize, f64)]) -> Result<SlopeEstimate> {
    if points.len() < 3 {
        return Err(invalid("slope estimation needs at least three values of n"));
    }
    if points.iter().any(|&(_, lp)| !lp.is_finite()) {
        return Err(invalid("every event probability must be positive"));
    }
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|p| -p.1).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope estimation needs distinct values of n"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    let successive_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(SlopeEstimate {
        slope,
        intercept,
        ns: pts.iter().map(|p| p.0).collect(),
        neg_log_p: ys,
        residuals,
        successive_slopes,
    })
}

/// Slope from `(n, P)` pairs.
pub fn ldp_slope_estimate(points: &[(usize, f64)]) -> Result<SlopeEstimate> {
    if points.iter().any(|&(_, p)| !(p > 0.0 && p <= 1.0)) {
        return Err(invalid("every event probability must lie in (0, 1]"));
    }
    ldp_slope_from_log(&points.iter().map(|&(n, p)| (n, p.ln())).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub reversible: bool,
    /// Largest relative detailed-balance defect over neighbouring pairs.
    pub max_violation: f64,
}

/// Detailed-balance test for the single-particle chain on `n_states` cells of
/// the unit torus that discretizes `-AΨ'∂_x + σ²∂_xx` with exponentially
/// fitted rates `q_{i,i±1} = (σ²/Δx²) exp(-(A/2σ²)(Ψ_{i±1} - Ψ_i))`, against
/// the candidate `π ∝ e^{-Ψ/kT}`.
pub fn reversibility_check(
    psi: &dyn Fn(f64) -> f64,
    a: f64,
    sigma2: f64,
    n_states: usize,
    candidate_kt: f64,
) -> Result<ReversibilityReport> {
    if n_states < 3 || !(a > 0.0 && sigma2 > 0.0 && candidate_kt > 0.0) {
        return Err(invalid("need at least three states and positive A, σ², kT"));
    }
    let dx = 1.0 / n_states as f64;
    let values: Vec<f64> = (0..n_states).map(|i| psi((i as f64 + 0.5) * dx)).collect();
    let base = sigma2 / (dx * dx);
    let shift = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let pi: Vec<f64> = values
        .iter()
        .map(|v| (-(v - shift) / candidate_kt).exp())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n_states {
        let j = (i + 1) % n_states;
        let half = a / (2.0 * sigma2) * (values[j] - values[i]);
        let forward = pi[i] * base * (-half).exp();
        let backward = pi[j] * base * half.exp();
        worst = worst.max((forward - backward).abs() / (forward + backward));
    }
    Ok(ReversibilityReport {
        reversible: worst <= 1e-10,
        max_violation: worst,
    })
}
