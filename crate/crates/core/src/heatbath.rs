//! A finite system exchanging energy with a finite heat bath: exact
//! conditional laws on a fixed total-energy shell, the coupled and reduced
//! rate functionals, the effective temperature `kθ = -1/Ĩ_B'(Ē)` and the
//! tilted measure it induces.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::relative_entropy_vectors;
use crate::numerics::{bisect_increasing, ln_factorials, log_sum_exp};

/// Half-width of the band within which two real energies count as equal.
pub const ENERGY_TOLERANCE: f64 = 1e-9;
/// Largest number of compositions `microcanonical_enumerate` will list per side.
const COMPOSITION_LIMIT: usize = 10_000_000;

/// States with a reference law `μ` and an energy per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSystem {
    pub states: Vec<String>,
    pub mu: Vec<f64>,
    pub energies: Vec<f64>,
}

impl FiniteSystem {
    pub fn new(mu: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        let states = (0..mu.len()).map(|i| i.to_string()).collect();
        Self::with_states(states, mu, energies)
    }

    pub fn with_states(states: Vec<String>, mu: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || mu.len() != energies.len() || states.len() != mu.len() {
            return Err(invalid(
                "states, μ and energies must be nonempty and of equal length",
            ));
        }
        if mu.iter().any(|&p| !(p >= 0.0 && p.is_finite()))
            || ((mu.iter().sum::<f64>()) - 1.0).abs() > 1e-12
        {
            return Err(invalid("μ must be a probability vector"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(invalid("energies must be finite"));
        }
        Ok(Self {
            states,
            mu,
            energies,
        })
    }

    /// Uniform law on two states with energies `0` and `1`.
    pub fn two_state() -> Self {
        Self::new(vec![0.5, 0.5], vec![0.0, 1.0]).expect("valid two-state system")
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn average_energy(&self, rho: &[f64]) -> f64 {
        rho.iter().zip(&self.energies).map(|(r, e)| r * e).sum()
    }

    fn check(&self, rho: &[f64]) -> Result<()> {
        if rho.len() != self.len() {
            return Err(Error::GridMismatch);
        }
        if rho.iter().any(|&r| !(r >= -1e-12)) || (rho.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("ρ must be a probability vector"));
        }
        Ok(())
    }

    fn energy_range(&self) -> (f64, f64) {
        let support = self
            .energies
            .iter()
            .zip(&self.mu)
            .filter(|(_, &p)| p > 0.0)
            .map(|(e, _)| *e);
        support.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e), hi.max(e))
        })
    }
}

/// `μ̃_x ∝ μ_x e^{-e(x)/kT}`.
pub fn tilted_measure(sys: &FiniteSystem, kt: f64) -> Result<Vec<f64>> {
    if !(kt > 0.0) {
        return Err(invalid("kT must be positive"));
    }
    Ok(tilt(sys, -1.0 / kt))
}

/// `ρ_x ∝ μ_x e^{β e(x)}`, normalized in log space.
fn tilt(sys: &FiniteSystem, beta: f64) -> Vec<f64> {
    let logs: Vec<f64> = sys
        .mu
        .iter()
        .zip(&sys.energies)
        .map(|(&p, &e)| {
            if p > 0.0 {
                p.ln() + beta * e
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let z = log_sum_exp(&logs);
    logs.iter().map(|l| (l - z).exp()).collect()
}

/// Heat bath with the Cramér rate function of its single-site energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathModel {
    pub system: FiniteSystem,
}

/// The sign of `Ĩ_B'(Ē)` decides whether `kθ = -1/Ĩ_B'(Ē)` is a temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTemperature {
    pub derivative: f64,
    pub k_theta: f64,
    pub positive: bool,
}

impl BathModel {
    pub fn new(system: FiniteSystem) -> Self {
        Self { system }
    }

    pub fn mean_energy(&self) -> f64 {
        self.system.average_energy(&self.system.mu)
    }

    /// `Λ(λ) = log Σ ν e^{λ e_B}`.
    pub fn log_mgf(&self, lambda: f64) -> f64 {
        let logs: Vec<f64> = self
            .system
            .mu
            .iter()
            .zip(&self.system.energies)
            .map(|(&p, &e)| {
                if p > 0.0 {
                    p.ln() + lambda * e
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        log_sum_exp(&logs)
    }

    fn tilted_mean(&self, lambda: f64) -> f64 {
        self.system.average_energy(&tilt(&self.system, lambda))
    }

    /// `λ*(E)` solving `Λ'(λ) = E`; infinite at the edges of the energy range.
    fn dual(&self, energy: f64) -> Option<f64> {
        let (lo, hi) = self.system.energy_range();
        if energy < lo - ENERGY_TOLERANCE || energy > hi + ENERGY_TOLERANCE {
            return None;
        }
        if energy <= lo + 1e-13 * (1.0 + lo.abs()) {
            return Some(f64::NEG_INFINITY);
        }
        if energy >= hi - 1e-13 * (1.0 + hi.abs()) {
            return Some(f64::INFINITY);
        }
        let mut bound = 1.0;
        while self.tilted_mean(bound) < energy || self.tilted_mean(-bound) > energy {
            bound *= 2.0;
            if bound > 1e6 {
                return Some(if energy > self.mean_energy() {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                });
            }
        }
        Some(bisect_increasing(
            |l| self.tilted_mean(l) - energy,
            -bound,
            bound,
            200,
        ))
    }

    /// `Ĩ_B(E) = sup_λ (λE - Λ(λ))`; `+∞` outside the energy range.
    pub fn rate(&self, energy: f64) -> f64 {
        match self.dual(energy) {
            None => f64::INFINITY,
            Some(l) if l.is_infinite() => {
                // mass of the extreme level
                let (lo, hi) = self.system.energy_range();
                let edge = if l < 0.0 { lo } else { hi };
                let mass: f64 = self
                    .system
                    .mu
                    .iter()
                    .zip(&self.system.energies)
                    .filter(|(_, &e)| (e - edge).abs() <= ENERGY_TOLERANCE)
                    .map(|(p, _)| p)
                    .sum();
                -mass.ln()
            }
            Some(l) => l * energy - self.log_mgf(l),
        }
    }

    /// `Ĩ_B'(E) = λ*(E)`.
    pub fn rate_derivative(&self, energy: f64) -> f64 {
        self.dual(energy).unwrap_or(f64::NAN)
    }

    pub fn effective_temperature(&self, ebar: f64) -> EffectiveTemperature {
        let derivative = self.rate_derivative(ebar);
        EffectiveTemperature {
            derivative,
            k_theta: -1.0 / derivative,
            positive: derivative < 0.0,
        }
    }
}

fn check_coupling(n_ratio: f64) -> Result<()> {
    if !(n_ratio > 0.0 && n_ratio.is_finite()) {
        return Err(invalid("N must be positive"));
    }
    Ok(())
}

/// `H(ρ|μ) + N Ĩ_B(Ē - E(ρ)/N)` without the normalizing constant.
fn raw_reduced(
    rho: &[f64],
    sys: &FiniteSystem,
    bath: &BathModel,
    n_ratio: f64,
    ebar: f64,
) -> Result<f64> {
    let h = relative_entropy_vectors(rho, &sys.mu)?;
    Ok(h + n_ratio * bath.rate(ebar - sys.average_energy(rho) / n_ratio))
}

/// Normalizing constant `-inf_ρ [H(ρ|μ) + N Ĩ_B(Ē - E(ρ)/N)]`. The minimizer
/// is the tilt `ρ ∝ μ e^{βe}` with `β = Ĩ_B'(Ē - E(ρ)/N)`; the right side
/// decreases in `β`, so the fixed point is found by bisection.
fn normalizer(
    sys: &FiniteSystem,
    bath: &BathModel,
    n_ratio: f64,
    ebar: f64,
) -> Result<(f64, Vec<f64>)> {
    let residual = |beta: f64| {
        let rho = tilt(sys, beta);
        let d = bath.rate_derivative(ebar - sys.average_energy(&rho) / n_ratio);
        if d.is_nan() {
            // outside the bath's range: push β towards the admissible side
            let (lo, _) = bath.system.energy_range();
            return if ebar - sys.average_energy(&rho) / n_ratio < lo {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        beta - d
    };
    let mut bound = 1.0;
    while !(residual(bound) > 0.0 && residual(-bound) < 0.0) {
        bound *= 2.0;
        if bound > 1e6 {
            return Err(Error::InfeasibleEnergy);
        }
    }
    let beta = bisect_increasing(residual, -bound, bound, 200);
    let rho = tilt(sys, beta);
    let value = raw_reduced(&rho, sys, bath, n_ratio, ebar)?;
    if !value.is_finite() {
        return Err(Error::InfeasibleEnergy);
    }
    Ok((-value, rho))
}

/// `J(ρ) = H(ρ|μ) + N Ĩ_B(Ē - E(ρ)/N) + const` with `inf J = 0`; `+∞` when the
/// bath energy left over is out of range.
pub fn reduced_rate(
    rho: &[f64],
    sys: &FiniteSystem,
    bath: &BathModel,
    n_ratio: f64,
    ebar: f64,
) -> Result<f64> {
    sys.check(rho)?;
    check_coupling(n_ratio)?;
    let (c, _) = normalizer(sys, bath, n_ratio, ebar)?;
    let raw = raw_reduced(rho, sys, bath, n_ratio, ebar)?;
    Ok(if raw.is_finite() {
        raw + c
    } else {
        f64::INFINITY
    })
}

/// Minimizer of [`reduced_rate`].
pub fn reduced_minimizer(
    sys: &FiniteSystem,
    bath: &BathModel,
    n_ratio: f64,
    ebar: f64,
) -> Result<Vec<f64>> {
    check_coupling(n_ratio)?;
    Ok(normalizer(sys, bath, n_ratio, ebar)?.1)
}

/// `J(ρ, ζ) = H(ρ|μ) + N Ĩ_B(E_B(ζ)) + const` on `E(ρ) + N E_B(ζ) = N Ē`
/// (within `1e-9`), `+∞` off it.
pub fn coupled_rate(
    rho: &[f64],
    zeta: &[f64],
    sys: &FiniteSystem,
    bath: &BathModel,
    n_ratio: f64,
    ebar: f64,
) -> Result<f64> {
    sys.check(rho)?;
    bath.system.check(zeta)?;
    check_coupling(n_ratio)?;
    let eb = bath.system.average_energy(zeta);
    if (sys.average_energy(rho) + n_ratio * eb - n_ratio * ebar).abs() > ENERGY_TOLERANCE {
        return Ok(f64::INFINITY);
    }
    let (c, _) = normalizer(sys, bath, n_ratio, ebar)?;
    let raw = relative_entropy_vectors(rho, &sys.mu)? + n_ratio * bath.rate(eb);
    Ok(if raw.is_finite() {
        raw + c
    } else {
        f64::INFINITY
    })
}

/// Every composition (occupation counts) of `n` draws over `k` states.
fn compositions(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; k];
    fn rec(pos: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for c in (0..=left).rev() {
            current[pos] = c;
            rec(pos + 1, left - c, current, out);
        }
    }
    rec(0, n, &mut current, &mut out);
    out
}

fn composition_count(k: usize, n: usize) -> f64 {
    (0..k - 1).fold(1.0, |acc, i| acc * (n + k - 1 - i) as f64 / (i + 1) as f64)
}

/// `(total energy, log multinomial weight)` of a composition.
fn weigh(sys: &FiniteSystem, counts: &[usize], lnf: &[f64]) -> (f64, f64) {
    let n: usize = counts.iter().sum();
    let mut logw = lnf[n];
    let mut energy = 0.0;
    for ((&c, &p), &e) in counts.iter().zip(&sys.mu).zip(&sys.energies) {
        if c > 0 {
            logw += if p > 0.0 {
                c as f64 * p.ln()
            } else {
                f64::NEG_INFINITY
            };
            logw -= lnf[c];
            energy += c as f64 * e;
        }
    }
    (energy, logw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionProbability {
    pub counts: Vec<usize>,
    pub probability: f64,
    pub log_probability: f64,
}

impl CompositionProbability {
    pub fn frequencies(&self) -> Vec<f64> {
        let n: usize = self.counts.iter().sum();
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }
}

/// Exact law of the system's composition given `Σ e(X_i) + Σ e_B(Y_j) =
/// total_energy` (within `±1e-9`), for `n` system and `m` bath particles.
/// Bath compositions are grouped into energy levels once, and each system
/// composition is weighted by the bath mass on its complementary level.
pub fn microcanonical_enumerate(
    sys: &FiniteSystem,
    bath: &BathModel,
    n: usize,
    m: usize,
    total_energy: f64,
) -> Result<Vec<CompositionProbability>> {
    if n == 0 {
        return Err(invalid("the system needs at least one particle"));
    }
    let (kx, ky) = (sys.len(), bath.system.len());
    if composition_count(kx, n) > COMPOSITION_LIMIT as f64
        || composition_count(ky, m) > COMPOSITION_LIMIT as f64
    {
        return Err(Error::TooLarge(format!(
            "compositions of n = {n} or m = {m} exceed {COMPOSITION_LIMIT}"
        )));
    }
    let lnf = ln_factorials(n.max(m));
    let mut levels: Vec<(f64, f64)> = compositions(ky, m)
        .iter()
        .map(|c| weigh(&bath.system, c, &lnf))
        .filter(|(_, w)| w.is_finite())
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let energies: Vec<f64> = levels.iter().map(|l| l.0).collect();
    let bath_mass = |target: f64| -> f64 {
        let lo = energies.partition_point(|&e| e < target - ENERGY_TOLERANCE);
        let hi = energies.partition_point(|&e| e <= target + ENERGY_TOLERANCE);
        if lo == hi {
            f64::NEG_INFINITY
        } else {
            log_sum_exp(&levels[lo..hi].iter().map(|l| l.1).collect::<Vec<_>>())
        }
    };
    let joint: Vec<(Vec<usize>, f64)> = compositions(kx, n)
        .into_iter()
        .map(|c| {
            let (e, w) = weigh(sys, &c, &lnf);
            let b = if w.is_finite() {
                bath_mass(total_energy - e)
            } else {
                f64::NEG_INFINITY
            };
            (c, w + b)
        })
        .collect();
    let logs: Vec<f64> = joint.iter().map(|j| j.1).collect();
    if logs.iter().all(|l| l.is_infinite()) {
        return Err(Error::InfeasibleEnergy);
    }
    let z = log_sum_exp(&logs);
    Ok(joint
        .into_iter()
        .filter(|(_, l)| l.is_finite())
        .map(|(counts, l)| CompositionProbability {
            counts,
            probability: (l - z).exp(),
            log_probability: l - z,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub composition: Vec<f64>,
    pub prob: f64,
    /// `-(1/n) log P(ρ) - J(ρ)`.
    pub rate_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatbathReport {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_ratio: usize,
    #[serde(rename = "Ebar")]
    pub ebar: f64,
    #[serde(rename = "kT_effective")]
    pub kt_effective: f64,
    pub table: Vec<LadderRow>,
}

/// Exact finite-size laws at `m = N n`, total energy `n N Ē`, compared with the
/// reduced rate functional on every reachable composition.
pub fn heatbath_report(
    sys: &FiniteSystem,
    bath: &BathModel,
    n: usize,
    n_ratio: usize,
    ebar: f64,
) -> Result<HeatbathReport> {
    let m = n * n_ratio;
    let laws = microcanonical_enumerate(sys, bath, n, m, (n * n_ratio) as f64 * ebar)?;
    let table = laws
        .iter()
        .map(|c| {
            let rho = c.frequencies();
            let j = reduced_rate(&rho, sys, bath, n_ratio as f64, ebar)?;
            Ok(LadderRow {
                composition: rho,
                prob: c.probability,
                rate_gap: -c.log_probability / n as f64 - j,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatbathReport {
        n,
        m,
        n_ratio,
        ebar,
        kt_effective: bath.effective_temperature(ebar).k_theta,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilted_examples() {
        let flat = FiniteSystem::new(vec![0.2, 0.8], vec![3.0, 3.0]).unwrap();
        let t = tilted_measure(&flat, 0.7).unwrap();
        assert!((t[0] - 0.2).abs() < 1e-15);
        let t = tilted_measure(&FiniteSystem::two_state(), 1.0).unwrap();
        assert!((t[0] - 0.731059).abs() < 1e-6 && (t[1] - 0.268941).abs() < 1e-6);
        let hot = tilted_measure(&FiniteSystem::two_state(), 1e6).unwrap();
        assert!((hot[0] - 0.5).abs() < 1e-6);
        assert!(tilted_measure(&FiniteSystem::two_state(), 0.0).is_err());
    }

    #[test]
    fn cramer_rate_of_bernoulli_bath() {
        let bath = BathModel::new(FiniteSystem::two_state());
        for e in [0.1f64, 0.3, 0.5, 0.9] {
            let exact = e * (2.0 * e).ln() + (1.0 - e) * (2.0 * (1.0 - e)).ln();
            assert!((bath.rate(e) - exact).abs() < 1e-12, "{e}");
        }
        assert!((bath.rate(0.0) - 2f64.ln()).abs() < 1e-12);
        assert!(bath.rate(1.5).is_infinite());
        let t = bath.effective_temperature(0.25);
        assert!(t.positive && (t.k_theta - 1.0 / 3f64.ln()).abs() < 1e-9);
        assert!(!bath.effective_temperature(0.75).positive);
    }

    #[test]
    fn enumeration_examples() {
        let s = FiniteSystem::two_state();
        let b = BathModel::new(FiniteSystem::two_state());
        let laws = microcanonical_enumerate(&s, &b, 2, 2, 2.0).unwrap();
        let half = laws.iter().find(|c| c.counts == vec![1, 1]).unwrap();
        assert!((half.probability - 4.0 / 6.0).abs() < 1e-15);
        let ground = microcanonical_enumerate(&s, &b, 3, 2, 0.0).unwrap();
        assert_eq!(ground.len(), 1);
        assert_eq!(ground[0].counts, vec![3, 0]);
        assert!(matches!(
            microcanonical_enumerate(&s, &b, 2, 2, 7.0),
            Err(Error::InfeasibleEnergy)
        ));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let s = FiniteSystem::new(vec![0.5, 0.3, 0.2], vec![0.0, 1.0, 2.0]).unwrap();
        let b = BathModel::new(FiniteSystem::new(vec![0.6, 0.4], vec![0.0, 1.0]).unwrap());
        for (n, m, total) in [(2usize, 3usize, 2.0), (3, 4, 3.0), (4, 4, 5.0)] {
            let mut table = std::collections::BTreeMap::<Vec<usize>, f64>::new();
            let mut z = 0.0;
            for xs in 0..3usize.pow(n as u32) {
                for ys in 0..2usize.pow(m as u32) {
                    let xi: Vec<usize> = (0..n).map(|i| xs / 3usize.pow(i as u32) % 3).collect();
                    let yi: Vec<usize> = (0..m).map(|j| ys >> j & 1).collect();
                    let e: f64 = xi.iter().map(|&x| s.energies[x]).sum::<f64>()
                        + yi.iter().map(|&y| b.system.energies[y]).sum::<f64>();
                    if (e - total).abs() > 1e-9 {
                        continue;
                    }
                    let w: f64 = xi.iter().map(|&x| s.mu[x]).product::<f64>()
                        * yi.iter().map(|&y| b.system.mu[y]).product::<f64>();
                    let mut counts = vec![0; 3];
                    xi.iter().for_each(|&x| counts[x] += 1);
                    *table.entry(counts).or_default() += w;
                    z += w;
                }
            }
            let laws = microcanonical_enumerate(&s, &b, n, m, total).unwrap();
            assert_eq!(laws.len(), table.len());
            for c in laws {
                assert!((c.probability - table[&c.counts] / z).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reduced_rate_normalization_and_minimizer() {
        let s = FiniteSystem::two_state();
        let b = BathModel::new(FiniteSystem::two_state());
        let min = reduced_minimizer(&s, &b, 4.0, 0.25).unwrap();
        assert!(reduced_rate(&min, &s, &b, 4.0, 0.25).unwrap().abs() < 1e-12);
        for p in [0.1, 0.4, 0.6, 0.9] {
            assert!(reduced_rate(&[p, 1.0 - p], &s, &b, 4.0, 0.25).unwrap() > 0.0);
        }
        let kt = b.effective_temperature(0.25).k_theta;
        let tilted = tilted_measure(&s, kt).unwrap();
        let big = reduced_minimizer(&s, &b, 1e6, 0.25).unwrap();
        assert!((big[0] - tilted[0]).abs() < 1e-5);
    }

    #[test]
    fn coupled_rate_constraint() {
        let s = FiniteSystem::two_state();
        let b = BathModel::new(FiniteSystem::two_state());
        let (n, ebar) = (4.0, 0.25);
        assert!(coupled_rate(&[0.5, 0.5], &[0.5, 0.5], &s, &b, n, ebar)
            .unwrap()
            .is_infinite());
        // ρ = μ: bath energy (N Ē - E(μ)) / N
        let eb = (n * ebar - 0.5) / n;
        let v = coupled_rate(&[0.5, 0.5], &[1.0 - eb, eb], &s, &b, n, ebar).unwrap();
        let plug = reduced_rate(&[0.5, 0.5], &s, &b, n, ebar).unwrap();
        assert!(v >= 0.0 && (v - plug).abs() < 1e-12);
        let min = reduced_minimizer(&s, &b, n, ebar).unwrap();
        let eb = (n * ebar - min[1]) / n;
        assert!(
            coupled_rate(&min, &[1.0 - eb, eb], &s, &b, n, ebar)
                .unwrap()
                .abs()
                < 1e-12
        );
    }
}
