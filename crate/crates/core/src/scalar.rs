//! Scalar generalized gradient flows: dissipation pairs and their Legendre
//! conjugates, the birth-death and spin-flip Lagrangians, the induced ODE
//! flows, path actions and fixed-endpoint action minimization.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{compensated_sum, golden_section_min, solve_tridiagonal, CompensatedSum};

/// Largest `|ξ|` explored when a conjugation interval is unbounded.
const CONJUGATE_SEARCH_LIMIT: f64 = 1e6;

/// Scalar trajectory on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ScalarPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(invalid(
                "path needs one time per value and at least one value",
            ));
        }
        if times.len() > 1 {
            let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            if !(dt > 0.0)
                || times
                    .windows(2)
                    .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0))
            {
                return Err(invalid(
                    "path times must be uniformly spaced and increasing",
                ));
            }
        }
        Ok(Self { times, values })
    }

    pub fn from_values(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            times: self.times.clone(),
            values,
        }
    }

    /// `(midpoint state, velocity)` on every interval.
    pub fn midpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let dt = self.dt();
        self.values
            .windows(2)
            .map(move |w| (0.5 * (w[0] + w[1]), (w[1] - w[0]) / dt))
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth scalar energy with its derivative.
#[derive(Clone)]
pub struct ScalarEnergy {
    e: ScalarFn,
    de: ScalarFn,
}

impl fmt::Debug for ScalarEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarEnergy")
    }
}

impl ScalarEnergy {
    pub fn new(
        e: impl Fn(f64) -> f64 + Send + Sync + 'static,
        de: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            e: Arc::new(e),
            de: Arc::new(de),
        }
    }

    /// `E(u) = u²/2`.
    pub fn quadratic() -> Self {
        Self::new(|u| 0.5 * u * u, |u| u)
    }

    /// `E(u) = c u`.
    pub fn linear(c: f64) -> Self {
        Self::new(move |u| c * u, move |_| c)
    }

    /// `E(m) = ¼(1+m)log(1+m) + ¼(1-m)log(1-m)`, with `E'(m) = ½ artanh m`.
    pub fn spin_flip() -> Self {
        let xlx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
        Self::new(
            move |m| 0.25 * (xlx(1.0 + m) + xlx(1.0 - m)),
            |m| 0.5 * m.atanh(),
        )
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.e)(u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        (self.de)(u)
    }

    /// Largest gap between `E'` and a central difference of `E` at step `step`.
    pub fn derivative_mismatch(&self, points: &[f64], step: f64) -> f64 {
        points
            .iter()
            .map(|&u| {
                ((self.value(u + step) - self.value(u - step)) / (2.0 * step) - self.derivative(u))
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Legendre pair `(ψ, ψ*)`; the spin-flip pair depends on the magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DissipationPair {
    Quadratic,
    BirthDeath { alpha: f64 },
    SpinFlip,
}

impl DissipationPair {
    pub fn birth_death(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self::BirthDeath { alpha })
    }

    fn spin_scale(state: f64) -> Result<f64> {
        if state.abs() >= 1.0 {
            return Err(invalid(format!(
                "magnetization {state} must satisfy |m| < 1"
            )));
        }
        Ok((1.0 - state * state).sqrt())
    }

    /// `ψ(ξ)` at `state`.
    pub fn psi(&self, state: f64, xi: f64) -> Result<f64> {
        Ok(match *self {
            Self::Quadratic => 0.5 * xi * xi,
            Self::BirthDeath { alpha } => 2.0 * alpha * xi.cosh(),
            Self::SpinFlip => Self::spin_scale(state)? * (2.0 * xi).cosh(),
        })
    }

    /// Closed-form conjugate `ψ*(v)` at `state`.
    pub fn psi_star(&self, state: f64, v: f64) -> Result<f64> {
        Ok(match *self {
            Self::Quadratic => 0.5 * v * v,
            Self::BirthDeath { alpha } => {
                v * (v / (2.0 * alpha)).asinh() - (v * v + 4.0 * alpha * alpha).sqrt()
            }
            Self::SpinFlip => {
                let s = Self::spin_scale(state)?;
                0.5 * v * (v / (2.0 * s)).asinh() - 0.5 * (v * v + 4.0 * s * s).sqrt()
            }
        })
    }

    /// `ψ'(ξ)`: the velocity selected by the force `ξ`.
    pub fn velocity(&self, state: f64, xi: f64) -> Result<f64> {
        Ok(match *self {
            Self::Quadratic => xi,
            Self::BirthDeath { alpha } => 2.0 * alpha * xi.sinh(),
            Self::SpinFlip => 2.0 * Self::spin_scale(state)? * (2.0 * xi).sinh(),
        })
    }

    /// `(ψ*)'(v)`: the force conjugate to velocity `v`.
    pub fn force(&self, state: f64, v: f64) -> Result<f64> {
        Ok(match *self {
            Self::Quadratic => v,
            Self::BirthDeath { alpha } => (v / (2.0 * alpha)).asinh(),
            Self::SpinFlip => 0.5 * (v / (2.0 * Self::spin_scale(state)?)).asinh(),
        })
    }

    /// Compares the closed-form `ψ*` with the numeric conjugate of `ψ` at
    /// `(state, v)` samples; returns the largest mismatch or `NotLegendrePair`.
    pub fn check_legendre(&self, samples: &[(f64, f64)], tol: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &(state, v) in samples {
            let closed = self.psi_star(state, v)?;
            let guess = self.force(state, v)?;
            let numeric = conjugate(
                |xi| self.psi(state, xi).unwrap_or(f64::INFINITY),
                v,
                (guess - 5.0, guess + 5.0),
            )?;
            worst = worst.max((closed - numeric).abs());
        }
        if worst > tol {
            return Err(Error::NotLegendrePair(worst));
        }
        Ok(worst)
    }
}

/// `sup_ξ (v ξ - f(ξ))` over `interval` by golden-section search on the
/// concave objective. Infinite bounds are explored outwards up to `|ξ| = 10⁶`.
pub fn conjugate<F: Fn(f64) -> f64>(f: F, v: f64, interval: (f64, f64)) -> Result<f64> {
    let g = |xi: f64| v * xi - f(xi);
    let (mut lo, mut hi) = interval;
    if !(lo < hi) {
        return Err(invalid("empty conjugation interval"));
    }
    if hi.is_infinite() {
        let start = if lo.is_finite() { lo.max(0.0) } else { 0.0 };
        let mut step = 1.0;
        while g(start + 2.0 * step) > g(start + step) {
            step *= 2.0;
            if step > CONJUGATE_SEARCH_LIMIT {
                return Err(Error::ConjugateInfinite);
            }
        }
        hi = start + 2.0 * step;
    }
    if lo.is_infinite() {
        let start = hi.min(0.0);
        let mut step = 1.0;
        while g(start - 2.0 * step) > g(start - step) {
            step *= 2.0;
            if step > CONJUGATE_SEARCH_LIMIT {
                return Err(Error::ConjugateInfinite);
            }
        }
        lo = start - 2.0 * step;
    }
    let (_, best) = golden_section_min(|xi| -g(xi), lo, hi, 1e-12 * (hi - lo).max(1.0), 400);
    let value = -best;
    if !value.is_finite() {
        return Err(Error::ConjugateInfinite);
    }
    Ok(value)
}

/// Birth-death Lagrangian
/// `L(u, v) = v asinh(v/2α) + v E'(u) - √(v² + 4α²) + α e^{-E'(u)} + α e^{E'(u)}`.
pub fn bd_lagrangian(u: f64, v: f64, de: &dyn Fn(f64) -> f64, alpha: f64) -> f64 {
    let d = de(u);
    v * (v / (2.0 * alpha)).asinh() + v * d - (v * v + 4.0 * alpha * alpha).sqrt()
        + 2.0 * alpha * d.cosh()
}

/// Spin-flip Lagrangian
/// `L(m, q) = (q/2)[asinh(q / 2√(1-m²)) + artanh m] - ½√(q² + 4(1-m²)) + 1`.
pub fn sf_lagrangian(m: f64, q: f64) -> Result<f64> {
    let s = DissipationPair::spin_scale(m)?;
    Ok(0.5 * q * ((q / (2.0 * s)).asinh() + m.atanh()) - 0.5 * (q * q + 4.0 * s * s).sqrt() + 1.0)
}

/// `ψ*(v) + ψ(-E'(u)) + v E'(u)` for a pair and energy.
pub fn pair_lagrangian(
    pair: DissipationPair,
    energy: &ScalarEnergy,
    u: f64,
    v: f64,
) -> Result<f64> {
    let d = energy.derivative(u);
    Ok(pair.psi_star(u, v)? + pair.psi(u, -d)? + v * d)
}

/// RK4 integration of `u̇ = ψ'(-E'(u))`.
pub fn generalized_flow_solve(
    energy: &ScalarEnergy,
    pair: DissipationPair,
    u0: f64,
    t_end: f64,
    dt: f64,
) -> Result<ScalarPath> {
    if !(dt > 0.0 && t_end > 0.0 && dt <= t_end * (1.0 + 1e-12)) {
        return Err(invalid("need 0 < dt <= t_end"));
    }
    let steps = (t_end / dt).round() as usize;
    if ((steps as f64) * dt - t_end).abs() > 1e-9 * t_end {
        return Err(invalid("t_end must be an integer multiple of dt"));
    }
    let rhs = |u: f64| pair.velocity(u, -energy.derivative(u));
    let mut values = Vec::with_capacity(steps + 1);
    let mut u = u0;
    values.push(u);
    for _ in 0..steps {
        let k1 = rhs(u)?;
        if k1.abs() * dt > 0.1 {
            return Err(Error::ReduceDt(format!(
                "|u'| dt = {:e} exceeds 0.1",
                k1.abs() * dt
            )));
        }
        let k2 = rhs(u + 0.5 * dt * k1)?;
        let k3 = rhs(u + 0.5 * dt * k2)?;
        let k4 = rhs(u + dt * k3)?;
        u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        values.push(u);
    }
    ScalarPath::from_values(0.0, dt, values)
}

/// Midpoint rule `Σ L((u_k + u_{k+1})/2, (u_{k+1} - u_k)/Δt) Δt`.
pub fn path_action<L: Fn(f64, f64) -> Result<f64>>(
    path: &ScalarPath,
    lagrangian: L,
) -> Result<f64> {
    let dt = path.dt();
    let terms = path
        .midpoints()
        .map(|(u, v)| lagrangian(u, v).map(|l| l * dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// Partial derivatives `(L_u, L_v, L_uu, L_uv, L_vv)` by central differences.
fn lagrangian_derivatives<L: Fn(f64, f64) -> Result<f64>>(
    l: &L,
    u: f64,
    v: f64,
) -> Result<[f64; 5]> {
    let hu = 1e-5 * (1.0 + u.abs());
    let hv = 1e-5 * (1.0 + v.abs());
    let f = |a: f64, b: f64| l(a, b);
    let l0 = f(u, v)?;
    let (lup, lum) = (f(u + hu, v)?, f(u - hu, v)?);
    let (lvp, lvm) = (f(u, v + hv)?, f(u, v - hv)?);
    let lpp = f(u + hu, v + hv)?;
    let lpm = f(u + hu, v - hv)?;
    let lmp = f(u - hu, v + hv)?;
    let lmm = f(u - hu, v - hv)?;
    Ok([
        (lup - lum) / (2.0 * hu),
        (lvp - lvm) / (2.0 * hv),
        (lup - 2.0 * l0 + lum) / (hu * hu),
        (lpp - lpm - lmp + lmm) / (4.0 * hu * hv),
        (lvp - 2.0 * l0 + lvm) / (hv * hv),
    ])
}

/// Minimizes the midpoint-rule action over paths with fixed endpoints on
/// `K` intervals of `[0, T]`, by damped Newton from the straight line.
pub fn optimal_action<L: Fn(f64, f64) -> Result<f64>>(
    lagrangian: L,
    u_start: f64,
    u_end: f64,
    t_total: f64,
    intervals: usize,
) -> Result<(f64, ScalarPath)> {
    if intervals < 8 {
        return Err(invalid("optimal_action needs at least 8 intervals"));
    }
    if !(t_total > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    let k = intervals;
    let dt = t_total / k as f64;
    let mut u: Vec<f64> = (0..=k)
        .map(|i| u_start + (u_end - u_start) * i as f64 / k as f64)
        .collect();
    let action = |u: &[f64]| -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for w in u.windows(2) {
            acc.add(lagrangian(0.5 * (w[0] + w[1]), (w[1] - w[0]) / dt)? * dt);
        }
        Ok(acc.value())
    };
    let mut value = action(&u)?;
    let n = k - 1;
    let mut damping = 0.0;
    for _ in 0..500 {
        let d = (0..k)
            .map(|i| {
                lagrangian_derivatives(&lagrangian, 0.5 * (u[i] + u[i + 1]), (u[i + 1] - u[i]) / dt)
            })
            .collect::<Result<Vec<_>>>()?;
        // node j (1..k-1) enters interval j-1 with weights (½, 1/Δt) and interval j with (½, -1/Δt)
        let quad = |dv: &[f64; 5], a: (f64, f64), b: (f64, f64)| {
            dv[2] * a.0 * b.0 + dv[3] * (a.0 * b.1 + a.1 * b.0) + dv[4] * a.1 * b.1
        };
        let right = (0.5, 1.0 / dt);
        let left = (0.5, -1.0 / dt);
        let mut grad = vec![0.0; n];
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for j in 1..k {
            let (a, b) = (&d[j - 1], &d[j]);
            grad[j - 1] = dt * (0.5 * a[0] + a[1] / dt + 0.5 * b[0] - b[1] / dt);
            diag[j - 1] = dt * (quad(a, right, right) + quad(b, left, left));
            if j > 1 {
                sub[j - 1] = dt * quad(a, right, left);
            }
            if j + 1 < k {
                sup[j - 1] = dt * quad(b, left, right);
            }
        }
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= 1e-11 {
            return Ok((value, ScalarPath::from_values(0.0, dt, u)?));
        }
        let mut accepted = false;
        for _ in 0..40 {
            let shifted: Vec<f64> = diag
                .iter()
                .map(|v| v + damping * v.abs().max(1e-12))
                .collect();
            let step = solve_tridiagonal(&sub, &shifted, &sup, &grad);
            let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            if slope <= 0.0 || !slope.is_finite() {
                damping = (damping * 10.0).max(1e-3);
                continue;
            }
            // Newton decrement below the noise of the difference derivatives
            if slope <= 1e-16 * (1.0 + value.abs()) {
                return Ok((value, ScalarPath::from_values(0.0, dt, u)?));
            }
            let mut t = 1.0;
            for _ in 0..30 {
                let mut trial = u.clone();
                for j in 1..k {
                    trial[j] -= t * step[j - 1];
                }
                if let Ok(v) = action(&trial) {
                    if v.is_finite() && v <= value - 1e-4 * t * slope {
                        u = trial;
                        value = v;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                damping *= 0.1;
                if damping < 1e-12 {
                    damping = 0.0;
                }
                break;
            }
            damping = (damping * 10.0).max(1e-3);
        }
        if !accepted {
            if gnorm <= 1e-7 {
                return Ok((value, ScalarPath::from_values(0.0, dt, u)?));
            }
            return Err(Error::NoConvergence {
                iterations: 500,
                best: value,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: 500,
        best: value,
    })
}

/// Smallest optimal action over terminal values in `[lo, hi]` (the cost of a
/// terminal-bin event), with the minimizing terminal value.
pub fn bin_action<L: Fn(f64, f64) -> Result<f64> + Copy>(
    lagrangian: L,
    u_start: f64,
    lo: f64,
    hi: f64,
    t_total: f64,
    intervals: usize,
) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(invalid("empty terminal bin"));
    }
    let mut failure = None;
    let (end, value) = golden_section_min(
        |e| match optimal_action(lagrangian, u_start, e, t_total, intervals) {
            Ok((v, _)) => v,
            Err(err) => {
                failure.get_or_insert(err);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-9 * (hi - lo),
        200,
    );
    match failure {
        Some(err) if !value.is_finite() => Err(err),
        _ => Ok((value, end)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_examples() {
        assert!(
            (conjugate(|x| 0.5 * x * x, 3.0, (f64::NEG_INFINITY, f64::INFINITY)).unwrap() - 4.5)
                .abs()
                < 1e-10
        );
        let bd = |x: f64| x.exp() + (-x).exp();
        assert!(
            (conjugate(bd, 0.0, (f64::NEG_INFINITY, f64::INFINITY)).unwrap() + 2.0).abs() < 1e-10
        );
        assert!(matches!(
            conjugate(|x| x, 2.0, (0.0, f64::INFINITY)),
            Err(Error::ConjugateInfinite)
        ));
        assert!((conjugate(|x| x, 2.0, (0.0, 3.0)).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn birth_death_closed_form_matches_numeric_conjugate() {
        for alpha in [0.5, 1.0, 2.0] {
            let pair = DissipationPair::birth_death(alpha).unwrap();
            let samples: Vec<(f64, f64)> =
                (0..=100).map(|i| (0.0, -5.0 + 0.1 * i as f64)).collect();
            assert!(pair.check_legendre(&samples, 1e-8).unwrap() < 1e-8);
        }
    }

    #[test]
    fn wrong_pair_is_rejected() {
        // closed form for α = 1 tested against ψ with α = 2
        let fake = |v: f64| v * (v / 2.0).asinh() - (v * v + 4.0).sqrt();
        let pair = DissipationPair::birth_death(2.0).unwrap();
        let numeric = conjugate(|x| pair.psi(0.0, x).unwrap(), 1.0, (-10.0, 10.0)).unwrap();
        assert!((numeric - fake(1.0)).abs() > 1e-3);
        assert!(DissipationPair::birth_death(0.0).is_err());
    }

    #[test]
    fn lagrangian_examples() {
        let zero = |_: f64| 0.0;
        assert!(bd_lagrangian(0.3, 0.0, &zero, 1.0).abs() < 1e-15);
        let ln2 = |_: f64| std::f64::consts::LN_2;
        assert!(bd_lagrangian(0.3, -1.5, &ln2, 1.0).abs() < 1e-14);
        assert!(sf_lagrangian(0.0, 0.0).unwrap().abs() < 1e-15);
        assert!(sf_lagrangian(0.5, -1.0).unwrap().abs() < 1e-15);
        assert!((sf_lagrangian(0.5, 0.0).unwrap() - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!(sf_lagrangian(1.0, 0.0).is_err());
    }

    #[test]
    fn lagrangians_split_into_pair_terms() {
        let energy = ScalarEnergy::new(|u| u.powi(3) / 3.0 - u, |u| u * u - 1.0);
        let de = |u: f64| u * u - 1.0;
        let pair = DissipationPair::birth_death(1.5).unwrap();
        for (u, v) in [(0.1, 0.3), (-1.2, 2.0), (0.7, -4.0)] {
            let l = bd_lagrangian(u, v, &de, 1.5);
            assert!((l - pair_lagrangian(pair, &energy, u, v).unwrap()).abs() < 1e-10);
        }
        let sf = ScalarEnergy::spin_flip();
        for (m, q) in [(0.0, 0.5), (0.6, -2.0), (-0.9, 1.0)] {
            let l = sf_lagrangian(m, q).unwrap();
            assert!(
                (l - pair_lagrangian(DissipationPair::SpinFlip, &sf, m, q).unwrap()).abs() < 1e-12
            );
        }
    }

    #[test]
    fn quadratic_flow_is_exponential() {
        let path = generalized_flow_solve(
            &ScalarEnergy::quadratic(),
            DissipationPair::Quadratic,
            1.0,
            1.0,
            1e-3,
        )
        .unwrap();
        for (t, u) in path.times().iter().zip(path.values()) {
            assert!((u - (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn spin_flip_flow_is_exponential() {
        let path = generalized_flow_solve(
            &ScalarEnergy::spin_flip(),
            DissipationPair::SpinFlip,
            0.8,
            1.0,
            1e-3,
        )
        .unwrap();
        for (t, m) in path.times().iter().zip(path.values()) {
            assert!((m - 0.8 * (-2.0 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn flow_step_guard() {
        let r = generalized_flow_solve(
            &ScalarEnergy::quadratic(),
            DissipationPair::Quadratic,
            10.0,
            1.0,
            0.1,
        );
        assert!(matches!(r, Err(Error::ReduceDt(_))));
    }

    #[test]
    fn actions_vanish_on_flows_and_not_on_reversals() {
        let e = ScalarEnergy::spin_flip();
        let path = generalized_flow_solve(&e, DissipationPair::SpinFlip, 0.8, 0.5, 1e-3).unwrap();
        let forward = path_action(&path, sf_lagrangian).unwrap();
        assert!(forward.abs() < 1e-6);
        let backward = path_action(&path.reversed(), sf_lagrangian).unwrap();
        let gap = 2.0 * (e.value(path.first()) - e.value(path.last()));
        assert!(backward > 0.0);
        assert!(
            (backward - (gap + forward)).abs() < 1e-5,
            "{backward} vs {gap}"
        );
    }

    #[test]
    fn optimal_action_examples() {
        let (v, _) = optimal_action(sf_lagrangian, 0.0, 0.0, 1.0, 16).unwrap();
        assert!(v.abs() < 1e-12);
        let t: f64 = 0.5;
        let (v, _) = optimal_action(sf_lagrangian, 0.8, 0.8 * (-2.0 * t).exp(), t, 64).unwrap();
        assert!(v < 1e-4);
        let (a, path) = optimal_action(sf_lagrangian, 0.8, 0.9, 0.25, 64).unwrap();
        let (b, _) = optimal_action(sf_lagrangian, 0.8, 0.9, 0.25, 128).unwrap();
        assert!(a > 0.1 && ((a - b) / b).abs() < 0.01);
        assert_eq!(path.values().len(), 65);
        assert!(optimal_action(sf_lagrangian, 0.0, 0.1, 1.0, 4).is_err());
    }

    #[test]
    fn bin_action_is_zero_when_bin_holds_typical_endpoint() {
        let typical = 0.8 * (-1.0f64).exp();
        let (v, _) = bin_action(
            sf_lagrangian,
            0.8,
            typical - 0.025,
            typical + 0.025,
            0.5,
            32,
        )
        .unwrap();
        assert!(v < 1e-6);
        let (w, end) = bin_action(sf_lagrangian, 0.8, 0.875, 0.925, 0.25, 32).unwrap();
        assert!(w > 0.0 && (end - 0.875).abs() < 1e-6);
    }
}
