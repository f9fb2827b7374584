//! Minimizing-movement steps for Wasserstein gradient flows on an interval,
//! solved in quantile coordinates where the transport term is quadratic and
//! the entropy is convex.
//!
//! A [`QuantileDensity`] with `m` knots places `X_j = F⁻¹((j - ½) M / m)` for
//! `j = 1..m` and pins `X_0 = 0`, `X_{m+1} = L`. Between consecutive knots the
//! mass is spread uniformly, so the quantile function is piecewise linear and
//! both the squared distance and the entropy have closed forms.

use crate::error::{invalid, Error, Result};
use crate::measures::{boltzmann_entropy, EnergyKind, EnergySpec, Grid, GridMeasure, Topology};
use crate::numerics::{bisect_increasing, compensated_sum, solve_tridiagonal, CompensatedSum};
use crate::path::MeasurePath;
use crate::transport::wasserstein_quantile;

const MAX_NEWTON_ITERATIONS: usize = 200;
/// Stop when the squared Newton decrement `gᵀH⁻¹g` drops below this.
const DECREMENT_SQ_TOLERANCE: f64 = 1e-20;
/// A stalled line search is accepted as converged below this decrement.
const STALL_DECREMENT_SQ: f64 = 1e-12;
const ALTERNATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileDensity {
    length: f64,
    mass: f64,
    positions: Vec<f64>,
}

impl QuantileDensity {
    /// Samples the (cell-uniform) quantile function of `rho` at `m` mass midpoints.
    pub fn from_measure(rho: &GridMeasure, m: usize) -> Result<Self> {
        let grid = rho.grid();
        if grid.topology() != Topology::Interval {
            return Err(Error::Unsupported(
                "quantile coordinates on the torus".into(),
            ));
        }
        if m == 0 {
            return Err(invalid("need at least one quantile"));
        }
        let mass = rho.mass();
        if mass <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        let mut positions = Vec::with_capacity(m);
        let mut acc = CompensatedSum::new();
        let mut cell = 0;
        let mut below = 0.0;
        for j in 0..m {
            let u = (j as f64 + 0.5) * mass / m as f64;
            while cell < grid.n_cells() && below + rho.weights()[cell] < u {
                acc.add(rho.weights()[cell]);
                below = acc.value();
                cell += 1;
            }
            let i = cell.min(grid.n_cells() - 1);
            let w = rho.weights()[i];
            let frac = if w > 0.0 {
                ((u - below) / w).clamp(0.0, 1.0)
            } else {
                0.5
            };
            positions.push(grid.edge(i) + frac * grid.dx());
        }
        let q = Self {
            length: grid.length(),
            mass,
            positions,
        };
        q.ensure_monotone()?;
        Ok(q)
    }

    pub fn new(length: f64, mass: f64, positions: Vec<f64>) -> Result<Self> {
        let q = Self {
            length,
            mass,
            positions,
        };
        q.ensure_monotone()?;
        Ok(q)
    }

    pub fn m(&self) -> usize {
        self.positions.len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    fn ensure_monotone(&self) -> Result<()> {
        if lengths(&self.positions, self.length)
            .iter()
            .all(|&l| l > 0.0)
        {
            Ok(())
        } else {
            Err(invalid(
                "quantile positions must increase strictly inside the domain",
            ))
        }
    }

    /// Mass of segment `s` (between knots `s` and `s+1`, counting the pinned ends).
    fn du(&self, s: usize) -> f64 {
        segment_mass(s, self.m(), self.mass)
    }

    /// Cell averages of the piecewise-uniform density.
    pub fn to_measure(&self, grid: &Grid) -> Result<GridMeasure> {
        if (grid.length() - self.length).abs() > 1e-12 * self.length {
            return Err(Error::GridMismatch);
        }
        let n = grid.n_cells();
        let dx = grid.dx();
        let mut weights = vec![0.0; n];
        let knots = with_ends(&self.positions, self.length);
        for s in 0..knots.len() - 1 {
            let (lo, hi) = (knots[s], knots[s + 1]);
            let density = self.du(s) / (hi - lo);
            let first = ((lo / dx) as usize).min(n - 1);
            let last = ((hi / dx) as usize).min(n - 1);
            for (i, w) in weights.iter_mut().enumerate().take(last + 1).skip(first) {
                let overlap = hi.min(grid.edge(i + 1)) - lo.max(grid.edge(i));
                if overlap > 0.0 {
                    *w += density * overlap;
                }
            }
        }
        GridMeasure::new(*grid, weights)
    }

    fn scaled_mass(&self, factor: f64) -> Self {
        Self {
            mass: self.mass * factor,
            ..self.clone()
        }
    }
}

fn segment_mass(s: usize, m: usize, mass: f64) -> f64 {
    if s == 0 || s == m {
        0.5 * mass / m as f64
    } else {
        mass / m as f64
    }
}

fn with_ends(x: &[f64], length: f64) -> Vec<f64> {
    let mut k = Vec::with_capacity(x.len() + 2);
    k.push(0.0);
    k.extend_from_slice(x);
    k.push(length);
    k
}

fn lengths(x: &[f64], length: f64) -> Vec<f64> {
    with_ends(x, length)
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect()
}

/// C¹ cubic Hermite interpolant through values on a uniform node set, with
/// central-difference slopes and linear extension past the end nodes.
#[derive(Debug, Clone)]
struct Hermite {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Hermite {
    fn new(x0: f64, h: f64, values: Vec<f64>, even: bool) -> Self {
        let n = values.len();
        let slopes = (0..n)
            .map(|i| {
                if n == 1 || (even && i == 0) {
                    0.0
                } else if i == 0 {
                    (values[1] - values[0]) / h
                } else if i == n - 1 {
                    (values[n - 1] - values[n - 2]) / h
                } else {
                    (values[i + 1] - values[i - 1]) / (2.0 * h)
                }
            })
            .collect();
        Self {
            x0,
            h,
            values,
            slopes,
        }
    }

    /// Value, first and second derivative at `x`.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.values.len();
        let t = (x - self.x0) / self.h;
        if n == 1 {
            return (self.values[0], 0.0, 0.0);
        }
        if t <= 0.0 {
            let s = self.slopes[0];
            return (self.values[0] + s * t * self.h, s, 0.0);
        }
        if t >= (n - 1) as f64 {
            let s = self.slopes[n - 1];
            return (
                self.values[n - 1] + s * (t - (n - 1) as f64) * self.h,
                s,
                0.0,
            );
        }
        let i = (t as usize).min(n - 2);
        let u = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let (u2, u3) = (u * u, u * u * u);
        let f = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        let df = (6.0 * u2 - 6.0 * u) * y0
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (-6.0 * u2 + 6.0 * u) * y1
            + (3.0 * u2 - 2.0 * u) * m1;
        let d2f = (12.0 * u - 6.0) * y0
            + (6.0 * u - 4.0) * m0
            + (-12.0 * u + 6.0) * y1
            + (6.0 * u - 2.0) * m1;
        (f, df / self.h, d2f / (self.h * self.h))
    }
}

/// `(1/2h) d(X, Y)² + Ent + (1/kT)[∫Ψ dρ + ½∫∫Φ dρ dρ]` in quantile coordinates.
struct Objective {
    length: f64,
    mass: f64,
    h: f64,
    target: Vec<f64>,
    psi: Option<Hermite>,
    phi: Option<Hermite>,
    kt: f64,
}

impl Objective {
    fn new(prev: &QuantileDensity, h: f64, spec: &EnergySpec, grid: &Grid) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("time step h must be positive"));
        }
        match spec.kind() {
            EnergyKind::Entropy | EnergyKind::FreeEnergy => {}
            EnergyKind::MixingEntropy => {
                return Err(Error::Unsupported("JKO for the mixing entropy".into()))
            }
        }
        let psi = spec
            .background()
            .map(|v| Hermite::new(grid.center(0), grid.dx(), v.to_vec(), false));
        let phi = spec
            .interaction()
            .map(|v| Hermite::new(0.0, grid.dx(), v.to_vec(), true));
        Ok(Self {
            length: prev.length,
            mass: prev.mass,
            h,
            target: prev.positions.clone(),
            psi,
            phi,
            kt: spec.kt(),
        })
    }

    fn m(&self) -> usize {
        self.target.len()
    }

    fn du(&self, s: usize) -> f64 {
        segment_mass(s, self.m(), self.mass)
    }

    fn distance_sq(&self, x: &[f64]) -> f64 {
        let d = with_ends(
            &x.iter()
                .zip(&self.target)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
            0.0,
        );
        compensated_sum(
            (0..=self.m())
                .map(|s| self.du(s) / 3.0 * (d[s] * d[s] + d[s] * d[s + 1] + d[s + 1] * d[s + 1])),
        )
    }

    fn entropy(&self, x: &[f64]) -> f64 {
        let l = lengths(x, self.length);
        compensated_sum(l.iter().enumerate().map(|(s, &len)| {
            let du = self.du(s);
            du * (du / len).ln()
        }))
    }

    fn potential(&self, x: &[f64]) -> f64 {
        let w = self.mass / self.m() as f64;
        let mut total = 0.0;
        if let Some(psi) = &self.psi {
            total += w * compensated_sum(x.iter().map(|&xi| psi.eval(xi).0));
        }
        if let Some(phi) = &self.phi {
            let mut acc = CompensatedSum::new();
            for &a in x {
                for &b in x {
                    acc.add(phi.eval((a - b).abs()).0);
                }
            }
            total += 0.5 * w * w * acc.value();
        }
        total / self.kt
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.entropy(x) + self.potential(x)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.distance_sq(x) / (2.0 * self.h) + self.energy(x)
    }

    /// Gradient and tridiagonal Hessian (sub, diag, sup). The Hessian drops the
    /// interaction coupling, which is dense; Newton then acts as a quasi-Newton
    /// method on that part.
    fn derivatives(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.m();
        let l = lengths(x, self.length);
        let c = 1.0 / (2.0 * self.h);
        let d: Vec<f64> = x.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        let dd = |k: isize| {
            if k < 0 || k >= m as isize {
                0.0
            } else {
                d[k as usize]
            }
        };
        let w = self.mass / m as f64;
        let mut grad = vec![0.0; m];
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for j in 0..m {
            // knot j sits between segments j (left) and j + 1 (right)
            let (ul, ur) = (self.du(j), self.du(j + 1));
            let k = j as isize;
            grad[j] =
                c * (ul / 3.0 * (2.0 * d[j] + dd(k - 1)) + ur / 3.0 * (2.0 * d[j] + dd(k + 1)));
            grad[j] += -ul / l[j] + ur / l[j + 1];
            diag[j] = c * 2.0 * (ul + ur) / 3.0 + ul / (l[j] * l[j]) + ur / (l[j + 1] * l[j + 1]);
            if j > 0 {
                sub[j] = c * ul / 3.0 - ul / (l[j] * l[j]);
            }
            if j + 1 < m {
                sup[j] = c * ur / 3.0 - ur / (l[j + 1] * l[j + 1]);
            }
            if let Some(psi) = &self.psi {
                let (_, d1, d2) = psi.eval(x[j]);
                grad[j] += w * d1 / self.kt;
                diag[j] += w * d2.max(0.0) / self.kt;
            }
            if let Some(phi) = &self.phi {
                let mut acc = CompensatedSum::new();
                for &b in x {
                    let r = x[j] - b;
                    if r != 0.0 {
                        acc.add(r.signum() * phi.eval(r.abs()).1);
                    }
                }
                grad[j] += w * w * acc.value() / self.kt;
            }
        }
        (grad, sub, diag, sup)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        lengths(x, self.length).iter().all(|&l| l > 0.0)
    }

    /// Damped Newton from the previous iterate.
    fn minimize(&self) -> Result<Vec<f64>> {
        let mut x = self.target.clone();
        let mut fx = self.value(&x);
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let (g, sub, diag, sup) = self.derivatives(&x);
            let step = solve_tridiagonal(&sub, &diag, &sup, &g);
            let dec_sq: f64 = compensated_sum(g.iter().zip(&step).map(|(a, b)| a * b));
            if dec_sq <= DECREMENT_SQ_TOLERANCE {
                return Ok(x);
            }
            let slack = 4.0 * f64::EPSILON * fx.abs().max(1.0);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - t * s).collect();
                if self.admissible(&trial) {
                    let ft = self.value(&trial);
                    if ft <= fx - 1e-4 * t * dec_sq + slack {
                        accepted = Some((trial, ft));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((trial, ft)) => {
                    x = trial;
                    fx = ft;
                }
                None if dec_sq <= STALL_DECREMENT_SQ => return Ok(x),
                None => return Err(Error::StepTooAggressive),
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_NEWTON_ITERATIONS,
            best: fx,
        })
    }
}

/// One minimizing-movement step in quantile coordinates; `grid` is the grid on
/// which `spec`'s potentials are sampled.
pub fn jko_step_quantile(
    prev: &QuantileDensity,
    h: f64,
    spec: &EnergySpec,
    grid: &Grid,
) -> Result<QuantileDensity> {
    let objective = Objective::new(prev, h, spec, grid)?;
    let x = objective.minimize()?;
    Ok(QuantileDensity {
        positions: x,
        ..prev.clone()
    })
}

/// Energy of a quantile density (closed-form entropy plus potentials at the knots).
pub fn quantile_energy(q: &QuantileDensity, spec: &EnergySpec, grid: &Grid) -> Result<f64> {
    Ok(Objective::new(q, 1.0, spec, grid)?.energy(&q.positions))
}

/// Value of `(1/2h) d(ρ, ρ_prev)² + E(ρ)` in quantile coordinates.
pub fn jko_objective(
    q: &QuantileDensity,
    prev: &QuantileDensity,
    h: f64,
    spec: &EnergySpec,
    grid: &Grid,
) -> Result<f64> {
    if q.m() != prev.m() || (q.mass - prev.mass).abs() > 1e-12 {
        return Err(Error::GridMismatch);
    }
    Ok(Objective::new(prev, h, spec, grid)?.value(&q.positions))
}

/// Minimizer of `(1/2h) d(ρ, ρ0)² + E(ρ)` with `m = n_cells` quantiles.
pub fn jko_step(rho0: &GridMeasure, h: f64, spec: &EnergySpec) -> Result<GridMeasure> {
    let grid = rho0.grid();
    let q0 = QuantileDensity::from_measure(rho0, grid.n_cells())?;
    jko_step_quantile(&q0, h, spec, grid)?.to_measure(grid)
}

/// `steps` JKO iterations carried out in quantile coordinates; every iterate
/// is projected back onto the grid.
pub fn jko_flow(
    rho0: &GridMeasure,
    h: f64,
    steps: usize,
    spec: &EnergySpec,
) -> Result<MeasurePath<GridMeasure>> {
    let grid = rho0.grid();
    if grid.topology() != Topology::Interval {
        return Err(Error::Unsupported("JKO on the torus".into()));
    }
    let mut slices = vec![rho0.clone()];
    if steps > 0 {
        let mut q = QuantileDensity::from_measure(rho0, grid.n_cells())?;
        for _ in 0..steps {
            q = jko_step_quantile(&q, h, spec, grid)?;
            slices.push(q.to_measure(grid)?);
        }
    }
    MeasurePath::from_slices(0.0, h, slices)
}

/// `K_h(ρ1; ρ0) = d(ρ0, ρ1)² / 4h + ½ Ent(ρ1) - ½ Ent(ρ0)`.
pub fn k_h_value(rho1: &GridMeasure, rho0: &GridMeasure, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("time step h must be positive"));
    }
    let w2 = wasserstein_quantile(rho0, rho1)?;
    Ok(w2 / (4.0 * h) + 0.5 * boltzmann_entropy(rho1) - 0.5 * boltzmann_entropy(rho0))
}

/// Bernoulli relative entropy `θ log(θ/p) + (1-θ) log((1-θ)/(1-p))`.
fn bernoulli_kl(theta: f64, p: f64) -> f64 {
    let term = |a: f64, b: f64| if a <= 0.0 { 0.0 } else { a * (a / b).ln() };
    term(theta, p) + term(1.0 - theta, 1.0 - p)
}

/// Outcome of one step of the diffusion-with-decay scheme.
#[derive(Debug, Clone)]
pub struct DecayStep {
    pub rho: GridMeasure,
    pub rho_nd: GridMeasure,
    /// Joint objective at the returned split (relative to `F(ρ_prev)`).
    pub objective: f64,
    pub sweeps: usize,
}

/// Survival probability `e^{-λh}`, rejecting steps where the decayed weight
/// `1 - e^{-λh}` is indistinguishable from 1.
fn survival(h: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite() && h > 0.0) {
        return Err(invalid("need h > 0 and lambda >= 0"));
    }
    let p = (-lambda * h).exp();
    if 1.0 - p == 1.0 {
        return Err(Error::DecayStepTooLarge);
    }
    Ok(p)
}

struct DecayOutcome {
    bar: QuantileDensity,
    theta: Vec<f64>,
    objective: f64,
    sweeps: usize,
}

/// Alternating minimization of
/// `½F(ρ̄) - ½F(ρ_prev) + d(ρ̄, ρ_prev)²/4h + Σ_i ρ̄_i KL(θ_i | e^{-λh})`
/// over the joint state `ρ̄ = ρ + ρ_ND` and the per-cell surviving fraction
/// `θ_i = ρ_i / ρ̄_i`. This is the decay problem after the inner split has been
/// rewritten cellwise: the entropy of the two parts adds up to the entropy of
/// `ρ̄` plus `ρ̄_i` times a Bernoulli entropy.
fn decay_alternation(
    prev: &QuantileDensity,
    h: f64,
    psi: &[f64],
    p: f64,
    grid: &Grid,
) -> Result<DecayOutcome> {
    let n = grid.n_cells();
    let base = EnergySpec::free_energy(grid, Some(psi.to_vec()), None, 1.0)?;
    let f_prev = quantile_energy(prev, &base, grid)?;
    let mut theta = vec![0.5; n];
    let mut objective = f64::INFINITY;
    for sweep in 1..=50 {
        // outer: the KL term acts as an extra cellwise potential (doubled in the JKO normalization)
        let penalty: Vec<f64> = theta.iter().map(|&t| bernoulli_kl(t, p)).collect();
        let shifted: Vec<f64> = psi.iter().zip(&penalty).map(|(a, c)| a + 2.0 * c).collect();
        let spec = EnergySpec::free_energy(grid, Some(shifted), None, 1.0)?;
        let bar = jko_step_quantile(prev, h, &spec, grid)?;
        // inner: per cell, minimize r log r + (b - r) log(b - r) - r log p - (b - r) log(1 - p) over r ∈ [0, b]
        let bar_grid = bar.to_measure(grid)?;
        for (i, t) in theta.iter_mut().enumerate() {
            let b = bar_grid.weights()[i];
            if b <= 0.0 {
                *t = p;
                continue;
            }
            let slope = |r: f64| (r / (b - r)).ln() - (p / (1.0 - p)).ln();
            *t = bisect_increasing(slope, 0.0, b, 200) / b;
        }
        let kl = compensated_sum(
            bar_grid
                .weights()
                .iter()
                .zip(&theta)
                .map(|(b, &t)| b * bernoulli_kl(t, p)),
        );
        let objective_new = 0.5 * (jko_objective(&bar, prev, h, &base, grid)? - f_prev) + kl;
        let done = (objective - objective_new).abs() <= ALTERNATION_TOLERANCE;
        objective = objective_new;
        if done {
            return Ok(DecayOutcome {
                bar,
                theta,
                objective,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: 50,
        best: objective,
    })
}

/// One step of the diffusion-drift-decay scheme: returns the surviving part
/// `ρ` and the decayed part `ρ_ND`, with `|ρ| + |ρ_ND| = |ρ_prev|`.
pub fn decay_step(
    rho_prev: &GridMeasure,
    h: f64,
    psi: &[f64],
    lambda: f64,
) -> Result<(GridMeasure, GridMeasure)> {
    let s = decay_step_report(rho_prev, h, psi, lambda)?;
    Ok((s.rho, s.rho_nd))
}

pub fn decay_step_report(
    rho_prev: &GridMeasure,
    h: f64,
    psi: &[f64],
    lambda: f64,
) -> Result<DecayStep> {
    let grid = *rho_prev.grid();
    grid.ensure_len(psi)?;
    if rho_prev.mass() > 1.0 + 1e-12 {
        return Err(invalid("mass must not exceed one"));
    }
    let prev = QuantileDensity::from_measure(rho_prev, grid.n_cells())?;
    if lambda == 0.0 {
        let spec = EnergySpec::free_energy(&grid, Some(psi.to_vec()), None, 1.0)?;
        let rho = jko_step_quantile(&prev, h, &spec, &grid)?.to_measure(&grid)?;
        let rho_nd = GridMeasure::new(grid, vec![0.0; grid.n_cells()])?;
        return Ok(DecayStep {
            rho,
            rho_nd,
            objective: 0.0,
            sweeps: 0,
        });
    }
    let p = survival(h, lambda)?;
    let out = decay_alternation(&prev, h, psi, p, &grid)?;
    let bar = out.bar.to_measure(&grid)?;
    let rho = GridMeasure::new(
        grid,
        bar.weights()
            .iter()
            .zip(&out.theta)
            .map(|(b, t)| b * t)
            .collect(),
    )?;
    let rho_nd = GridMeasure::new(
        grid,
        bar.weights()
            .iter()
            .zip(&rho.weights().to_vec())
            .map(|(b, r)| b - r)
            .collect(),
    )?;
    Ok(DecayStep {
        rho,
        rho_nd,
        objective: out.objective,
        sweeps: out.sweeps,
    })
}

/// Iterated decay scheme. The surviving fraction is uniform in space
/// (`e^{-λh}` in every cell), so the state is carried in quantile coordinates
/// with its mass scaled after each step.
pub fn decay_flow(
    rho0: &GridMeasure,
    h: f64,
    steps: usize,
    psi: &[f64],
    lambda: f64,
) -> Result<MeasurePath<GridMeasure>> {
    let grid = *rho0.grid();
    grid.ensure_len(psi)?;
    if grid.topology() != Topology::Interval {
        return Err(Error::Unsupported("JKO on the torus".into()));
    }
    let mut slices = vec![rho0.clone()];
    if steps > 0 {
        let p = if lambda == 0.0 {
            1.0
        } else {
            survival(h, lambda)?
        };
        let spec = EnergySpec::free_energy(&grid, Some(psi.to_vec()), None, 1.0)?;
        let mut q = QuantileDensity::from_measure(rho0, grid.n_cells())?;
        for _ in 0..steps {
            let bar = if lambda == 0.0 {
                jko_step_quantile(&q, h, &spec, &grid)?
            } else {
                decay_alternation(&q, h, psi, p, &grid)?.bar
            };
            q = bar.scaled_mass(p);
            slices.push(q.to_measure(&grid)?);
        }
    }
    MeasurePath::from_slices(0.0, h, slices)
}
