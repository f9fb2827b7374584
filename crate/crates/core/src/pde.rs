//! Finite-volume solvers for the limit equations: heat flow, drift-diffusion
//! with a nonlocal interaction, and drift-diffusion with linear decay.
//!
//! Diffusion is treated implicitly (Crank-Nicolson or implicit Euler) and the
//! drift explicitly with a central face flux, so each step is one linear
//! tridiagonal (cyclic on the torus) solve.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::{
    convolve, EnergySpec, Grid, GridDensity, GridMeasure, Topology, NEGATIVE_TOLERANCE,
};
use crate::numerics::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::path::MeasurePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    CrankNicolson,
    ImplicitEuler,
}

impl Scheme {
    fn theta(self) -> f64 {
        match self {
            Scheme::CrankNicolson => 0.5,
            Scheme::ImplicitEuler => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Mobility scalar in front of the drift.
    #[serde(rename = "A", default = "one")]
    pub a: f64,
    /// Diffusion coefficient `σ²`.
    #[serde(default = "one")]
    pub sigma2: f64,
    /// Decay rate; only `decay_solve` accepts a nonzero value.
    #[serde(default)]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl PdeConfig {
    /// Crank-Nicolson with `A = σ² = 1` and no decay.
    pub fn new(grid: Grid, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            dt,
            t_end,
            scheme: Scheme::CrankNicolson,
            a: 1.0,
            sigma2: 1.0,
            lambda: 0.0,
        }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn with_coefficients(self, a: f64, sigma2: f64) -> Self {
        Self { a, sigma2, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end * (1.0 + 1e-12)) {
            return Err(invalid(format!(
                "need 0 < dt <= t_end, got dt={} t_end={}",
                self.dt, self.t_end
            )));
        }
        if !(self.a > 0.0 && self.sigma2 > 0.0) {
            return Err(invalid("A and sigma2 must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda must be nonnegative"));
        }
        if self.grid.topology() == Topology::Torus && self.grid.n_cells() < 3 {
            return Err(invalid("periodic solves need at least three cells"));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(invalid("t_end must be an integer multiple of dt"));
        }
        Ok(steps as usize)
    }
}

/// Precomputed implicit diffusion operator `I - θ dt σ² L`.
struct Stepper {
    grid: Grid,
    dt: f64,
    diffusivity: f64,
    theta: f64,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl Stepper {
    fn new(cfg: &PdeConfig) -> Self {
        let grid = cfg.grid;
        let n = grid.n_cells();
        let theta = cfg.scheme.theta();
        let r = theta * cfg.dt * cfg.sigma2 / (grid.dx() * grid.dx());
        let mut sub = vec![-r; n];
        let mut sup = vec![-r; n];
        let mut diag = vec![1.0 + 2.0 * r; n];
        if grid.topology() == Topology::Interval {
            sub[0] = 0.0;
            sup[n - 1] = 0.0;
            diag[0] = 1.0 + r;
            diag[n - 1] = 1.0 + r;
            if n == 1 {
                diag[0] = 1.0;
            }
        }
        Self {
            grid,
            dt: cfg.dt,
            diffusivity: cfg.sigma2,
            theta,
            sub,
            diag,
            sup,
        }
    }

    fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h2 = self.grid.dx() * self.grid.dx();
        (0..n)
            .map(|i| {
                let (left, right) = match self.grid.topology() {
                    Topology::Torus => (f[(i + n - 1) % n], f[(i + 1) % n]),
                    Topology::Interval => (
                        if i > 0 { f[i - 1] } else { f[i] },
                        if i + 1 < n { f[i + 1] } else { f[i] },
                    ),
                };
                (left - 2.0 * f[i] + right) / h2
            })
            .collect()
    }

    /// One step of `∂_t f = σ² ∂_xx f + extra`, with `extra` explicit.
    fn step(&self, f: &[f64], extra: Option<&[f64]>) -> Vec<f64> {
        let lap = self.laplacian(f);
        let c = (1.0 - self.theta) * self.dt * self.diffusivity;
        let rhs: Vec<f64> = (0..f.len())
            .map(|i| f[i] + c * lap[i] + extra.map_or(0.0, |e| self.dt * e[i]))
            .collect();
        match self.grid.topology() {
            Topology::Torus => solve_cyclic_tridiagonal(&self.sub, &self.diag, &self.sup, &rhs),
            Topology::Interval => solve_tridiagonal(&self.sub, &self.diag, &self.sup, &rhs),
        }
    }
}

fn check_nonnegative(f: &[f64]) -> Result<()> {
    match f
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= -NEGATIVE_TOLERANCE))
    {
        Some((cell, &value)) => Err(Error::SchemeInstability { cell, value }),
        None => Ok(()),
    }
}

/// `∂_t ρ = σ² ∂_xx ρ` (σ² = `cfg.sigma2`). Works on any grid density, so the
/// exclusion-process limit is served by the same solver.
pub fn heat_solve<S: GridDensity>(rho0: &S, cfg: &PdeConfig) -> Result<MeasurePath<S>> {
    let steps = cfg.validate()?;
    if cfg.lambda != 0.0 {
        return Err(invalid("heat_solve takes no decay; use decay_solve"));
    }
    rho0.grid().ensure_same(&cfg.grid)?;
    let stepper = Stepper::new(cfg);
    let mut f = rho0.density();
    let mut slices = vec![rho0.clone()];
    for _ in 0..steps {
        f = stepper.step(&f, None);
        check_nonnegative(&f)?;
        slices.push(S::from_density(cfg.grid, f.clone())?);
    }
    MeasurePath::from_slices(0.0, cfg.dt, slices)
}

/// `div(A f ∇ξ)` with face densities as arithmetic means; also enforces the
/// explicit-transport CFL bound `dt A max|∇ξ| <= Δx`.
fn drift_term(grid: &Grid, f: &[f64], xi: &[f64], a: f64, dt: f64) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    let dx = grid.dx();
    let mut flux = vec![0.0; grid.n_faces()];
    for (face, fl) in flux.iter_mut().enumerate() {
        let r = grid.right_of_face(face);
        let grad = (xi[r] - xi[face]) / dx;
        if dt * a * grad.abs() > dx {
            return Err(Error::ReduceDt(format!(
                "drift CFL violated at face {face}"
            )));
        }
        *fl = a * 0.5 * (f[face] + f[r]) * grad;
    }
    Ok((0..n)
        .map(|i| {
            let right = if i < flux.len() { flux[i] } else { 0.0 };
            let left = match (i, grid.topology()) {
                (0, Topology::Torus) => flux[n - 1],
                (0, Topology::Interval) => 0.0,
                _ => flux[i - 1],
            };
            (right - left) / dx
        })
        .collect())
}

fn drift_path(
    rho0: &GridMeasure,
    psi: &[f64],
    phi: Option<&[f64]>,
    cfg: &PdeConfig,
    decay: f64,
) -> Result<MeasurePath<GridMeasure>> {
    let steps = cfg.validate()?;
    let grid = cfg.grid;
    rho0.grid().ensure_same(&grid)?;
    EnergySpec::free_energy(&grid, Some(psi.to_vec()), phi.map(<[f64]>::to_vec), 1.0)?;
    let phi = phi.filter(|k| k.iter().any(|v| *v != 0.0));
    let stepper = Stepper::new(cfg);
    let survival = (-decay * cfg.dt).exp();
    let dx = grid.dx();
    let mut f = rho0.density();
    let mut slices = vec![rho0.clone()];
    for _ in 0..steps {
        let xi: Vec<f64> = match phi {
            Some(kernel) => {
                let w: Vec<f64> = f.iter().map(|v| v * dx).collect();
                psi.iter()
                    .zip(convolve(&grid, &w, kernel))
                    .map(|(p, c)| p + c)
                    .collect()
            }
            None => psi.to_vec(),
        };
        let drift = drift_term(&grid, &f, &xi, cfg.a, cfg.dt)?;
        f = stepper.step(&f, Some(&drift));
        check_nonnegative(&f)?;
        if decay > 0.0 {
            for v in &mut f {
                *v *= survival;
            }
        }
        slices.push(GridMeasure::from_density_values(grid, &f)?);
    }
    MeasurePath::from_slices(0.0, cfg.dt, slices)
}

/// `∂_t ρ = σ² ∂_xx ρ + A ∂_x(ρ ∂_x[Ψ + ρ∗Φ])`.
pub fn drift_interaction_solve(
    rho0: &GridMeasure,
    psi: &[f64],
    phi: &[f64],
    cfg: &PdeConfig,
) -> Result<MeasurePath<GridMeasure>> {
    if cfg.lambda != 0.0 {
        return Err(invalid(
            "drift_interaction_solve takes no decay; use decay_solve",
        ));
    }
    drift_path(rho0, psi, Some(phi), cfg, 0.0)
}

/// `∂_t ρ = σ² ∂_xx ρ + A ∂_x(ρ ∂_x Ψ) - λρ` by splitting: one drift-diffusion
/// step, then the exact decay factor `e^{-λ dt}`. The explicit `lambda`
/// argument is used; `cfg.lambda` is ignored.
pub fn decay_solve(
    rho0: &GridMeasure,
    psi: &[f64],
    lambda: f64,
    cfg: &PdeConfig,
) -> Result<MeasurePath<GridMeasure>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be nonnegative"));
    }
    if rho0.mass() > 1.0 + 1e-12 {
        return Err(invalid("initial mass must not exceed one"));
    }
    drift_path(rho0, psi, None, &cfg.with_lambda(0.0), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{free_energy, OccupationProfile};
    use std::f64::consts::PI;

    fn cosine_mode(n: usize) -> GridMeasure {
        GridMeasure::from_fn_normalized(Grid::unit_torus(n), |x| 1.0 + 0.5 * (2.0 * PI * x).cos())
            .unwrap()
    }

    /// Amplitude of the first cosine mode of a density on the unit torus.
    fn cos_amplitude(f: &[f64]) -> f64 {
        let n = f.len() as f64;
        2.0 * f
            .iter()
            .enumerate()
            .map(|(i, v)| v * (2.0 * PI * (i as f64 + 0.5) / n).cos())
            .sum::<f64>()
            / n
    }

    #[test]
    fn uniform_is_stationary() {
        let g = Grid::unit_interval(32);
        let path = heat_solve(&GridMeasure::uniform(g), &PdeConfig::new(g, 1e-3, 0.01)).unwrap();
        for s in path.slices() {
            assert!(s.l1_distance(&GridMeasure::uniform(g)).unwrap() < 1e-14);
        }
    }

    #[test]
    fn cosine_mode_decays_at_heat_rate() {
        let rho = cosine_mode(256);
        let path = heat_solve(&rho, &PdeConfig::new(*rho.grid(), 1e-4, 0.01)).unwrap();
        let amp = cos_amplitude(&path.last().density());
        let exact = 0.5 * (-4.0 * PI * PI * 0.01f64).exp();
        assert!((amp - exact).abs() < 1e-3 * exact, "{amp} vs {exact}");
        for s in path.slices() {
            assert!((s.mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn crank_nicolson_is_second_order() {
        let mut errs = Vec::new();
        for (n, dt) in [(32, 4e-3), (64, 2e-3), (128, 1e-3)] {
            let rho = cosine_mode(n);
            let path = heat_solve(&rho, &PdeConfig::new(*rho.grid(), dt, 0.04)).unwrap();
            let exact = 0.5 * (-4.0 * PI * PI * 0.04f64).exp();
            errs.push((cos_amplitude(&path.last().density()) - exact).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn occupation_profiles_use_the_same_solver() {
        let g = Grid::unit_torus(64);
        let rho = OccupationProfile::from_fn(g, |x| 0.5 + 0.3 * (2.0 * PI * x).sin()).unwrap();
        let path = heat_solve(&rho, &PdeConfig::new(g, 1e-4, 1e-2)).unwrap();
        assert!(path.last().values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_bad_config() {
        let g = Grid::unit_torus(16);
        let rho = GridMeasure::uniform(g);
        assert!(heat_solve(&rho, &PdeConfig::new(g, 0.3, 0.1)).is_err());
        assert!(heat_solve(&rho, &PdeConfig::new(g, 0.03, 0.1)).is_err());
        assert!(heat_solve(&rho, &PdeConfig::new(g, 0.01, 0.1).with_lambda(1.0)).is_err());
        assert!(matches!(
            heat_solve(&rho, &PdeConfig::new(Grid::unit_torus(8), 0.01, 0.1)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn zero_potentials_reduce_to_heat() {
        let rho = cosine_mode(64);
        let cfg = PdeConfig::new(*rho.grid(), 1e-4, 5e-3);
        let heat = heat_solve(&rho, &cfg).unwrap();
        let drift = drift_interaction_solve(&rho, &[0.0; 64], &[0.0; 64], &cfg).unwrap();
        for (a, b) in heat.slices().iter().zip(drift.slices()) {
            assert!(a.l1_distance(b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn gibbs_state_is_stationary() {
        let g = Grid::unit_interval(256);
        let psi = g.sample(|x| (x - 0.5) * (x - 0.5));
        let gibbs = GridMeasure::from_fn_normalized(g, |x| (-(x - 0.5) * (x - 0.5)).exp()).unwrap();
        let path =
            drift_interaction_solve(&gibbs, &psi, &[0.0; 256], &PdeConfig::new(g, 5e-5, 1e-3))
                .unwrap();
        for w in path.slices().windows(2) {
            let step: f64 = w[0]
                .density()
                .iter()
                .zip(w[1].density())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(step <= 1e-8, "residual {step}");
        }
    }

    #[test]
    fn mean_relaxes_towards_minimum() {
        let g = Grid::unit_interval(128);
        let psi = g.sample(|x| (x - 0.5) * (x - 0.5));
        let rho = GridMeasure::from_fn_normalized(g, |x| (-(x - 0.25) * (x - 0.25) / 0.005).exp())
            .unwrap();
        let path = drift_interaction_solve(&rho, &psi, &[0.0; 128], &PdeConfig::new(g, 1e-3, 0.2))
            .unwrap();
        let means: Vec<f64> = path.slices().iter().map(|s| s.mean_position()).collect();
        for w in means.windows(2) {
            assert!(w[1] >= w[0] - 1e-14 && w[1] <= 0.5);
        }
    }

    #[test]
    fn free_energy_dissipates_with_interaction() {
        let g = Grid::unit_torus(64);
        let psi = g.sample(|x| 0.5 * (2.0 * PI * x).cos());
        let phi = g.sample_kernel(|x| (-x * x / 0.02).exp());
        let spec = EnergySpec::free_energy(&g, Some(psi.clone()), Some(phi.clone()), 1.0).unwrap();
        let rho = GridMeasure::from_fn_normalized(g, |x| 1.0 + 0.6 * (4.0 * PI * x).sin()).unwrap();
        let path =
            drift_interaction_solve(&rho, &psi, &phi, &PdeConfig::new(g, 1e-4, 0.02)).unwrap();
        let energies: Vec<f64> = path
            .slices()
            .iter()
            .map(|s| free_energy(s, &spec).unwrap())
            .collect();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        for s in path.slices() {
            assert!((s.mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let g = Grid::unit_interval(64);
        let psi = g.sample(|x| 1000.0 * x);
        let rho = GridMeasure::uniform(g);
        let r = drift_interaction_solve(&rho, &psi, &[0.0; 64], &PdeConfig::new(g, 1e-2, 0.1));
        assert!(matches!(r, Err(Error::ReduceDt(_))));
    }

    #[test]
    fn decay_follows_exponential_mass() {
        let rho = cosine_mode(64);
        let g = *rho.grid();
        let cfg = PdeConfig::new(g, 1e-3, 1.0);
        let path = decay_solve(&rho, &[0.0; 64], 1.0, &cfg).unwrap();
        assert!((path.last().mass() - (-1.0f64).exp()).abs() < 1e-10);
        let heat = heat_solve(&rho, &cfg).unwrap();
        for (k, (a, b)) in path.slices().iter().zip(heat.slices()).enumerate() {
            let scaled = b.scaled((-(k as f64) * 1e-3).exp()).unwrap();
            assert!(a.l1_distance(&scaled).unwrap() < 1e-12);
        }
        let plain = decay_solve(&rho, &[0.0; 64], 0.0, &cfg).unwrap();
        let drift = drift_interaction_solve(&rho, &[0.0; 64], &[0.0; 64], &cfg).unwrap();
        assert_eq!(plain.last(), drift.last());
    }
}
