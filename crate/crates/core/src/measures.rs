//! Discrete measures on uniform 1-D grids, occupation profiles, particle
//! clouds, and the entropy-type energy functionals with their variational
//! derivatives.
//!
//! A measure is stored as mass per cell; its density is constant on each
//! cell, so every integral in the crate is a rectangle rule on the grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{compensated_sum, xlogx};

/// Weights below zero but above `-NEGATIVE_TOLERANCE` are accepted as
/// roundoff from the solvers; anything more negative is rejected.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Tolerance for "total mass equals one".
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Torus,
    Interval,
}

/// Uniform grid of `n` cells on `[0, L)`, either periodic or bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "n")]
    n_cells: usize,
    #[serde(rename = "L")]
    length: f64,
    topology: Topology,
}

impl Grid {
    pub fn new(n_cells: usize, length: f64, topology: Topology) -> Result<Self> {
        if n_cells == 0 {
            return Err(invalid("grid needs at least one cell"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        Ok(Self {
            n_cells,
            length,
            topology,
        })
    }

    pub fn unit_torus(n_cells: usize) -> Self {
        Self::new(n_cells, 1.0, Topology::Torus).expect("valid unit grid")
    }

    pub fn unit_interval(n_cells: usize) -> Self {
        Self::new(n_cells, 1.0, Topology::Interval).expect("valid unit grid")
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Left edge of cell `i`; `edge(n)` is the right end of the domain.
    pub fn edge(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Number of interior faces carrying flux: `n` on the torus, `n - 1`
    /// on the interval (the two boundary faces are no-flux).
    pub fn n_faces(&self) -> usize {
        match self.topology {
            Topology::Torus => self.n_cells,
            Topology::Interval => self.n_cells - 1,
        }
    }

    /// Cell to the right of face `f` (face `f` separates cells `f` and `f+1`).
    pub fn right_of_face(&self, f: usize) -> usize {
        (f + 1) % self.n_cells
    }

    /// Cell index containing `x`, or `None` if outside `[0, L)`.
    /// On the interval the right endpoint `L` belongs to the last cell.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        if x >= self.length {
            return match self.topology {
                Topology::Interval if x == self.length => Some(self.n_cells - 1),
                _ => None,
            };
        }
        Some(((x / self.dx()) as usize).min(self.n_cells - 1))
    }

    /// Samples `f` at cell centers.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_cells).map(|i| f(self.center(i))).collect()
    }

    /// Samples an even pair potential at grid offsets `k dx`.
    ///
    /// On the torus offsets past `L/2` use the periodic image `k dx - L`, so
    /// the kernel satisfies `kernel[k] == kernel[n - k]` whenever `f` is even.
    pub fn sample_kernel<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_cells)
            .map(|k| {
                let off = k as f64 * dx;
                match self.topology {
                    Topology::Torus if 2 * k > self.n_cells => f(off - self.length),
                    _ => f(off),
                }
            })
            .collect()
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn ensure_len(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n_cells {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Anything that can be read as a cellwise density on a grid. Rate
/// functionals and solvers operate on this view.
pub trait GridDensity: Clone + Sized {
    fn grid(&self) -> &Grid;
    fn density(&self) -> Vec<f64>;
    fn from_density(grid: Grid, density: Vec<f64>) -> Result<Self>;

    /// `∫ density`.
    fn total(&self) -> f64 {
        compensated_sum(self.density()) * self.grid().dx()
    }
}

/// Nonnegative mass vector on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    grid: Grid,
    weights: Vec<f64>,
}

impl GridMeasure {
    pub fn new(grid: Grid, weights: Vec<f64>) -> Result<Self> {
        grid.ensure_len(&weights)?;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(invalid(format!("non-finite weight at cell {i}")));
            }
            if w < -NEGATIVE_TOLERANCE {
                return Err(invalid(format!("negative weight {w:e} at cell {i}")));
            }
        }
        Ok(Self { grid, weights })
    }

    pub fn uniform(grid: Grid) -> Self {
        let w = 1.0 / grid.n_cells() as f64;
        Self {
            grid,
            weights: vec![w; grid.n_cells()],
        }
    }

    /// All mass in cell `i`.
    pub fn point_mass(grid: Grid, i: usize) -> Result<Self> {
        if i >= grid.n_cells() {
            return Err(Error::OutOfDomain(i as f64));
        }
        let mut weights = vec![0.0; grid.n_cells()];
        weights[i] = 1.0;
        Ok(Self { grid, weights })
    }

    /// Builds a measure from density values at cell centers (`weight = f dx`).
    pub fn from_density_values(grid: Grid, density: &[f64]) -> Result<Self> {
        let dx = grid.dx();
        Self::new(grid, density.iter().map(|f| f * dx).collect())
    }

    /// Samples `f` at cell centers and rescales to unit mass.
    pub fn from_fn_normalized<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let raw = Self::from_density_values(grid, &grid.sample(f))?;
        raw.normalized()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn is_probability(&self) -> bool {
        (self.mass() - 1.0).abs() <= PROBABILITY_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        Ok(Self {
            grid: self.grid,
            weights: self.weights.iter().map(|w| w / m).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid, self.weights.iter().map(|w| w * factor).collect())
    }

    /// Cellwise `(1 - t) self + t other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Self::new(
            self.grid,
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    /// Indices of cells carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .collect()
    }

    pub fn mean_position(&self) -> f64 {
        compensated_sum(
            self.weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * self.grid.center(i)),
        ) / self.mass()
    }

    /// `Σ |a_i - b_i|`, the L¹ distance of the two measures.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(compensated_sum(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs()),
        ))
    }
}

impl GridDensity for GridMeasure {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn density(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        self.weights.iter().map(|w| w / dx).collect()
    }

    fn from_density(grid: Grid, density: Vec<f64>) -> Result<Self> {
        Self::from_density_values(grid, &density)
    }
}

/// Grid function with values in `[0, 1]`: the exclusion-process density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationProfile {
    grid: Grid,
    values: Vec<f64>,
}

impl OccupationProfile {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.ensure_len(&values)?;
        for (i, &v) in values.iter().enumerate() {
            if !(-NEGATIVE_TOLERANCE..=1.0 + NEGATIVE_TOLERANCE).contains(&v) {
                return Err(invalid(format!("occupation {v} at cell {i} outside [0,1]")));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl GridDensity for OccupationProfile {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn density(&self) -> Vec<f64> {
        self.values.clone()
    }

    fn from_density(grid: Grid, density: Vec<f64>) -> Result<Self> {
        Self::new(grid, density)
    }
}

/// Particle positions together with the domain they live in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    positions: Vec<f64>,
    domain: Grid,
}

impl ParticleCloud {
    pub fn new(positions: Vec<f64>, domain: Grid) -> Result<Self> {
        if let Some(&x) = positions.iter().find(|&&x| domain.cell_of(x).is_none()) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(Self { positions, domain })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn domain(&self) -> &Grid {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Bins a cloud into cell masses `#{particles in cell} / n`.
pub fn empirical_measure(cloud: &ParticleCloud, grid: &Grid) -> Result<GridMeasure> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut counts = vec![0usize; grid.n_cells()];
    for &x in cloud.positions() {
        let i = grid.cell_of(x).ok_or(Error::OutOfDomain(x))?;
        counts[i] += 1;
    }
    let n = cloud.len() as f64;
    GridMeasure::new(*grid, counts.into_iter().map(|c| c as f64 / n).collect())
}

/// `H(ρ|μ) = Σ ρ_i log(ρ_i / μ_i)`; `+∞` when ρ charges a cell μ does not.
pub fn relative_entropy(rho: &GridMeasure, mu: &GridMeasure) -> Result<f64> {
    rho.grid.ensure_same(&mu.grid)?;
    relative_entropy_vectors(&rho.weights, &mu.weights)
}

/// Relative entropy of two weight vectors of equal length.
pub fn relative_entropy_vectors(rho: &[f64], mu: &[f64]) -> Result<f64> {
    if rho.len() != mu.len() {
        return Err(Error::GridMismatch);
    }
    let mut terms = Vec::with_capacity(rho.len());
    for (&r, &m) in rho.iter().zip(mu) {
        if r <= 0.0 {
            continue;
        }
        if m <= 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(r * (r / m).ln());
    }
    Ok(compensated_sum(terms))
}

/// `Ent(ρ) = Σ f_i log f_i Δx` with `f = weights / Δx`.
pub fn boltzmann_entropy(rho: &GridMeasure) -> f64 {
    entropy_of_density(&rho.grid, &rho.density())
}

pub(crate) fn entropy_of_density(grid: &Grid, f: &[f64]) -> f64 {
    compensated_sum(f.iter().map(|&v| xlogx(v))) * grid.dx()
}

/// `Σ [ρ log ρ + (1-ρ) log(1-ρ)] Δx`.
pub fn mixing_entropy(rho: &OccupationProfile) -> f64 {
    mixing_entropy_of(&rho.grid, &rho.values)
}

fn mixing_entropy_of(grid: &Grid, v: &[f64]) -> f64 {
    compensated_sum(v.iter().map(|&r| xlogx(r) + xlogx(1.0 - r))) * grid.dx()
}

/// Grid convolution `(ρ∗Φ)_i = Σ_j w_j Φ(x_i - x_j)` of cell masses with an
/// offset kernel (circular on the torus, truncated on the interval).
pub fn convolve(grid: &Grid, weights: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    (0..n)
        .map(|i| {
            compensated_sum((0..n).map(|j| {
                let k = match grid.topology() {
                    Topology::Torus => (i + n - j) % n,
                    Topology::Interval => i.abs_diff(j),
                };
                weights[j] * kernel[k]
            }))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    Entropy,
    MixingEntropy,
    FreeEnergy,
}

/// Driving functional: entropy, mixing entropy, or the free energy
/// `Ent + (1/kT) ∫ [ρΨ + ½ ρ(ρ∗Φ)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    kind: EnergyKind,
    background: Option<Vec<f64>>,
    interaction: Option<Vec<f64>>,
    kt: f64,
}

impl EnergySpec {
    pub fn entropy() -> Self {
        Self {
            kind: EnergyKind::Entropy,
            background: None,
            interaction: None,
            kt: 1.0,
        }
    }

    pub fn mixing_entropy() -> Self {
        Self {
            kind: EnergyKind::MixingEntropy,
            background: None,
            interaction: None,
            kt: 1.0,
        }
    }

    /// Free energy on `grid`. `psi` is sampled at cell centers and `phi` at
    /// offsets (see [`Grid::sample_kernel`]); either may be omitted.
    pub fn free_energy(
        grid: &Grid,
        psi: Option<Vec<f64>>,
        phi: Option<Vec<f64>>,
        kt: f64,
    ) -> Result<Self> {
        if !(kt.is_finite() && kt > 0.0) {
            return Err(invalid(format!("kT must be positive, got {kt}")));
        }
        if let Some(p) = &psi {
            grid.ensure_len(p)?;
        }
        if let Some(k) = &phi {
            grid.ensure_len(k)?;
            if grid.topology() == Topology::Torus {
                let n = k.len();
                for j in 1..n {
                    if (k[j] - k[n - j]).abs() > 1e-12 {
                        return Err(invalid(format!(
                            "interaction kernel is not even at offset {j}"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            kind: EnergyKind::FreeEnergy,
            background: psi,
            interaction: phi,
            kt,
        })
    }

    pub fn kind(&self) -> EnergyKind {
        self.kind
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    pub fn background(&self) -> Option<&[f64]> {
        self.background.as_deref()
    }

    pub fn interaction(&self) -> Option<&[f64]> {
        self.interaction.as_deref()
    }

    /// Same functional at another temperature.
    pub fn with_kt(&self, kt: f64) -> Result<Self> {
        if !(kt.is_finite() && kt > 0.0) {
            return Err(invalid(format!("kT must be positive, got {kt}")));
        }
        Ok(Self { kt, ..self.clone() })
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if let Some(p) = &self.background {
            grid.ensure_len(p)?;
        }
        if let Some(k) = &self.interaction {
            grid.ensure_len(k)?;
        }
        Ok(())
    }

    /// `Σ w_i Ψ_i + ½ Σ w_i (w∗Φ)_i`, before division by kT.
    fn potential_part(&self, grid: &Grid, weights: &[f64]) -> f64 {
        let mut total = 0.0;
        if let Some(psi) = &self.background {
            total += compensated_sum(weights.iter().zip(psi).map(|(w, p)| w * p));
        }
        if let Some(phi) = &self.interaction {
            let conv = convolve(grid, weights, phi);
            total += 0.5 * compensated_sum(weights.iter().zip(&conv).map(|(w, c)| w * c));
        }
        total
    }

    /// Value of the functional at density `f` on `grid`.
    pub fn value_at(&self, grid: &Grid, f: &[f64]) -> Result<f64> {
        grid.ensure_len(f)?;
        self.check_grid(grid)?;
        Ok(match self.kind {
            EnergyKind::Entropy => entropy_of_density(grid, f),
            EnergyKind::MixingEntropy => mixing_entropy_of(grid, f),
            EnergyKind::FreeEnergy => {
                let dx = grid.dx();
                let weights: Vec<f64> = f.iter().map(|v| v * dx).collect();
                entropy_of_density(grid, f) + self.potential_part(grid, &weights) / self.kt
            }
        })
    }

    /// Variational derivative at density `f`, evaluated in closed form.
    pub fn derivative_at(&self, grid: &Grid, f: &[f64]) -> Result<Vec<f64>> {
        grid.ensure_len(f)?;
        self.check_grid(grid)?;
        match self.kind {
            EnergyKind::Entropy | EnergyKind::FreeEnergy => {
                if let Some(i) = f.iter().position(|&v| v <= 0.0) {
                    return Err(Error::VacuumDerivative(i));
                }
                let mut g: Vec<f64> = f.iter().map(|v| v.ln() + 1.0).collect();
                if self.kind == EnergyKind::FreeEnergy {
                    let dx = grid.dx();
                    if let Some(psi) = &self.background {
                        for (gi, p) in g.iter_mut().zip(psi) {
                            *gi += p / self.kt;
                        }
                    }
                    if let Some(phi) = &self.interaction {
                        let weights: Vec<f64> = f.iter().map(|v| v * dx).collect();
                        for (gi, c) in g.iter_mut().zip(convolve(grid, &weights, phi)) {
                            *gi += c / self.kt;
                        }
                    }
                }
                Ok(g)
            }
            EnergyKind::MixingEntropy => f
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    if r <= 0.0 || r >= 1.0 {
                        Err(Error::SaturatedDerivative(i))
                    } else {
                        Ok((r / (1.0 - r)).ln())
                    }
                })
                .collect(),
        }
    }

    pub fn value<S: GridDensity>(&self, rho: &S) -> Result<f64> {
        self.value_at(rho.grid(), &rho.density())
    }
}

/// `Ent(ρ) + (1/kT)[Σ ρ_iΨ_i + ½ Σ ρ_i (ρ∗Φ)_i]`.
pub fn free_energy(rho: &GridMeasure, spec: &EnergySpec) -> Result<f64> {
    if spec.kind != EnergyKind::FreeEnergy {
        return Err(invalid("free_energy needs a free-energy spec"));
    }
    spec.value(rho)
}

/// `δE/δρ` as a grid function.
pub fn variational_derivative<S: GridDensity>(spec: &EnergySpec, rho: &S) -> Result<Vec<f64>> {
    spec.derivative_at(rho.grid(), &rho.density())
}
