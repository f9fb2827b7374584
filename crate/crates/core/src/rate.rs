//! Pathwise rate functionals: the gradient-flow defect, its three-term
//! (chain-rule) form, the generalized-flow functional for scalar paths, and
//! the cross-term test that separates reversible from non-reversible
//! drift-diffusions.
//!
//! Time is discretized with the rectangle rule at midpoint slices
//! `ρ_{k+½} = (ρ_k + ρ_{k+1}) / 2`; mobility and energy derivative are
//! evaluated there.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::{convolve, EnergySpec, Grid, GridDensity};
use crate::numerics::CompensatedSum;
use crate::path::MeasurePath;
use crate::scalar::{DissipationPair, ScalarEnergy, ScalarPath};
use crate::transport::{
    div_mobility_grad, dual_inner, dual_norm_sq, primal_norm_sq, FaceMean, MobilityField,
};

/// Mobility law `D(ρ)` behind the Onsager operator `M_ρ ξ = -div(D(ρ) ∇ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MobilityKind {
    /// `D = ρ`.
    Wasserstein,
    /// `D = ρ(1 - ρ)`.
    Ssep,
    /// `D = ρ σ²`.
    Scaled { sigma2: f64 },
}

impl MobilityKind {
    fn cell_values(self, f: &[f64]) -> Result<Vec<f64>> {
        f.iter()
            .enumerate()
            .map(|(i, &r)| match self {
                Self::Wasserstein if r > 0.0 => Ok(r),
                Self::Scaled { sigma2 } if r > 0.0 && sigma2 > 0.0 => Ok(r * sigma2),
                Self::Ssep if r > 0.0 && r < 1.0 => Ok(r * (1.0 - r)),
                _ => Err(Error::MobilityVanishes(i)),
            })
            .collect()
    }

    /// Face mobility at density `f` (arithmetic face means).
    pub fn field(self, grid: &Grid, f: &[f64]) -> Result<MobilityField> {
        MobilityField::from_cell_values(*grid, &self.cell_values(f)?)
    }
}

/// `M_ρ ξ = -div(D(ρ) ∇ξ)` with the stencil of the transport norms.
pub fn onsager_apply<S: GridDensity>(xi: &[f64], rho: &S, kind: MobilityKind) -> Result<Vec<f64>> {
    let d = kind.field(rho.grid(), &rho.density())?;
    Ok(div_mobility_grad(xi, &d)?.into_iter().map(|v| -v).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementMetadata {
    pub n_cells: usize,
    pub intervals: usize,
    pub dx: f64,
    pub dt: f64,
}

impl RefinementMetadata {
    fn of<S: GridDensity>(path: &MeasurePath<S>) -> Self {
        Self {
            n_cells: path.grid().n_cells(),
            intervals: path.intervals(),
            dx: path.grid().dx(),
            dt: path.dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub value: f64,
    pub per_interval: Vec<f64>,
    pub refinement_metadata: RefinementMetadata,
}

impl RateReport {
    fn from_terms(offset: f64, per_interval: Vec<f64>, meta: RefinementMetadata) -> Self {
        let mut acc = CompensatedSum::new();
        acc.add(offset);
        for &t in &per_interval {
            acc.add(t);
        }
        Self {
            value: acc.value(),
            per_interval,
            refinement_metadata: meta,
        }
    }
}

/// Velocity, midpoint force and midpoint mobility on each interval.
struct IntervalData {
    velocity: Vec<f64>,
    force: Vec<f64>,
    mobility: MobilityField,
}

fn interval_data<S: GridDensity>(
    path: &MeasurePath<S>,
    spec: &EnergySpec,
    kind: MobilityKind,
) -> Result<Vec<IntervalData>> {
    if path.intervals() == 0 {
        return Err(invalid("rate functionals need at least one time interval"));
    }
    let grid = *path.grid();
    for slice in path.slices() {
        kind.cell_values(&slice.density())?;
    }
    path.velocities()
        .into_iter()
        .zip(path.midpoint_densities())
        .map(|(velocity, mid)| {
            let force = spec.derivative_at(&grid, &mid)?;
            let mobility = kind.field(&grid, &mid)?;
            Ok(IntervalData {
                velocity,
                force,
                mobility,
            })
        })
        .collect()
}

/// `½ Σ_k ‖∂_t ρ + M_{ρ_{k+½}} δE/δρ(ρ_{k+½})‖²_{D,*} Δt`.
pub fn gradflow_defect<S: GridDensity>(
    path: &MeasurePath<S>,
    spec: &EnergySpec,
    kind: MobilityKind,
) -> Result<RateReport> {
    let dt = path.dt();
    let per_interval = interval_data(path, spec, kind)?
        .into_iter()
        .map(|d| {
            let pushed = div_mobility_grad(&d.force, &d.mobility)?;
            let residual: Vec<f64> = d.velocity.iter().zip(&pushed).map(|(s, m)| s - m).collect();
            Ok(0.5 * dual_norm_sq(&residual, &d.mobility)? * dt)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport::from_terms(
        0.0,
        per_interval,
        RefinementMetadata::of(path),
    ))
}

/// `E(T) - E(0) + ½ Σ_k [‖∂_t ρ‖²_{D,*} + ‖δE/δρ‖²_D] Δt`. The energy
/// difference is telescoped into the per-interval entries.
pub fn rate_quadratic<S: GridDensity>(
    path: &MeasurePath<S>,
    spec: &EnergySpec,
    kind: MobilityKind,
) -> Result<RateReport> {
    let dt = path.dt();
    let grid = *path.grid();
    let energies = path
        .slices()
        .iter()
        .map(|s| spec.value_at(&grid, &s.density()))
        .collect::<Result<Vec<_>>>()?;
    let per_interval = interval_data(path, spec, kind)?
        .into_iter()
        .zip(energies.windows(2))
        .map(|(d, e)| {
            let kinetic =
                dual_norm_sq(&d.velocity, &d.mobility)? + primal_norm_sq(&d.force, &d.mobility)?;
            Ok((e[1] - e[0]) + 0.5 * kinetic * dt)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport::from_terms(
        0.0,
        per_interval,
        RefinementMetadata::of(path),
    ))
}

/// `E(T) - E(0) + Σ_k [ψ*(v_k) + ψ(-E'(u_k))] Δt` at midpoint states, after
/// checking the pair's closed-form conjugate on states along the path.
pub fn rate_psi(path: &ScalarPath, energy: &ScalarEnergy, pair: DissipationPair) -> Result<f64> {
    if path.values().len() < 2 {
        return Err(invalid("rate_psi needs at least one time interval"));
    }
    let samples: Vec<(f64, f64)> = path
        .midpoints()
        .step_by((path.values().len() / 8).max(1))
        .flat_map(|(u, v)| [(u, v), (u, 0.0), (u, 1.0)])
        .collect();
    pair.check_legendre(&samples, 1e-8)?;
    let dt = path.dt();
    let mut acc = CompensatedSum::new();
    acc.add(energy.value(path.last()) - energy.value(path.first()));
    for (u, v) in path.midpoints() {
        acc.add((pair.psi_star(u, v)? + pair.psi(u, -energy.derivative(u))?) * dt);
    }
    Ok(acc.value())
}

/// Outcome of [`fdt_gap`] on a pair of paths with shared endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdtReport {
    /// `Σ_k (∂_t ρ, -div σ²∇ρ - div ρA∇[Ψ + ρ∗Φ])_{D,*} Δt` on each path.
    pub cross_a: f64,
    pub cross_b: f64,
    /// `|cross_a - cross_b|`.
    pub discrepancy: f64,
    /// `F(ρ_T) - F(ρ_0)` for the free energy with `kT = σ²/A`.
    pub free_energy_change: f64,
    /// `|I - J|` on each path, with `J` the three-term form built from `F`.
    pub form_gap_a: f64,
    pub form_gap_b: f64,
}

/// Per-interval pieces for the drift-diffusion with `D(ρ) = ρσ²`. Faces use
/// logarithmic means so that `D_f ∇(ln ρ)_f = σ² ∇ρ_f` holds exactly and the
/// drift flux `ρA∇W` uses the same face density `D_f / σ²`.
struct FdtTerms {
    cross: f64,
    rate_i: f64,
    rate_j_kinetic: f64,
}

fn fdt_terms<S: GridDensity>(
    path: &MeasurePath<S>,
    psi: &[f64],
    phi: &[f64],
    a: f64,
    sigma2: f64,
) -> Result<FdtTerms> {
    let grid = *path.grid();
    let dt = path.dt();
    let dx = grid.dx();
    let kt = sigma2 / a;
    let (mut cross, mut rate_i, mut kinetic) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for slice in path.slices() {
        MobilityKind::Wasserstein.cell_values(&slice.density())?;
    }
    for (s, mid) in path.velocities().into_iter().zip(path.midpoint_densities()) {
        let cells: Vec<f64> = mid.iter().map(|r| r * sigma2).collect();
        let d = MobilityField::from_cell_values_with(grid, &cells, FaceMean::Logarithmic)?;
        let weights: Vec<f64> = mid.iter().map(|r| r * dx).collect();
        let w: Vec<f64> = psi
            .iter()
            .zip(convolve(&grid, &weights, phi))
            .map(|(p, c)| p + c)
            .collect();
        // div σ²∇ρ + div ρA∇W, the right-hand side of the limit equation
        let log_rho: Vec<f64> = mid.iter().map(|r| r.ln()).collect();
        let diffusion = div_mobility_grad(&log_rho, &d)?;
        let drift = div_mobility_grad(&w, &d.scaled(a / sigma2)?)?;
        let rhs: Vec<f64> = diffusion.iter().zip(&drift).map(|(x, y)| x + y).collect();
        let residual: Vec<f64> = s.iter().zip(&rhs).map(|(v, r)| v - r).collect();
        let neg_rhs: Vec<f64> = rhs.iter().map(|r| -r).collect();
        cross.add(dual_inner(&s, &neg_rhs, &d)? * dt);
        rate_i.add(0.5 * dual_norm_sq(&residual, &d)? * dt);
        // δF/δρ = ln ρ + 1 + W / kT
        let force: Vec<f64> = log_rho
            .iter()
            .zip(&w)
            .map(|(l, wi)| l + 1.0 + wi / kt)
            .collect();
        kinetic.add(0.5 * (dual_norm_sq(&s, &d)? + primal_norm_sq(&force, &d)?) * dt);
    }
    Ok(FdtTerms {
        cross: cross.value(),
        rate_i: rate_i.value(),
        rate_j_kinetic: kinetic.value(),
    })
}

/// Compares the cross term of the drift-diffusion rate functional (mobility
/// `D = ρσ²`) on two paths with the same endpoints, and measures how far the
/// rate functional is from the three-term form with the free energy at
/// `kT = σ²/A`.
pub fn fdt_gap<S: GridDensity>(
    path_a: &MeasurePath<S>,
    path_b: &MeasurePath<S>,
    psi: &[f64],
    phi: &[f64],
    a: f64,
    sigma2: f64,
) -> Result<FdtReport> {
    if !(a > 0.0 && sigma2 > 0.0) {
        return Err(invalid("A and σ² must be positive"));
    }
    let grid = *path_a.grid();
    if *path_b.grid() != grid {
        return Err(Error::GridMismatch);
    }
    grid.ensure_len(psi)?;
    grid.ensure_len(phi)?;
    let endpoints_match = |x: &S, y: &S| {
        x.density()
            .iter()
            .zip(&y.density())
            .all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs()))
    };
    if !endpoints_match(path_a.first(), path_b.first())
        || !endpoints_match(path_a.last(), path_b.last())
    {
        return Err(invalid("the two paths must share both endpoints"));
    }
    let has_interaction = phi.iter().any(|&v| v != 0.0);
    let spec = EnergySpec::free_energy(
        &grid,
        Some(psi.to_vec()),
        has_interaction.then(|| phi.to_vec()),
        sigma2 / a,
    )?;
    let free_energy_change = spec.value_at(&grid, &path_a.last().density())?
        - spec.value_at(&grid, &path_a.first().density())?;
    let ta = fdt_terms(path_a, psi, phi, a, sigma2)?;
    let tb = fdt_terms(path_b, psi, phi, a, sigma2)?;
    let form_gap = |t: &FdtTerms| (t.rate_i - (free_energy_change + t.rate_j_kinetic)).abs();
    Ok(FdtReport {
        cross_a: ta.cross,
        cross_b: tb.cross,
        discrepancy: (ta.cross - tb.cross).abs(),
        free_energy_change,
        form_gap_a: form_gap(&ta),
        form_gap_b: form_gap(&tb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{GridMeasure, OccupationProfile};
    use crate::pde::{heat_solve, PdeConfig};
    use crate::scalar::generalized_flow_solve;
    use std::f64::consts::PI;

    fn heat_path(n: usize, k: usize) -> MeasurePath<GridMeasure> {
        let g = Grid::unit_torus(n);
        let rho0 =
            GridMeasure::from_fn_normalized(g, |x| 1.0 + 0.5 * (2.0 * PI * x).cos()).unwrap();
        let t = 0.02;
        heat_solve(&rho0, &PdeConfig::new(g, t / k as f64, t)).unwrap()
    }

    #[test]
    fn onsager_examples() {
        let g = Grid::unit_torus(128);
        let rho = GridMeasure::uniform(g);
        let zero = onsager_apply(&vec![3.0; 128], &rho, MobilityKind::Wasserstein).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-12));
        let xi = g.sample(|x| (2.0 * PI * x).sin());
        let m = onsager_apply(&xi, &rho, MobilityKind::Wasserstein).unwrap();
        let err = m
            .iter()
            .zip(&xi)
            .map(|(a, b)| (a - 4.0 * PI * PI * b).abs())
            .fold(0.0, f64::max);
        assert!(err < 4.0 * PI * PI * 2e-3, "{err}");
        let bumpy = GridMeasure::from_fn_normalized(g, |x| 2.0 + x.sin()).unwrap();
        let zeta = g.sample(|x| (4.0 * PI * x).cos() + x);
        let dx = g.dx();
        let lhs: f64 = xi
            .iter()
            .zip(onsager_apply(&zeta, &bumpy, MobilityKind::Wasserstein).unwrap())
            .map(|(a, b)| a * b * dx)
            .sum();
        let rhs: f64 = zeta
            .iter()
            .zip(onsager_apply(&xi, &bumpy, MobilityKind::Wasserstein).unwrap())
            .map(|(a, b)| a * b * dx)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn stationary_path_has_zero_rate() {
        let g = Grid::unit_torus(32);
        let path = MeasurePath::constant(GridMeasure::uniform(g), 1.0, 4).unwrap();
        let spec = EnergySpec::entropy();
        assert!(
            gradflow_defect(&path, &spec, MobilityKind::Wasserstein)
                .unwrap()
                .value
                .abs()
                < 1e-20
        );
        assert!(
            rate_quadratic(&path, &spec, MobilityKind::Wasserstein)
                .unwrap()
                .value
                .abs()
                < 1e-20
        );
    }

    #[test]
    fn heat_defect_refines_to_zero_and_reversal_does_not() {
        let spec = EnergySpec::entropy();
        let coarse = gradflow_defect(&heat_path(32, 16), &spec, MobilityKind::Wasserstein)
            .unwrap()
            .value;
        let fine = gradflow_defect(&heat_path(64, 32), &spec, MobilityKind::Wasserstein)
            .unwrap()
            .value;
        assert!(fine * 2.0 <= coarse, "{coarse} {fine}");
        let back = gradflow_defect(
            &heat_path(64, 32).reversed(),
            &spec,
            MobilityKind::Wasserstein,
        )
        .unwrap()
        .value;
        assert!(back > 10.0 * fine && back > 1e-3);
    }

    #[test]
    fn chain_rule_identity_on_heat_path() {
        let spec = EnergySpec::entropy();
        let path = heat_path(64, 32);
        let a = rate_quadratic(&path, &spec, MobilityKind::Wasserstein).unwrap();
        let b = gradflow_defect(&path, &spec, MobilityKind::Wasserstein).unwrap();
        assert!((a.value - b.value).abs() < 1e-6 * (1.0 + a.value));
        assert_eq!(a.per_interval.len(), 32);
        assert_eq!(a.refinement_metadata.n_cells, 64);
    }

    #[test]
    fn ssep_defect() {
        let g = Grid::unit_torus(64);
        let rho0 = OccupationProfile::from_fn(g, |x| 0.5 + 0.3 * (2.0 * PI * x).sin()).unwrap();
        let path = heat_solve(&rho0, &PdeConfig::new(g, 1e-3, 0.02)).unwrap();
        let spec = EnergySpec::mixing_entropy();
        let defect = gradflow_defect(&path, &spec, MobilityKind::Ssep)
            .unwrap()
            .value;
        let back = gradflow_defect(&path.reversed(), &spec, MobilityKind::Ssep)
            .unwrap()
            .value;
        assert!(defect < 1e-5 && back > 1e-2, "{defect} {back}");
    }

    #[test]
    fn vacuum_is_rejected() {
        let g = Grid::unit_interval(4);
        let m = GridMeasure::new(g, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let path = MeasurePath::constant(m, 1.0, 2).unwrap();
        assert!(matches!(
            gradflow_defect(&path, &EnergySpec::entropy(), MobilityKind::Wasserstein),
            Err(Error::MobilityVanishes(2))
        ));
    }

    #[test]
    fn rate_psi_on_generalized_flows() {
        let e = ScalarEnergy::new(|u| 0.5 * (u - 1.0).powi(2), |u| u - 1.0);
        let pair = DissipationPair::birth_death(1.0).unwrap();
        let path = generalized_flow_solve(&e, pair, 0.0, 1.0, 1e-4).unwrap();
        assert!(rate_psi(&path, &e, pair).unwrap().abs() < 1e-6);
        let sf = ScalarEnergy::spin_flip();
        let path = generalized_flow_solve(&sf, DissipationPair::SpinFlip, 0.8, 0.5, 1e-3).unwrap();
        assert!(
            rate_psi(&path, &sf, DissipationPair::SpinFlip)
                .unwrap()
                .abs()
                < 1e-6
        );
        assert!(rate_psi(&path.reversed(), &sf, DissipationPair::SpinFlip).unwrap() > 0.1);
        let rest = ScalarPath::from_values(0.0, 0.1, vec![1.0; 11]).unwrap();
        assert!(
            rate_psi(&rest, &e, DissipationPair::Quadratic)
                .unwrap()
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn quadratic_pair_matches_direct_formula() {
        let e = ScalarEnergy::quadratic();
        let path =
            ScalarPath::from_values(0.0, 0.1, (0..=10).map(|k| (k as f64 * 0.1).sin()).collect())
                .unwrap();
        let direct: f64 = e.value(path.last()) - e.value(path.first())
            + path
                .midpoints()
                .map(|(u, v)| 0.5 * (v * v + u * u) * 0.1)
                .sum::<f64>();
        assert!((rate_psi(&path, &e, DissipationPair::Quadratic).unwrap() - direct).abs() < 1e-14);
    }

    fn two_paths(n: usize, k: usize) -> (MeasurePath<GridMeasure>, MeasurePath<GridMeasure>) {
        let g = Grid::unit_torus(n);
        let r0 = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x).cos());
        let r1 = g.sample(|x| 1.0 + 0.2 * (4.0 * PI * x).sin());
        let bump = g.sample(|x| 0.2 * (6.0 * PI * x).cos());
        let build = |wiggle: f64| {
            let slices = (0..=k)
                .map(|j| {
                    let t = j as f64 / k as f64;
                    let f: Vec<f64> = (0..n)
                        .map(|i| (1.0 - t) * r0[i] + t * r1[i] + wiggle * t * (1.0 - t) * bump[i])
                        .collect();
                    GridMeasure::from_density_values(g, &f).unwrap()
                })
                .collect();
            MeasurePath::from_slices(0.0, 0.1 / k as f64, slices).unwrap()
        };
        (build(0.0), build(4.0))
    }

    #[test]
    fn fdt_cross_term_is_exact_without_potential() {
        let (a, b) = two_paths(64, 32);
        let zero = vec![0.0; 64];
        let r = fdt_gap(&a, &b, &zero, &zero, 1.0, 2.0).unwrap();
        assert!(r.discrepancy < 1e-6, "{r:?}");
    }

    #[test]
    fn fdt_cross_term_with_matched_noise() {
        let (a, b) = two_paths(64, 32);
        let psi = Grid::unit_torus(64).sample(|x| (2.0 * PI * x).cos());
        let zero = vec![0.0; 64];
        let r = fdt_gap(&a, &b, &psi, &zero, 1.0, 1.0).unwrap();
        assert!(r.discrepancy < 1e-6, "{r:?}");
        assert!((r.cross_a - r.free_energy_change).abs() < 1e-4, "{r:?}");
        assert!(r.form_gap_a < 1e-4 && r.form_gap_b < 1e-4, "{r:?}");
    }
}
