use std::f64::consts::PI;

use rand::Rng;

use ldgf_core::measures::{EnergySpec, Grid, GridDensity, GridMeasure, OccupationProfile};
use ldgf_core::pde::{heat_solve, PdeConfig};
use ldgf_core::rate::{fdt_gap, gradflow_defect, rate_quadratic, MobilityKind};
use ldgf_core::stochastic::rng;
use ldgf_core::MeasurePath;

use crate::config::{param, ParamSpec, Params};
use crate::error::CliError;
use crate::report::{Check, Outcome, Table};

pub const RATE_PARAMS: &[ParamSpec] = &[
    param("cells", "32", "coarsest torus grid"),
    param("intervals", "16", "coarsest number of time intervals"),
    param("refinements", "3", "simultaneous halvings of dx and dt"),
    param("t_end", "0.02", "length of the solution path"),
    param(
        "min_ratio",
        "2.0",
        "required defect reduction per refinement",
    ),
    param(
        "reversal_factor",
        "10.0",
        "reversed path must exceed the finest forward defect by this factor",
    ),
    param(
        "paths",
        "20",
        "random synthetic paths for the chain-rule identity",
    ),
    param("chain_cells", "256", "grid of the synthetic paths"),
    param(
        "chain_intervals",
        "128",
        "time intervals of the synthetic paths",
    ),
    param(
        "chain_tol",
        "1e-4",
        "allowed |rate - defect| / (1 + defect)",
    ),
    param(
        "chain_ratio",
        "2.0",
        "required residual reduction when the synthetic paths are refined",
    ),
];

/// Defects along a refinement ladder of solution paths, and of the reversed finest path.
fn defect_ladder<S: GridDensity + Clone>(
    out: &mut Outcome,
    p: &Params,
    label: &str,
    spec: &EnergySpec,
    kind: MobilityKind,
    initial: impl Fn(Grid) -> Result<S, CliError>,
) -> Result<(), CliError> {
    let (n0, k0, t_end) = (
        p.usize("cells")?,
        p.usize("intervals")?,
        p.positive("t_end")?,
    );
    let levels = p.usize("refinements")?;
    if n0 < 4 || k0 == 0 || levels == 0 {
        return Err(CliError::Config(
            "need cells >= 4, intervals >= 1, refinements >= 1".into(),
        ));
    }
    let mut table = Table::new(
        &format!("{label}_defects"),
        &["cells", "intervals", "forward", "reversed"],
    );
    let mut forward = Vec::new();
    let mut reversed = 0.0;
    for level in 0..=levels {
        let (n, k) = (n0 << level, k0 << level);
        let grid = Grid::unit_torus(n);
        let path = heat_solve(
            &initial(grid)?,
            &PdeConfig::new(grid, t_end / k as f64, t_end),
        )?;
        let f = gradflow_defect(&path, spec, kind)?.value;
        reversed = gradflow_defect(&path.reversed(), spec, kind)?.value;
        table.push(vec![n as f64, k as f64, f, reversed]);
        forward.push(f);
    }
    let ratio = forward
        .windows(2)
        .map(|w| w[0] / w[1])
        .fold(f64::INFINITY, f64::min);
    let finest = *forward.last().expect("at least two levels");
    out.metric(&format!("{label}_finest_defect"), finest);
    out.metric(&format!("{label}_reversed_defect"), reversed);
    out.check(Check::at_least(
        &format!("{label}_defect_shrinks"),
        ratio,
        p.positive("min_ratio")?,
    ));
    out.check(Check::at_least(
        &format!("{label}_reversal_separates"),
        reversed / finest,
        p.positive("reversal_factor")?,
    ));
    out.tables.push(table);
    Ok(())
}

/// Smooth positive density path `1 + Σ_k b_k cos(ω_k t + c_k) cos(2πkx + φ_k)` on `[0, 0.1]`.
struct SyntheticPath {
    modes: Vec<[f64; 4]>,
}

impl SyntheticPath {
    fn random(rng: &mut impl Rng) -> Self {
        let modes = (0..3)
            .map(|_| {
                [
                    rng.gen_range(-0.15..0.15),
                    rng.gen_range(1.0..6.0),
                    rng.gen_range(0.0..2.0 * PI),
                    rng.gen_range(0.0..2.0 * PI),
                ]
            })
            .collect();
        Self { modes }
    }

    fn sample(&self, n: usize, k: usize) -> Result<MeasurePath<GridMeasure>, CliError> {
        let grid = Grid::unit_torus(n);
        let t_end = 0.1;
        let slices = (0..=k)
            .map(|j| {
                let t = t_end * j as f64 / k as f64;
                let f = grid.sample(|x| {
                    1.0 + self
                        .modes
                        .iter()
                        .enumerate()
                        .map(|(m, [b, w, c, phi])| {
                            b * (w * t + c).cos() * (2.0 * PI * (m + 1) as f64 * x + phi).cos()
                        })
                        .sum::<f64>()
                });
                GridMeasure::from_density_values(grid, &f)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MeasurePath::from_slices(0.0, t_end / k as f64, slices)?)
    }
}

pub fn rate_zero_on_solution(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    defect_ladder(
        &mut out,
        p,
        "wasserstein",
        &EnergySpec::entropy(),
        MobilityKind::Wasserstein,
        |g| {
            Ok(GridMeasure::from_fn_normalized(g, |x| {
                1.0 + 0.5 * (2.0 * PI * x).cos()
            })?)
        },
    )?;
    defect_ladder(
        &mut out,
        p,
        "ssep",
        &EnergySpec::mixing_entropy(),
        MobilityKind::Ssep,
        |g| {
            Ok(OccupationProfile::from_fn(g, |x| {
                0.5 + 0.3 * (2.0 * PI * x).sin()
            })?)
        },
    )?;

    let (n, k) = (p.usize("chain_cells")?, p.usize("chain_intervals")?);
    if n < 8 || k < 2 {
        return Err(CliError::Config(
            "need chain_cells >= 8 and chain_intervals >= 2".into(),
        ));
    }
    let mut rng = rng(seed);
    let mut table = Table::new(
        "chain_rule",
        &["path", "defect", "rate", "residual", "coarse_residual"],
    );
    let (mut worst, mut weakest) = (0.0f64, f64::INFINITY);
    for i in 0..p.usize("paths")? {
        let synthetic = SyntheticPath::random(&mut rng);
        let residual_at = |n: usize, k: usize| -> Result<(f64, f64, f64), CliError> {
            let path = synthetic.sample(n, k)?;
            let psi = path.grid().sample(|x| 0.5 * (2.0 * PI * x).cos());
            let spec = EnergySpec::free_energy(path.grid(), Some(psi), None, 1.0)?;
            let d = gradflow_defect(&path, &spec, MobilityKind::Wasserstein)?.value;
            let r = rate_quadratic(&path, &spec, MobilityKind::Wasserstein)?.value;
            Ok((d, r, (r - d).abs()))
        };
        let (d, r, res) = residual_at(n, k)?;
        let (_, _, coarse) = residual_at(n / 2, k / 2)?;
        worst = worst.max(res / (1.0 + d));
        weakest = weakest.min(coarse / res);
        table.push(vec![i as f64, d, r, res, coarse]);
    }
    out.metric("chain_rule_worst_residual", worst);
    out.metric("chain_rule_weakest_refinement", weakest);
    out.check(Check::at_most(
        "chain_rule_identity",
        worst,
        p.positive("chain_tol")?,
    ));
    out.check(Check::at_least(
        "chain_rule_residual_shrinks",
        weakest,
        p.positive("chain_ratio")?,
    ));
    out.tables.push(table);
    Ok(out)
}

pub const FDT_PARAMS: &[ParamSpec] = &[
    param("cells", "256", "torus grid cells"),
    param("intervals", "64", "time intervals of each path"),
    param("A", "1.0", "drift mobility"),
    param("matched_tol", "1e-6", "allowed discrepancy when sigma2 = A"),
    param(
        "mismatch_sigma2_factor",
        "2.0",
        "sigma2 / A for the mismatched case",
    ),
    param(
        "mismatch_min",
        "1e-3",
        "discrepancy expected in the mismatched case",
    ),
];

/// Two paths with the same endpoints: a straight mixture and a bent one.
fn two_paths(
    n: usize,
    k: usize,
) -> Result<(MeasurePath<GridMeasure>, MeasurePath<GridMeasure>), CliError> {
    let g = Grid::unit_torus(n);
    let r0 = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x).cos());
    let r1 = g.sample(|x| 1.0 + 0.2 * (4.0 * PI * x).sin());
    let bump = g.sample(|x| 0.2 * (6.0 * PI * x).cos());
    let build = |wiggle: f64| -> Result<MeasurePath<GridMeasure>, CliError> {
        let slices = (0..=k)
            .map(|j| {
                let t = j as f64 / k as f64;
                let f: Vec<f64> = (0..n)
                    .map(|i| (1.0 - t) * r0[i] + t * r1[i] + wiggle * t * (1.0 - t) * bump[i])
                    .collect();
                GridMeasure::from_density_values(g, &f)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MeasurePath::from_slices(0.0, 0.1 / k as f64, slices)?)
    };
    Ok((build(0.0)?, build(4.0)?))
}

pub fn fdt_equivalence(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let (n, k, a) = (p.usize("cells")?, p.usize("intervals")?, p.positive("A")?);
    if n < 8 || k == 0 {
        return Err(CliError::Config(
            "need cells >= 8 and intervals >= 1".into(),
        ));
    }
    let factor = p.positive("mismatch_sigma2_factor")?;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "cross_terms",
        &[
            "cells",
            "sigma2",
            "cross_a",
            "cross_b",
            "discrepancy",
            "free_energy_change",
        ],
    );
    let mut run = |n: usize, k: usize, sigma2: f64| -> Result<f64, CliError> {
        let (pa, pb) = two_paths(n, k)?;
        let g = Grid::unit_torus(n);
        let psi = g.sample(|x| (2.0 * PI * x).cos());
        let r = fdt_gap(&pa, &pb, &psi, &vec![0.0; n], a, sigma2)?;
        table.push(vec![
            n as f64,
            sigma2,
            r.cross_a,
            r.cross_b,
            r.discrepancy,
            r.free_energy_change,
        ]);
        Ok(r.discrepancy)
    };
    let matched = run(n, k, a)?;
    let mismatched = run(n, k, factor * a)?;
    let refined = run(2 * n, 2 * k, factor * a)?;
    out.metric("matched_discrepancy", matched);
    out.metric("mismatched_discrepancy", mismatched);
    out.metric("mismatched_discrepancy_refined", refined);
    out.check(Check::at_most(
        "matched_cross_term_path_independent",
        matched,
        p.positive("matched_tol")?,
    ));
    out.check(Check::at_least(
        "mismatched_cross_term_path_dependent",
        mismatched.min(refined),
        p.positive("mismatch_min")?,
    ));
    out.tables.push(table);
    Ok(out)
}
