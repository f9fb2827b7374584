use std::f64::consts::PI;

use rand::Rng;

use ldgf_core::measures::{Grid, GridMeasure, ParticleCloud};
use ldgf_core::stochastic::rng;
use ldgf_core::transport::{
    assignment_cost, bb_action, quantile_geodesic, wasserstein_lp, wasserstein_quantile,
    wasserstein_quantile_with, MassModel, PiecewiseLinearQuantile,
};
use ldgf_core::MeasurePath;

use crate::config::{param, ParamSpec, Params};
use crate::error::CliError;
use crate::report::{Check, Outcome, Table};

pub const W2_PARAMS: &[ParamSpec] = &[
    param(
        "pairs",
        "100",
        "random measure pairs, and as many empirical pairs",
    ),
    param(
        "max_atoms",
        "64",
        "largest combined support of a pair (also the largest grid)",
    ),
    param(
        "agreement_tol",
        "1e-9",
        "relative disagreement allowed between methods",
    ),
    param(
        "geodesic_cells",
        "128",
        "grid for the geodesic action check",
    ),
    param(
        "geodesic_steps",
        "64",
        "time steps of the discrete geodesic",
    ),
    param(
        "geodesic_tol",
        "0.01",
        "relative gap between action and squared distance",
    ),
];

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Random weights on at most `max_support` distinct cells.
fn random_measure(
    grid: Grid,
    max_support: usize,
    rng: &mut impl Rng,
) -> Result<GridMeasure, CliError> {
    let n = grid.n_cells();
    let k = rng.gen_range(1..=max_support.min(n));
    let mut w = vec![0.0; n];
    for i in rand::seq::index::sample(rng, n, k) {
        w[i] = rng.gen_range(0.01..1.0);
    }
    Ok(GridMeasure::new(grid, w)?.normalized()?)
}

/// Empirical measure of `k` particles placed on random cell centers, with the cloud itself.
fn random_empirical(
    grid: Grid,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(GridMeasure, ParticleCloud), CliError> {
    let cells: Vec<usize> = (0..k).map(|_| rng.gen_range(0..grid.n_cells())).collect();
    let mut w = vec![0.0; grid.n_cells()];
    cells.iter().for_each(|&c| w[c] += 1.0 / k as f64);
    let cloud = ParticleCloud::new(cells.iter().map(|&c| grid.center(c)).collect(), grid)?;
    Ok((GridMeasure::new(grid, w)?, cloud))
}

fn path_from(
    steps: usize,
    slice: impl Fn(f64) -> Result<GridMeasure, CliError>,
) -> Result<MeasurePath<GridMeasure>, CliError> {
    let slices = (0..=steps)
        .map(|k| slice(k as f64 / steps as f64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MeasurePath::from_slices(0.0, 1.0 / steps as f64, slices)?)
}

pub fn w2_crosscheck(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let pairs = p.usize("pairs")?;
    let max_atoms = p.usize("max_atoms")?;
    if pairs == 0 || !(2..=ldgf_core::transport::LP_ATOM_LIMIT).contains(&max_atoms) {
        return Err(CliError::Config(format!(
            "need pairs >= 1 and 2 <= max_atoms <= {}",
            ldgf_core::transport::LP_ATOM_LIMIT
        )));
    }
    let half = max_atoms / 2;
    let mut out = Outcome::default();
    let mut rng = rng(seed);
    let mut table = Table::new(
        "pairs",
        &[
            "pair",
            "empirical",
            "cells",
            "quantile",
            "lp",
            "assignment",
            "max_rel_gap",
        ],
    );
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let grid = Grid::unit_interval(rng.gen_range(2..=max_atoms));
        let (a, b) = (
            random_measure(grid, half, &mut rng)?,
            random_measure(grid, half, &mut rng)?,
        );
        let q = wasserstein_quantile_with(&a, &b, MassModel::Atomic)?;
        let lp = wasserstein_lp(&a, &b)?;
        let gap = relative_gap(q, lp);
        worst = worst.max(gap);
        table.push(vec![
            i as f64,
            0.0,
            grid.n_cells() as f64,
            q,
            lp,
            f64::NAN,
            gap,
        ]);
    }
    for i in 0..pairs {
        let grid = Grid::unit_interval(rng.gen_range(2..=max_atoms));
        let k = rng.gen_range(1..=half);
        let (a, x) = random_empirical(grid, k, &mut rng)?;
        let (b, y) = random_empirical(grid, k, &mut rng)?;
        let q = wasserstein_quantile_with(&a, &b, MassModel::Atomic)?;
        let lp = wasserstein_lp(&a, &b)?;
        let asg = assignment_cost(&x, &y)?;
        let gap = relative_gap(q, lp)
            .max(relative_gap(q, asg))
            .max(relative_gap(lp, asg));
        worst = worst.max(gap);
        table.push(vec![i as f64, 1.0, grid.n_cells() as f64, q, lp, asg, gap]);
    }
    out.metric("max_method_disagreement", worst);
    out.check(Check::at_most(
        "methods_agree",
        worst,
        p.positive("agreement_tol")?,
    ));
    out.tables.push(table);

    // dynamic check: the geodesic's discrete action against the static distance
    let grid = Grid::unit_interval(p.usize("geodesic_cells")?.max(2));
    let steps = p.usize("geodesic_steps")?.max(1);
    let tol = p.positive("geodesic_tol")?;
    let rho0 = GridMeasure::from_fn_normalized(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).sin())?;
    let rho1 =
        GridMeasure::from_fn_normalized(grid, |x| 0.2 + (-(x - 0.6) * (x - 0.6) / 0.05).exp())?;
    let w2 = wasserstein_quantile(&rho0, &rho1)?;
    let geo = bb_action(&quantile_geodesic(&rho0, &rho1, steps)?)?;
    out.metric("w2_squared", w2);
    out.metric("geodesic_action", geo);
    out.check(Check::at_most(
        "geodesic_action_matches",
        relative_gap(geo, w2),
        tol,
    ));

    let q0 = PiecewiseLinearQuantile::from_measure(&rho0, MassModel::CellUniform)?;
    let q1 = PiecewiseLinearQuantile::from_measure(&rho1, MassModel::CellUniform)?;
    let mut competitors = Table::new("competitors", &["path", "action", "action_over_geodesic"]);
    let slow_start = path_from(steps, |t| {
        Ok(q0.interpolate(&q1, t * t).to_measure(&grid)?)
    })?;
    let mixture = path_from(steps, |t| Ok(rho0.mix(&rho1, t)?))?;
    let wiggle = grid.sample(|x| (2.0 * PI * x).cos());
    let bumped = path_from(steps, |t| {
        let base = q0.interpolate(&q1, t).to_measure(&grid)?;
        let w = base
            .weights()
            .iter()
            .zip(&wiggle)
            .map(|(b, c)| b * (1.0 + 0.3 * (PI * t).sin() * c))
            .collect();
        Ok(GridMeasure::new(grid, w)?.normalized()?)
    })?;
    let mut best_ratio = f64::INFINITY;
    competitors.push(vec![0.0, geo, 1.0]);
    for (k, path) in [slow_start, mixture, bumped].iter().enumerate() {
        let a = bb_action(path)?;
        best_ratio = best_ratio.min(a / geo);
        competitors.push(vec![k as f64 + 1.0, a, a / geo]);
    }
    out.metric("best_competitor_over_geodesic", best_ratio);
    out.check(Check::at_least(
        "geodesic_is_minimal",
        best_ratio,
        1.0 - tol,
    ));
    out.tables.push(competitors);
    Ok(out)
}

pub const MOBILITY_PARAMS: &[ParamSpec] = &[
    param("particles", "6", "number of Brownian particles (at most 8)"),
    param(
        "h_values",
        "[0.1, 0.03, 0.01, 0.003, 0.001, 0.0003]",
        "time steps of the transition",
    ),
];

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            perm.swap(if i % 2 == 0 { 0 } else { c[i] }, i);
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn discrete_time_mobility(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let n = p.usize("particles")?;
    if !(1..=8).contains(&n) {
        return Err(CliError::Config("particles must be between 1 and 8".into()));
    }
    let hs = p.f64_list("h_values")?;
    if hs.is_empty() || hs.iter().any(|&h| h.is_nan() || h <= 0.0) {
        return Err(CliError::Config(
            "h_values must be nonempty and positive".into(),
        ));
    }
    let mut rng = rng(seed);
    let grid = Grid::unit_interval(1);
    let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let d2 = assignment_cost(
        &ParticleCloud::new(x.clone(), grid)?,
        &ParticleCloud::new(y.clone(), grid)?,
    )?;
    let labelled = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
    let mut costs = Vec::new();
    for_each_permutation(n, |s| {
        costs.push(
            s.iter()
                .enumerate()
                .map(|(i, &j)| (x[i] - y[j]).powi(2))
                .sum::<f64>(),
        )
    });

    let mut out = Outcome::default();
    out.metric("unlabelled_cost", d2);
    out.metric("labelled_cost", labelled);
    let mut table = Table::new("exponents", &["h", "exponent", "unlabelled_cost", "ratio"]);
    for &h in &hs {
        // Gaussian kernel with variance 2h per particle, prefactor removed;
        // the unlabelled density sums over all relabellings of the targets
        let logs: Vec<f64> = costs.iter().map(|c| -c / (4.0 * h)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        let exponent = -4.0 * h * log_sum / n as f64;
        table.push(vec![h, exponent, d2, exponent / d2]);
    }
    let finest = table
        .rows
        .iter()
        .min_by(|a, b| a[0].total_cmp(&b[0]))
        .expect("h_values nonempty");
    out.metric("finest_h", finest[0]);
    out.metric("finest_exponent", finest[1]);
    out.metric("finest_ratio", finest[3]);
    out.tables.push(table);
    Ok(out)
}
