use std::f64::consts::PI;

use ldgf_core::jko::{decay_flow, decay_step, jko_flow};
use ldgf_core::measures::{EnergySpec, Grid, GridMeasure};
use ldgf_core::pde::{decay_solve, heat_solve, PdeConfig};

use crate::config::{param, ParamSpec, Params};
use crate::error::CliError;
use crate::report::{Check, Outcome, Table};

fn steps_for(t_end: f64, h: f64) -> Result<usize, CliError> {
    let steps = (t_end / h).round();
    if steps < 1.0 || ((steps * h) - t_end).abs() > 1e-9 * t_end {
        return Err(CliError::Config(format!(
            "t_end {t_end} is not a whole number of steps {h}"
        )));
    }
    Ok(steps as usize)
}

fn cosine_bump(grid: Grid) -> Result<GridMeasure, CliError> {
    Ok(GridMeasure::from_fn_normalized(grid, |x| {
        1.0 + 0.5 * (2.0 * PI * x).cos()
    })?)
}

/// Gaps at `h, h/2, …` and the worst successive improvement factor.
fn refinement(
    out: &mut Outcome,
    name: &str,
    h: f64,
    halvings: usize,
    gap_at: impl Fn(f64) -> Result<f64, CliError>,
) -> Result<(f64, f64), CliError> {
    let mut table = Table::new(name, &["h", "l1_gap"]);
    let mut gaps = Vec::new();
    for k in 0..=halvings {
        let hk = h / 2f64.powi(k as i32);
        let g = gap_at(hk)?;
        table.push(vec![hk, g]);
        gaps.push(g);
    }
    let worst = gaps
        .windows(2)
        .map(|w| w[0] / w[1])
        .fold(f64::INFINITY, f64::min);
    out.tables.push(table);
    Ok((gaps[0], worst))
}

pub const JKO_PARAMS: &[ParamSpec] = &[
    param("cells", "256", "interval grid cells"),
    param("h", "1e-3", "coarsest step"),
    param("halvings", "1", "how many times h is halved"),
    param("t_end", "0.05", "final time"),
    param(
        "reference_dt",
        "1e-5",
        "Crank-Nicolson step of the reference heat flow",
    ),
    param("gap_tol", "5e-2", "allowed L1 gap at the coarsest step"),
    param("min_ratio", "1.7", "required gap reduction per halving"),
];

pub fn jko_vs_heat(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let grid = Grid::unit_interval(p.usize("cells")?);
    let (h, t_end) = (p.positive("h")?, p.positive("t_end")?);
    let rho0 = cosine_bump(grid)?;
    let heat = heat_solve(
        &rho0,
        &PdeConfig::new(grid, p.positive("reference_dt")?, t_end),
    )?;
    let spec = EnergySpec::entropy();
    let mut out = Outcome::default();
    let (gap, ratio) = refinement(&mut out, "gaps", h, p.usize("halvings")?, |hk| {
        let flow = jko_flow(&rho0, hk, steps_for(t_end, hk)?, &spec)?;
        Ok(flow.last().l1_distance(heat.last())?)
    })?;
    out.metric("l1_gap", gap);
    out.metric("halving_ratio", ratio);
    out.check(Check::at_most(
        "gap_to_heat_flow",
        gap,
        p.positive("gap_tol")?,
    ));
    out.check(Check::at_least(
        "gap_shrinks",
        ratio,
        p.positive("min_ratio")?,
    ));
    let last = jko_flow(&rho0, h, steps_for(t_end, h)?, &spec)?;
    let mut profile = Table::new("profiles", &["x", "jko", "heat"]);
    for (i, (a, b)) in last
        .last()
        .weights()
        .iter()
        .zip(heat.last().weights())
        .enumerate()
    {
        profile.push(vec![grid.center(i), a / grid.dx(), b / grid.dx()]);
    }
    out.tables.push(profile);
    Ok(out)
}

pub const DECAY_PARAMS: &[ParamSpec] = &[
    param("cells", "256", "interval grid cells"),
    param("lambda", "1.0", "decay rate"),
    param("h", "1e-3", "coarsest step"),
    param("halvings", "1", "how many times h is halved"),
    param("t_end", "0.1", "final time"),
    param(
        "reference_dt",
        "1e-5",
        "step of the reference drift-diffusion-decay solve",
    ),
    param(
        "exponent_tol",
        "0.01",
        "relative error of the per-step decay exponent",
    ),
    param("gap_tol", "5e-2", "allowed L1 gap at the coarsest step"),
    param("min_ratio", "1.7", "required gap reduction per halving"),
];

pub fn decay_scheme(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let grid = Grid::unit_interval(p.usize("cells")?);
    let (lambda, h, t_end) = (
        p.positive("lambda")?,
        p.positive("h")?,
        p.positive("t_end")?,
    );
    let rho0 = cosine_bump(grid)?;
    let psi = grid.sample(|x| (x - 0.5) * (x - 0.5));
    let mut out = Outcome::default();

    let (rho, rho_nd) = decay_step(&rho0, h, &psi, lambda)?;
    let ratio = rho.mass() / rho0.mass();
    let exponent = -ratio.ln() / h;
    out.metric("step_mass_ratio", ratio);
    out.metric("step_ratio_error", (ratio - (-lambda * h).exp()).abs());
    out.metric("step_decayed_mass", rho_nd.mass());
    out.metric("measured_exponent", exponent);
    out.check(Check::at_most(
        "decay_exponent",
        (exponent - lambda).abs() / lambda,
        p.positive("exponent_tol")?,
    ));

    let reference = decay_solve(
        &rho0,
        &psi,
        lambda,
        &PdeConfig::new(grid, p.positive("reference_dt")?, t_end),
    )?;
    let (gap, shrink) = refinement(&mut out, "gaps", h, p.usize("halvings")?, |hk| {
        let flow = decay_flow(&rho0, hk, steps_for(t_end, hk)?, &psi, lambda)?;
        Ok(flow.last().l1_distance(reference.last())?)
    })?;
    out.metric("l1_gap", gap);
    out.metric("halving_ratio", shrink);
    out.check(Check::at_most(
        "gap_to_decay_solve",
        gap,
        p.positive("gap_tol")?,
    ));
    out.check(Check::at_least(
        "gap_shrinks",
        shrink,
        p.positive("min_ratio")?,
    ));
    Ok(out)
}
