use ldgf_core::scalar::{
    conjugate, generalized_flow_solve, pair_lagrangian, path_action, DissipationPair, ScalarEnergy,
};

use crate::config::{param, ParamSpec, Params};
use crate::error::CliError;
use crate::report::{Check, Outcome, Table};

pub const BIRTHDEATH_PARAMS: &[ParamSpec] = &[
    param("alphas", "[0.5, 1.0, 2.0]", "birth-death rate scales"),
    param(
        "magnetizations",
        "[-0.9, 0.0, 0.9]",
        "spin-flip states for the conjugate check",
    ),
    param("v_max", "5.0", "velocities checked lie in [-v_max, v_max]"),
    param("v_points", "101", "number of velocities checked"),
    param(
        "legendre_tol",
        "1e-8",
        "allowed conjugate and Young-equality error",
    ),
    param(
        "u0",
        "1.0",
        "initial value of the birth-death flow (energy u^2/2)",
    ),
    param("m0", "0.8", "initial magnetization of the spin-flip flow"),
    param("t_end", "1.0", "flow horizon"),
    param("dt", "1e-3", "RK4 step"),
    param(
        "action_tol",
        "1e-6",
        "allowed action of a flow under its own Lagrangian",
    ),
    param("energy_slack", "1e-12", "allowed energy increase per step"),
];

pub fn birthdeath_flow(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let v_max = p.positive("v_max")?;
    let points = p.usize("v_points")?;
    if points < 2 {
        return Err(CliError::Config("v_points must be at least 2".into()));
    }
    let vs: Vec<f64> = (0..points)
        .map(|i| -v_max + 2.0 * v_max * i as f64 / (points - 1) as f64)
        .collect();
    let mut cases: Vec<(DissipationPair, f64, &str)> = Vec::new();
    for a in p.f64_list("alphas")? {
        cases.push((DissipationPair::birth_death(a)?, 0.0, "birth_death"));
    }
    for m in p.f64_list("magnetizations")? {
        cases.push((DissipationPair::SpinFlip, m, "spin_flip"));
    }
    let mut out = Outcome::default();
    let mut table = Table::new(
        "legendre",
        &["pair", "parameter", "conjugate_error", "young_error"],
    );
    let (mut conj_worst, mut young_worst) = (0.0f64, 0.0f64);
    for (pair, state, label) in &cases {
        let (mut ce, mut ye) = (0.0f64, 0.0f64);
        for &v in &vs {
            let closed = pair.psi_star(*state, v)?;
            let numeric = conjugate(
                |xi| pair.psi(*state, xi).unwrap_or(f64::INFINITY),
                v,
                (f64::NEG_INFINITY, f64::INFINITY),
            )?;
            ce = ce.max((closed - numeric).abs());
            let xi = pair.force(*state, v)?;
            ye = ye.max((pair.psi(*state, xi)? + closed - v * xi).abs());
        }
        let parameter = match pair {
            DissipationPair::BirthDeath { alpha } => *alpha,
            _ => *state,
        };
        table.push(vec![
            if *label == "birth_death" { 0.0 } else { 1.0 },
            parameter,
            ce,
            ye,
        ]);
        conj_worst = conj_worst.max(ce);
        young_worst = young_worst.max(ye);
    }
    let tol = p.positive("legendre_tol")?;
    out.metric("conjugate_worst_error", conj_worst);
    out.metric("young_worst_error", young_worst);
    out.check(Check::at_most(
        "numeric_conjugate_matches_closed_form",
        conj_worst,
        tol,
    ));
    out.check(Check::at_most("young_equality", young_worst, tol));
    out.tables.push(table);

    let (t_end, dt) = (p.positive("t_end")?, p.positive("dt")?);
    let slack = p.f64("energy_slack")?;
    let flows = [
        (
            "birth_death",
            ScalarEnergy::quadratic(),
            DissipationPair::birth_death(1.0)?,
            p.f64("u0")?,
        ),
        (
            "spin_flip",
            ScalarEnergy::spin_flip(),
            DissipationPair::SpinFlip,
            p.f64("m0")?,
        ),
    ];
    let mut traj = Table::new("flows", &["flow", "time", "value", "energy"]);
    for (k, (label, energy, pair, u0)) in flows.iter().enumerate() {
        let path = generalized_flow_solve(energy, *pair, *u0, t_end, dt)?;
        let action = path_action(&path, |u, v| pair_lagrangian(*pair, energy, u, v))?;
        let rise = path
            .values()
            .windows(2)
            .map(|w| energy.value(w[1]) - energy.value(w[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        for (t, u) in path.times().iter().zip(path.values()) {
            traj.push(vec![k as f64, *t, *u, energy.value(*u)]);
        }
        out.metric(&format!("{label}_action"), action);
        out.metric(&format!("{label}_largest_energy_step"), rise);
        out.check(Check::at_most(
            &format!("{label}_flow_has_zero_action"),
            action,
            p.positive("action_tol")?,
        ));
        out.check(Check::at_most(
            &format!("{label}_energy_nonincreasing"),
            rise,
            slack,
        ));
    }
    out.tables.push(traj);
    Ok(out)
}
