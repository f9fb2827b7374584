use ldgf_core::heatbath::{heatbath_report, reduced_rate, tilted_measure, BathModel, FiniteSystem};
use ldgf_core::measures::relative_entropy_vectors;
use ldgf_core::scalar::{bin_action, sf_lagrangian};
use ldgf_core::stochastic::{
    ldp_slope_from_log, replicas, sanov_log_probability, spin_flip_master, spin_flip_simulate,
};

use crate::config::{param, ParamSpec, Params};
use crate::error::CliError;
use crate::report::{Check, Outcome, Table};

pub const SANOV_PARAMS: &[ParamSpec] = &[
    param("mu", "[0.5, 0.5]", "reference law of one symbol"),
    param("rho", "[0.75, 0.25]", "target type"),
    param(
        "n_values",
        "[40, 80, 160]",
        "sample sizes; n times rho must be integral",
    ),
    param("slope_tol", "0.1", "relative error of the fitted slope"),
];

fn counts_for(rho: &[f64], n: usize) -> Result<Vec<usize>, CliError> {
    rho.iter()
        .map(|&r| {
            let c = r * n as f64;
            if (c - c.round()).abs() > 1e-9 {
                return Err(CliError::Config(format!(
                    "n = {n} does not resolve the type {rho:?}"
                )));
            }
            Ok(c.round() as usize)
        })
        .collect()
}

pub fn sanov_ladder(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let (mu, rho, ns) = (
        p.f64_list("mu")?,
        p.f64_list("rho")?,
        p.usize_list("n_values")?,
    );
    let h = relative_entropy_vectors(&rho, &mu)?;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "ladder",
        &[
            "n",
            "neg_log_p_over_n",
            "relative_entropy",
            "gap",
            "upper_bound",
        ],
    );
    let mut points = Vec::new();
    let mut worst_below = f64::INFINITY;
    let mut worst_above = f64::NEG_INFINITY;
    for &n in &ns {
        let lp = sanov_log_probability(&mu, &counts_for(&rho, n)?)?;
        let gap = -lp / n as f64 - h;
        let bound = ((n + 1) as f64).ln() / n as f64;
        worst_below = worst_below.min(gap);
        worst_above = worst_above.max(gap - bound);
        table.push(vec![n as f64, -lp / n as f64, h, gap, bound]);
        points.push((n, lp));
    }
    let fit = ldp_slope_from_log(&points)?;
    out.metric("relative_entropy", h);
    out.metric("slope", fit.slope);
    out.metric("intercept", fit.intercept);
    out.check(Check::at_least("gap_nonnegative", worst_below, 0.0));
    out.check(Check::at_most(
        "gap_below_type_count_bound",
        worst_above,
        0.0,
    ));
    out.check(Check::at_most(
        "slope_matches_relative_entropy",
        (fit.slope - h).abs() / h,
        p.positive("slope_tol")?,
    ));
    out.tables.push(table);
    Ok(out)
}

pub const SPINFLIP_PARAMS: &[ParamSpec] = &[
    param("m0", "0.8", "initial magnetization"),
    param("t_end", "0.5", "horizon of the terminal-bin event"),
    param(
        "bin_center",
        "0.29430355293715387",
        "terminal bin center (default: the typical value m0 exp(-2T))",
    ),
    param("bin_width", "0.05", "terminal bin width"),
    param("n_values", "[50, 100, 200]", "numbers of spins"),
    param(
        "intervals",
        "64",
        "time intervals of the minimal-action path",
    ),
    param(
        "slope_tol",
        "0.15",
        "relative gap between fitted slope and minimal action",
    ),
    param(
        "replicas",
        "10000",
        "Monte Carlo replicas for the ensemble mean",
    ),
    param("ensemble_n", "100", "spins per replica"),
    param(
        "ensemble_sigmas",
        "3.0",
        "allowed standard errors for the ensemble mean",
    ),
    param(
        "atypical_target",
        "0.9",
        "bin center of the supplementary event against the flow",
    ),
    param(
        "atypical_t_end",
        "0.25",
        "horizon of the supplementary event",
    ),
];

/// Fitted slope of `-log P(bin)` in `n`, the minimal action over the bin,
/// and the per-n relative errors of `-(1/n) log P` and of successive slopes.
struct BinLdp {
    slope: f64,
    action: f64,
    successive_errors: Vec<f64>,
}

fn bin_ldp(
    table: &mut Table,
    tag: f64,
    m0: f64,
    t: f64,
    (lo, hi): (f64, f64),
    ns: &[usize],
    intervals: usize,
) -> Result<BinLdp, CliError> {
    let (action, _) = bin_action(sf_lagrangian, m0, lo, hi, t, intervals)?;
    let mut points = Vec::new();
    for &n in ns {
        let lp = spin_flip_master(n, m0, t)?.log_bin_probability(lo, hi);
        if !lp.is_finite() {
            return Err(CliError::Config(format!(
                "bin [{lo}, {hi}] holds no magnetization for n = {n}"
            )));
        }
        table.push(vec![tag, n as f64, -lp / n as f64, action]);
        points.push((n, lp));
    }
    let fit = ldp_slope_from_log(&points)?;
    let successive_errors = fit
        .successive_slopes
        .iter()
        .map(|s| (s - action).abs() / action.abs())
        .collect();
    Ok(BinLdp {
        slope: fit.slope,
        action,
        successive_errors,
    })
}

fn improving(errors: &[f64]) -> f64 {
    if errors.windows(2).all(|w| w[1] < w[0]) {
        1.0
    } else {
        0.0
    }
}

pub fn spinflip_ldp(p: &Params, seed: u64) -> Result<Outcome, CliError> {
    let (m0, t) = (p.f64("m0")?, p.positive("t_end")?);
    let (center, width) = (p.f64("bin_center")?, p.positive("bin_width")?);
    let ns = p.usize_list("n_values")?;
    let intervals = p.usize("intervals")?;
    let tol = p.positive("slope_tol")?;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "bins",
        &["event", "n", "neg_log_p_over_n", "minimal_action"],
    );

    let main = bin_ldp(
        &mut table,
        0.0,
        m0,
        t,
        (center - width / 2.0, center + width / 2.0),
        &ns,
        intervals,
    )?;
    out.metric("slope", main.slope);
    out.metric("minimal_action", main.action);
    out.check(Check::at_most(
        "slope_matches_action",
        (main.slope - main.action).abs() / main.action.abs(),
        tol,
    ));
    out.check(Check::at_least(
        "slope_improves_with_n",
        improving(&main.successive_errors),
        1.0,
    ));

    let (target, t2) = (p.f64("atypical_target")?, p.positive("atypical_t_end")?);
    let side = bin_ldp(
        &mut table,
        1.0,
        m0,
        t2,
        (target - width / 2.0, target + width / 2.0),
        &ns,
        intervals,
    )?;
    out.metric("atypical_slope", side.slope);
    out.metric("atypical_minimal_action", side.action);
    out.check(Check::at_most(
        "atypical_slope_matches_action",
        (side.slope - side.action).abs() / side.action.abs(),
        tol,
    ));
    out.tables.push(table);

    let (count, n) = (p.usize("replicas")?, p.usize("ensemble_n")?);
    if count < 2 {
        return Err(CliError::Config("need at least two replicas".into()));
    }
    let finals = replicas(count, seed, |s| {
        spin_flip_simulate(n, m0, t, s).map(|path| path.final_value())
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mean = finals.iter().sum::<f64>() / count as f64;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    let se = (var / count as f64).sqrt();
    let expected = m0 * (-2.0 * t).exp();
    out.metric("ensemble_mean", mean);
    out.metric("ensemble_standard_error", se);
    out.metric("relaxation_mean", expected);
    out.check(Check::at_most(
        "ensemble_mean_in_standard_errors",
        (mean - expected).abs() / se,
        p.positive("ensemble_sigmas")?,
    ));
    Ok(out)
}

pub const HEATBATH_PARAMS: &[ParamSpec] = &[
    param("ebar", "0.25", "energy per bath particle"),
    param("bath_ratios", "[2, 4, 8]", "bath-to-system size ratios N"),
    param("n_values", "[4, 8, 16]", "system sizes"),
    param(
        "composition",
        "[0.75, 0.25]",
        "tracked composition of the system",
    ),
    param(
        "large_ratio",
        "1e6",
        "ratio used for the large-bath comparison",
    ),
    param(
        "large_tol",
        "1e-4",
        "allowed gap to the tilted relative entropy",
    ),
];

pub fn heatbath_ladder(p: &Params, _seed: u64) -> Result<Outcome, CliError> {
    let ebar = p.f64("ebar")?;
    let target = p.f64_list("composition")?;
    let sys = FiniteSystem::two_state();
    let bath = BathModel::new(FiniteSystem::two_state());
    let mut out = Outcome::default();
    let mut table = Table::new("ladder", &["N", "n", "m", "prob", "rate_gap"]);
    let mut monotone = true;
    for big_n in p.usize_list("bath_ratios")? {
        let mut previous = f64::INFINITY;
        for n in p.usize_list("n_values")? {
            let report = heatbath_report(&sys, &bath, n, big_n, ebar)?;
            let row = report
                .table
                .iter()
                .find(|r| {
                    r.composition
                        .iter()
                        .zip(&target)
                        .all(|(a, b)| (a - b).abs() < 1e-12)
                })
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "composition {target:?} not reachable at n = {n}, N = {big_n}"
                    ))
                })?;
            let gap = row.rate_gap.abs();
            monotone &= gap < previous;
            previous = gap;
            table.push(vec![
                big_n as f64,
                n as f64,
                report.m as f64,
                row.prob,
                row.rate_gap,
            ]);
        }
    }
    out.check(Check::at_least(
        "gap_decreases_along_ladder",
        if monotone { 1.0 } else { 0.0 },
        1.0,
    ));
    out.tables.push(table);

    let large = p.positive("large_ratio")?;
    let kt = bath.effective_temperature(ebar);
    let tilted = tilted_measure(&sys, kt.k_theta)?;
    let mut worst = 0.0f64;
    let mut limit = Table::new(
        "large_bath",
        &["p", "reduced_rate", "tilted_relative_entropy"],
    );
    for k in 1..20 {
        let q = k as f64 / 20.0;
        let rho = [q, 1.0 - q];
        let j = reduced_rate(&rho, &sys, &bath, large, ebar)?;
        let h = relative_entropy_vectors(&rho, &tilted)?;
        worst = worst.max((j - h).abs());
        limit.push(vec![q, j, h]);
    }
    out.metric("k_theta", kt.k_theta);
    out.metric("large_bath_worst_gap", worst);
    out.check(Check::at_most(
        "large_bath_matches_tilted_entropy",
        worst,
        p.positive("large_tol")?,
    ));
    out.tables.push(limit);
    Ok(out)
}
