//! All acceptance criteria at their stated tolerances, one PASS/FAIL line each.
//! Every criterion runs through the same experiment code as the binary.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use ldgf_cli::{execute, ExperimentConfig, Summary};

/// Criteria that cannot hold as stated; they must keep failing rather than be
/// loosened. 6: the default terminal bin contains the typical magnetization, so
/// the minimal action is zero and no relative match is possible. 9: on a 1-D
/// grid with scalar coefficients the cross term is an exact differential for
/// every ratio of sigma^2 to A, so the mismatched case stays path independent.
const KNOWN_UNATTAINABLE: &[u32] = &[6, 9];

struct Criterion {
    id: u32,
    experiment: &'static str,
    checks: &'static [&'static str],
    time_limit: Option<Duration>,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        experiment: "w2-crosscheck",
        checks: &["methods_agree"],
        time_limit: Some(Duration::from_secs(10)),
    },
    Criterion {
        id: 2,
        experiment: "jko-vs-heat",
        checks: &["gap_to_heat_flow", "gap_shrinks"],
        time_limit: Some(Duration::from_secs(60)),
    },
    Criterion {
        id: 3,
        experiment: "rate-zero-on-solution",
        checks: &[
            "wasserstein_defect_shrinks",
            "wasserstein_reversal_separates",
            "ssep_defect_shrinks",
            "ssep_reversal_separates",
        ],
        time_limit: None,
    },
    Criterion {
        id: 4,
        experiment: "rate-zero-on-solution",
        checks: &["chain_rule_identity", "chain_rule_residual_shrinks"],
        time_limit: None,
    },
    Criterion {
        id: 5,
        experiment: "sanov-ladder",
        checks: &[
            "gap_nonnegative",
            "gap_below_type_count_bound",
            "slope_matches_relative_entropy",
        ],
        time_limit: None,
    },
    Criterion {
        id: 6,
        experiment: "spinflip-ldp",
        checks: &[
            "slope_matches_action",
            "slope_improves_with_n",
            "ensemble_mean_in_standard_errors",
        ],
        time_limit: None,
    },
    Criterion {
        id: 7,
        experiment: "birthdeath-flow",
        checks: &["numeric_conjugate_matches_closed_form", "young_equality"],
        time_limit: None,
    },
    Criterion {
        id: 8,
        experiment: "birthdeath-flow",
        checks: &[
            "birth_death_flow_has_zero_action",
            "birth_death_energy_nonincreasing",
            "spin_flip_flow_has_zero_action",
            "spin_flip_energy_nonincreasing",
        ],
        time_limit: None,
    },
    Criterion {
        id: 9,
        experiment: "fdt-equivalence",
        checks: &[
            "matched_cross_term_path_independent",
            "mismatched_cross_term_path_dependent",
        ],
        time_limit: None,
    },
    Criterion {
        id: 10,
        experiment: "decay-scheme",
        checks: &["decay_exponent", "gap_to_decay_solve", "gap_shrinks"],
        time_limit: None,
    },
    Criterion {
        id: 11,
        experiment: "heatbath-ladder",
        checks: &[
            "gap_decreases_along_ladder",
            "large_bath_matches_tilted_entropy",
        ],
        time_limit: None,
    },
    Criterion {
        id: 12,
        experiment: "w2-crosscheck",
        checks: &["geodesic_action_matches", "geodesic_is_minimal"],
        time_limit: None,
    },
];

fn main() {
    let mut runs: BTreeMap<&str, (Summary, Duration)> = BTreeMap::new();
    let mut unexpected = Vec::new();
    for c in CRITERIA {
        let (summary, elapsed) = runs.entry(c.experiment).or_insert_with(|| {
            let start = Instant::now();
            let (summary, _) = execute(&ExperimentConfig::named(c.experiment)).expect(c.experiment);
            (summary, start.elapsed())
        });
        let mut notes = Vec::new();
        for name in c.checks {
            let check = summary
                .check(name)
                .unwrap_or_else(|| panic!("{} has no check {name}", c.experiment));
            if !check.pass {
                notes.push(format!(
                    "{name} = {:e} (needs {} {:e})",
                    check.value,
                    check.relation.symbol(),
                    check.threshold
                ));
            }
        }
        if let Some(limit) = c.time_limit {
            if *elapsed > limit {
                notes.push(format!("took {elapsed:.2?}, limit {limit:?}"));
            } else {
                notes.push(format!("ran in {elapsed:.2?}"));
            }
        }
        let pass = c
            .checks
            .iter()
            .all(|n| summary.check(n).is_some_and(|k| k.pass))
            && c.time_limit.is_none_or(|l| *elapsed <= l);
        let expected = !KNOWN_UNATTAINABLE.contains(&c.id);
        let verdict = if pass { "PASS" } else { "FAIL" };
        let tag = if pass != expected {
            " [unexpected]"
        } else if !pass {
            " [known unattainable]"
        } else {
            ""
        };
        let detail = if notes.is_empty() {
            String::new()
        } else {
            format!(": {}", notes.join("; "))
        };
        println!(
            "criterion {:2} {verdict} {}{tag}{detail}",
            c.id, c.experiment
        );
        if pass != expected {
            unexpected.push(c.id);
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria with an unexpected verdict: {unexpected:?}"
    );
}
