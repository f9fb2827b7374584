use ldgf_cli::{execute, ExperimentConfig};

#[test]
fn atypical_spin_flip_event_matches_minimal_action() {
    let (summary, _) = execute(&ExperimentConfig::named("spinflip-ldp")).unwrap();
    let check = summary.check("atypical_slope_matches_action").unwrap();
    assert!(check.pass, "{check:?}");
    assert!(summary.metrics["atypical_minimal_action"] > 0.1);
}

#[test]
fn mismatched_noise_cross_term_stays_exact() {
    // in 1-D the cross term is an exact differential whatever sigma2 / A is
    let (summary, _) = execute(&ExperimentConfig::named("fdt-equivalence")).unwrap();
    assert!(summary.metrics["mismatched_discrepancy"] < 1e-6);
    assert!(summary.metrics["mismatched_discrepancy_refined"] < 1e-6);
}
