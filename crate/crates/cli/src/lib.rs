//! Named experiments over `ldgf-core`, driven by a JSON configuration.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::fmt::Write as _;
use std::path::PathBuf;

pub use config::{ExperimentConfig, Format};
pub use error::CliError;
pub use report::{Check, Summary, Table};

/// Runs an experiment in memory and returns its summary and tables.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Summary, Vec<Table>), CliError> {
    let exp = experiments::find(&cfg.experiment)?;
    let params = config::Params::resolve(exp.params, &cfg.parameters)?;
    let outcome = (exp.run)(&params, cfg.seed)?;
    let pass = outcome.checks.iter().all(|c| c.pass);
    let summary = Summary {
        experiment: exp.name.to_string(),
        parameters: params.values().clone(),
        seed: cfg.seed,
        metrics: outcome.metrics,
        checks: outcome.checks,
        pass,
    };
    Ok((summary, outcome.tables))
}

/// Runs an experiment and writes its artifacts under `output_dir/<experiment>/`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Summary, Vec<PathBuf>), CliError> {
    let (summary, tables) = execute(cfg)?;
    let files = report::write_outputs(&cfg.output_dir, &summary, &tables, cfg.format)?;
    Ok((summary, files))
}

/// Exit status for a finished run: 0 if every check passed, 1 otherwise.
pub fn exit_code(summary: &Summary) -> i32 {
    if summary.pass {
        0
    } else {
        1
    }
}

fn describe_one(out: &mut String, e: &experiments::Experiment) {
    let _ = writeln!(out, "{}", e.name);
    let _ = writeln!(out, "  {}", e.summary);
    let _ = writeln!(out, "  tests:");
    for r in e.relations {
        let _ = writeln!(out, "    - {r}");
    }
    let _ = writeln!(out, "  parameters:");
    let width = e.params.iter().map(|p| p.key.len()).max().unwrap_or(0);
    for p in e.params {
        let _ = writeln!(
            out,
            "    {:width$}  {}  (default {})",
            p.key, p.help, p.default
        );
    }
    let _ = writeln!(
        out,
        "  writes: summary.json{}",
        e.tables
            .iter()
            .map(|t| format!(", {t}.<format>"))
            .collect::<String>()
    );
}

/// Text description of one experiment, or of all of them when `name` is `None`.
pub fn describe(name: Option<&str>) -> Result<String, CliError> {
    let mut out = String::new();
    match name {
        Some(n) => describe_one(&mut out, experiments::find(n)?),
        None => {
            for (i, e) in experiments::EXPERIMENTS.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                describe_one(&mut out, e);
            }
        }
    }
    Ok(out)
}
