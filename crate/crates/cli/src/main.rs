use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ldgf_cli::{describe, exit_code, run_experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "ldgf",
    version,
    about = "Run gradient-flow and large-deviation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Describe one experiment, or all of them.
    Describe { name: Option<String> },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let (summary, files) = run_experiment(&cfg)?;
            for c in &summary.checks {
                let status = if c.pass { "ok  " } else { "FAIL" };
                println!(
                    "{status} {} = {:e} (needs {} {:e})",
                    c.name,
                    c.value,
                    c.relation.symbol(),
                    c.threshold
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(exit_code(&summary))
        }
        Command::Describe { name } => {
            print!("{}", describe(name.as_deref())?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ldgf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
