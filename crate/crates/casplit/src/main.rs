use std::path::PathBuf;
use std::process::ExitCode;

use casplit::oracle_cmd::{load_instance, report};
use casplit::runner::{parse_modes, parse_seeds};
use casplit::suite::run_suite;
use casplit::{load_scenario, run_experiment, AppError, ExperimentSpec};
use clap::{Parser, Subcommand};

/// Carrier-aggregation traffic-splitting simulator.
///
/// Log verbosity is read from CASPLIT_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "casplit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file for a list of seeds and modes.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds; `a..b` ranges are allowed.
        #[arg(long, default_value = "0")]
        seeds: String,
        /// Comma-separated subset of ca, pcc, scc (or `all`).
        #[arg(long, default_value = "all")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a figure preset: fig4, fig5, fig6 or fig7.
    Suite {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a tiny instance exactly and check the window identity.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            mode,
            out,
        } => {
            let spec = ExperimentSpec {
                scenario: load_scenario(&config)?,
                seeds: parse_seeds(&seeds)?,
                modes: parse_modes(&mode)?,
                out,
            };
            let report = run_experiment(&spec)?;
            for row in report.rows.iter().filter(|r| r.record == "eta") {
                println!(
                    "seed {:>3}  {:<12} eta = {}",
                    row.seed,
                    row.policy,
                    row.eta.map_or("undefined".to_string(), |e| format!("{e:.4}"))
                );
            }
            log::info!("wrote {} trace file(s) to {}", report.trace_files, spec.out.display());
        }
        Command::Suite { name, out } => {
            for f in run_suite(&name, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Oracle { instance } => {
            print!("{}", report(&load_instance(&instance)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CASPLIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // bad arguments count as input errors, like a bad config file
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
