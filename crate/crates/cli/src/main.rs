//! Experiment runner for the constrained-VI flow library.
//!
//! Verbs:
//! * `validate` — check the parameter schedule against the admissibility
//!   conditions and write `validation.txt`/`validation.json`;
//! * `run` — integrate the flow and write `trajectory.csv`, `summary.txt`,
//!   and log-scale residual/gap SVG charts;
//! * `oracle` — run the solution-path verifiers and write `prop1.csv` /
//!   `prop2.csv`;
//! * `sweep` — tabulate the schedule feasibility region into `region.csv`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 schedule validation
//! failure, 3 trajectory divergence, 4 oracle verification failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::SweepOptions;
use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// Unparseable or inconsistent configuration (exit 1).
    Config(String),
    /// Schedule validation failed without the override (exit 2).
    InvalidSchedule,
    /// The trajectory left the finite range (exit 3).
    Divergence { last_t: f64 },
    /// An oracle verification failed or did not converge (exit 4).
    Oracle(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::InvalidSchedule => 2,
            CliError::Divergence { .. } => 3,
            CliError::Oracle(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("error: {m}"),
            CliError::InvalidSchedule => {
                "error: schedule validation failed (rerun with --allow-invalid-schedule to override)"
                    .to_string()
            }
            CliError::Divergence { last_t } => {
                format!("error: trajectory diverged; last finite t = {last_t}")
            }
            CliError::Oracle(m) => format!("error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "viflow", version, about = "Constrained-VI flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to an experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration (figure1-like | interval-toy).
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Proceed even when the schedule fails validation.
    #[arg(long)]
    allow_invalid_schedule: bool,
    /// Override the seed of seeded problem kinds.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), None) => ExperimentConfig::from_path(path)?,
            (None, Some(name)) => config::preset(name)?,
            (None, None) => {
                return Err(CliError::Config(
                    "either --config <path> or --preset <name> is required".to_string(),
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        if let Some(seed) = self.seed {
            config.override_seed(seed);
        }
        Ok(config)
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn allow_invalid(&self, config: &ExperimentConfig) -> bool {
        self.allow_invalid_schedule || config.allow_invalid_schedule
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the schedule against the admissibility conditions.
    Validate(ConfigArgs),
    /// Integrate the flow and write trajectory artifacts.
    Run(ConfigArgs),
    /// Run the solution-path verifiers.
    Oracle(ConfigArgs),
    /// Tabulate the schedule feasibility region.
    Sweep {
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Lattice resolution per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Upper bound of the q axis.
        #[arg(long, default_value_t = 0.5)]
        q_max: f64,
        /// Upper bound of the r axis.
        #[arg(long, default_value_t = 0.5)]
        r_max: f64,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(args) => {
            let config = args.load()?;
            let out = args.out_dir(&config);
            commands::cmd_validate(&config, &out, args.allow_invalid(&config))
        }
        Command::Run(args) => {
            let config = args.load()?;
            let out = args.out_dir(&config);
            commands::cmd_run(&config, &out, args.allow_invalid(&config))
        }
        Command::Oracle(args) => {
            let config = args.load()?;
            let out = args.out_dir(&config);
            commands::cmd_oracle(&config, &out)
        }
        Command::Sweep {
            out,
            grid,
            q_max,
            r_max,
        } => {
            let out = out.unwrap_or_else(|| PathBuf::from("out"));
            commands::cmd_sweep(&out, &SweepOptions { grid, q_max, r_max }).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
