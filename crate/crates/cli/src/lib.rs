//! Command-line front end: single scenarios, lethality sweeps and the
//! exhaustive-enumeration self-check.
//!
//! Exit codes: 0 on success, 1 when a config or argument is rejected, 2 when
//! a run fails (I/O, interrupted sweep, oracle deviation above tolerance).

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use pathbelief::planner::Algorithm;

use crate::commands::{cmd_oracle, cmd_run, cmd_sweep, ORACLE_TOLERANCE};
use crate::config::{load_config, ConfigFile, Overrides};

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) => e,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pathbelief", version, about = "Belief mapping with path-based sensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    /// Number of Monte Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Planner: kappa_bnitp, relaxed_bnitp, relaxed_itp or random.
    #[arg(long, global = true)]
    pub planner: Option<Algorithm>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write per-trial entropy traces.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the belief after every deployment.
        #[arg(long)]
        snapshots: bool,
    },
    /// Run a lethality × planner grid.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, hide = true)]
        fail_after: Option<usize>,
    },
    /// Compare the belief updates with exhaustive enumeration on small
    /// random instances.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, hide = true, default_value_t = 0.0)]
        corrupt: f64,
    },
}

fn scenario(file: ConfigFile, command: &str) -> Result<pathbelief::ScenarioConfig, Failure> {
    match file {
        ConfigFile::Scenario(cfg) => Ok(cfg),
        ConfigFile::Sweep(_) => Err(Failure::Validation(anyhow!(
            "`{command}` needs a config with kind = \"scenario\", got a sweep"
        ))),
    }
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    let overrides = Overrides {
        trials: cli.overrides.trials,
        seed: cli.overrides.seed,
        planner: cli.overrides.planner,
    };
    match cli.command {
        Command::Run { config, out, snapshots } => {
            let mut cfg = scenario(load_config(&config).map_err(Failure::Validation)?, "run")?;
            overrides.apply_scenario(&mut cfg);
            cfg.snapshots |= snapshots;
            let result = cmd_run(&cfg, &out)?;
            println!(
                "{} trials written to {}; final mean h_total {:.6}",
                result.trials.len(),
                out.display(),
                result.aggregate.final_mean_h_total().unwrap_or(f64::NAN)
            );
        }
        Command::Sweep { spec, out, fail_after } => {
            let ConfigFile::Sweep(mut spec) = load_config(&spec).map_err(Failure::Validation)? else {
                return Err(Failure::Validation(anyhow!(
                    "`sweep` needs a config with kind = \"sweep\", got a scenario"
                )));
            };
            overrides.apply_sweep(&mut spec);
            let points = cmd_sweep(&spec, &out, fail_after)?;
            println!("{} grid points written to {}", points.len(), out.display());
        }
        Command::Oracle {
            config,
            instances,
            corrupt,
        } => {
            let mut cfg = scenario(load_config(&config).map_err(Failure::Validation)?, "oracle")?;
            overrides.apply_scenario(&mut cfg);
            let report = cmd_oracle(&cfg, instances, corrupt)?;
            println!(
                "instances: {} ({} triggered)\nmax abs deviation: {:e}\ntolerance: {:e}",
                report.instances, report.triggered, report.max_abs_deviation, ORACLE_TOLERANCE
            );
            if !report.passed(ORACLE_TOLERANCE) {
                return Err(Failure::Runtime(anyhow!(
                    "deviation {:e} exceeds tolerance (worst instance {:?})",
                    report.max_abs_deviation,
                    report.worst_instance
                )));
            }
            println!("result: pass");
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            f.exit_code()
        }
    }
}
