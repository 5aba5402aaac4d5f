use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sspare::cli::{self, CliError, Format};
use sspare::model::Scenario;

#[derive(Parser)]
#[command(name = "sspare", version, about = "Sizing, assembly planning and lifetime simulation for modular satellite power")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout (overwrites).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    format: Format,
}

#[derive(Args)]
struct Run {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Module figures, stack capacity, mission delta and the comparison table.
    Size {
        #[arg(long, env = cli::SCENARIO_ENV)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Assembly plan for a target grid, verified by replay.
    Plan {
        #[arg(long, env = cli::SCENARIO_ENV)]
        scenario: Option<PathBuf>,
        /// ASCII grid: '#' target, '.' empty, 'B' base, 'X' body.
        #[arg(long)]
        target: PathBuf,
        /// Verify this plan file instead of planning.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Where to write the plan (overwrites).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo lifetime simulation of one scenario.
    Simulate {
        #[arg(long, env = cli::SCENARIO_ENV)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        run: Run,
        /// Include the event log of replica 0.
        #[arg(long)]
        event_log: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Comparison table with simulated lifetimes; the reference
    /// configurations when no scenario is given.
    Compare {
        #[arg(long)]
        scenario: Vec<PathBuf>,
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form survival curve of the scenario's hazard model.
    Curve {
        #[arg(long, env = cli::SCENARIO_ENV)]
        scenario: Option<PathBuf>,
        /// Intervals over the mission horizon.
        #[arg(long, default_value_t = 30)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// Writes to stdout; a reader that went away early is not an error.
fn stdout(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(CliError::Io { path: PathBuf::from("<stdout>"), source: e })
        }
        _ => Ok(()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => cli::write_file(p, text),
        None => stdout(text),
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Size { scenario, output } => {
            let s = cli::resolve_scenario(scenario.as_deref())?;
            emit(output.out.as_deref(), &cli::cmd_size(&s, output.format)?)
        }
        Command::Plan { scenario, target, replay, out } => {
            let s = cli::resolve_scenario(scenario.as_deref())?;
            let grid = cli::read_file(&target)?;
            let replay = replay.as_deref().map(cli::read_file).transpose()?;
            let r = cli::cmd_plan(&s, &grid, replay.as_deref())?;
            match out.as_deref() {
                Some(p) => cli::write_file(p, &r.plan.to_string())?,
                None => stdout(&r.plan.to_string())?,
            }
            stdout(&r.report)?;
            if r.passed {
                Ok(())
            } else {
                Err(CliError::Usage("plan failed replay verification".into()))
            }
        }
        Command::Simulate { scenario, run, event_log, output } => {
            let s = cli::resolve_scenario(scenario.as_deref())?;
            let text = cli::cmd_simulate(&s, run.replicas, run.seed, event_log, output.format)?;
            emit(output.out.as_deref(), &text)
        }
        Command::Compare { scenario, run, output } => {
            let list = if scenario.is_empty() {
                Scenario::table_presets()
            } else {
                scenario.iter().map(|p| cli::resolve_scenario(Some(p))).collect::<Result<Vec<_>, _>>()?
            };
            emit(output.out.as_deref(), &cli::cmd_compare(&list, run.replicas, run.seed, output.format)?)
        }
        Command::Curve { scenario, points, output } => {
            let s = cli::resolve_scenario(scenario.as_deref())?;
            emit(output.out.as_deref(), &cli::cmd_curve(&s, points, output.format)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
