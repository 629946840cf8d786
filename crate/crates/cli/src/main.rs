use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

mod commands;
mod exit;
mod output;
mod report;
mod scenario;
mod verify;

use exit::{Code, Failure};
use output::{emit, to_json};
use scenario::{Scenario, SOLVE_ORACLE_GRID};

/// Target-defense game: classify states, trace the barrier, solve both
/// subgames, simulate optimal play and run verification sweeps.
#[derive(Parser, Debug)]
#[command(name = "tdg", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario JSON (see docs/scenario.schema.json).
    #[arg(long)]
    scenario: PathBuf,
    /// Output file. JSON and CSV go to stdout when omitted; simulate needs it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rays cast when tracing the barrier curve.
    #[arg(long, default_value_t = 256)]
    rays: usize,
    /// Random states drawn by verify.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Sweep seed; overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Check solve results against the meeting-point identity or the grid oracle.
    #[arg(long)]
    verify: bool,
    /// Report the best escape iterate instead of failing when the solver does not converge.
    #[arg(long)]
    allow_best_effort: bool,
}

// Flat subcommand list; every command shares the same flags.
#[derive(ValueEnum, Clone, Copy, Debug)]
enum Command {
    Classify,
    Barrier,
    Solve,
    Simulate,
    Verify,
}

fn run(cli: &Cli) -> Result<()> {
    let scenario = Scenario::load(&cli.scenario)?;
    let game = scenario
        .game()
        .map_err(|f| f.context(format!("scenario {}", cli.scenario.display())))?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Classify => emit(out, &to_json(&commands::classify(&game)?)?),
        Command::Barrier => commands::barrier(&game, cli.rays, out),
        Command::Solve => {
            let grid = game.sweep.grid_override.unwrap_or(SOLVE_ORACLE_GRID);
            let solved = commands::solve(&game, cli.verify, cli.allow_best_effort, grid)?;
            emit(out, &to_json(&solved.report)?)?;
            match solved.violation {
                Some(v) => Err(Failure::new(Code::Verification, v).into()),
                None => Ok(()),
            }
        }
        Command::Simulate => {
            let out =
                out.ok_or_else(|| Failure::schema("simulate needs --out <trajectory.csv>"))?;
            let json = commands::simulate(&game, out)?;
            emit(None, &json)
        }
        Command::Verify => {
            let seed = cli.seed.or(game.seed).unwrap_or(0);
            let report = verify::verify(&game, cli.samples, seed)?;
            emit(out, &to_json(&report)?).context("writing the verification report")?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::new(Code::Verification, report.violations.join("; ")).into())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tdg: {e:#}");
            ExitCode::from(exit::code_of(&e) as u8)
        }
    }
}
