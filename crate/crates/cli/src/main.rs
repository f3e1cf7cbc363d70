mod commands;
mod error;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use distmatch::MmMode;

use crate::commands::{KindArg, Output};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "distmatch",
    version,
    about = "Projection, MM and path-integral solvers for finite and LQG control problems"
)]
struct Cli {
    /// Directory for CSV and report outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    I,
    M,
    Renyi,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Soc,
    Rsoc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Uniform,
    Prior,
}

#[derive(Subcommand)]
enum Command {
    /// One backward pass; writes policy.csv and values.csv.
    Project {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "m")]
        kind: Kind,
        /// Rényi order, strictly inside (0, 1).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Fixed-point iteration; writes trace.csv and policy.csv.
    Mm {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "soc")]
        mode: Mode,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value = "uniform")]
        init: Init,
    },
    /// Linear-Gaussian MM iteration with Riccati baselines; writes trace.csv and gains.csv.
    Lqg {
        problem: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Monte-Carlo value and policy estimates; writes pic.csv.
    Pic {
        problem: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        state: usize,
        #[arg(long, default_value_t = 0)]
        time: usize,
    },
    /// Exact smoothing policy; writes policy.csv.
    Smooth { problem: PathBuf },
    /// Oracle, majorization and identity checks; writes report.txt.
    Check {
        problem: PathBuf,
        #[arg(long, default_value_t = 50)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random discrete problem file.
    Generate {
        #[arg(long, default_value_t = 4)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Point-mass transitions.
        #[arg(long)]
        deterministic: bool,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let out = || Output::new(&cli.out);
    match cli.command {
        Command::Project {
            problem,
            kind,
            alpha,
        } => {
            let problem = commands::discrete(commands::load(&problem)?, "project")?;
            let kind = match kind {
                Kind::I => KindArg::I,
                Kind::M => KindArg::M,
                Kind::Renyi => KindArg::Renyi,
            };
            commands::project(problem, kind, alpha, &out()?)
        }
        Command::Mm {
            problem,
            mode,
            iters,
            tol,
            init,
        } => {
            let problem = commands::discrete(commands::load(&problem)?, "mm")?;
            let mode = match mode {
                Mode::Soc => MmMode::Soc,
                Mode::Rsoc => MmMode::Rsoc,
            };
            commands::mm(
                problem,
                mode,
                iters,
                tol,
                matches!(init, Init::Prior),
                &out()?,
            )
        }
        Command::Lqg {
            problem,
            alpha,
            iters,
            tol,
        } => commands::lqg_command(commands::load(&problem)?, alpha, iters, tol, &out()?),
        Command::Pic {
            problem,
            samples,
            seed,
            state,
            time,
        } => {
            let problem = commands::discrete(commands::load(&problem)?, "pic")?;
            commands::pic(problem, samples, seed, state, time, &out()?)
        }
        Command::Smooth { problem } => {
            let problem = commands::discrete(commands::load(&problem)?, "smooth")?;
            commands::smooth(problem, &out()?)
        }
        Command::Check {
            problem,
            probes,
            seed,
        } => {
            let problem = commands::discrete(commands::load(&problem)?, "check")?;
            commands::check(problem, probes, seed, &out()?)
        }
        Command::Generate {
            states,
            actions,
            horizon,
            seed,
            deterministic,
            output,
        } => {
            let text = commands::generate(states, actions, horizon, seed, deterministic)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
