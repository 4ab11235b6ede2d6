//! `ltvr`: analyse second-order linear time-varying systems from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliResult, RunArgs};
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "ltvr", version, about = "Riccati-characteristic analysis of 2x2 LTV systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in example systems.
    Examples {
        /// Print one example in full.
        #[arg(long, value_name = "KEY")]
        show: Option<String>,
    },
    /// Modulation form, RCE pair, dynamic eigenvalues and eigenvectors on the grid.
    Analyze(Common),
    /// State-transition matrix samples.
    Stm(Common),
    /// Forced response from an initial state.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial state at t_ref.
        #[arg(long, value_name = "A,B", default_value = "0,0", allow_hyphen_values = true)]
        x0: String,
    },
    /// Floquet exponents, multipliers and stability of a periodic system.
    Floquet(Common),
    /// Compare the state-transition matrix with direct integration.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Largest accepted entry-wise error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Example key or spec file.
    target: Option<String>,
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[arg(long, value_name = "KEY")]
    example: Option<String>,
    /// Number of grid points on the domain.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    t_ref: Option<f64>,
    #[arg(long, value_name = "P")]
    period: Option<f64>,
    /// Table destination; metadata goes to the sibling `.meta.json`.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl From<Common> for RunArgs {
    fn from(c: Common) -> Self {
        RunArgs {
            target: c.target,
            spec: c.spec,
            example: c.example,
            grid: c.grid,
            t_ref: c.t_ref,
            period: c.period,
            out: c.out,
            format: c.format,
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Examples { show } => commands::examples(show.as_deref()),
        Command::Analyze(c) => commands::analyze_cmd(&c.into()),
        Command::Stm(c) => commands::stm_cmd(&c.into()),
        Command::Simulate { common, x0 } => commands::simulate_cmd(&common.into(), &x0),
        Command::Floquet(c) => commands::floquet_cmd(&c.into()),
        Command::Verify { common, tol } => commands::verify_cmd(&common.into(), tol),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LTVR_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
