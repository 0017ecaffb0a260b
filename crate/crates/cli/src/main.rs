//! `qphase`: phase-space distributions, ordering checks, dynamics and pointer
//! measurements from the command line.
//!
//! Every command writes plot-ready CSV plus a JSON manifest carrying the
//! resolved configuration into `--out`, and prints a short summary.
//!
//! Exit codes: 0 success, 2 parse or configuration error, 3 numerical guard.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod export;

use config::GlobalArgs;

#[derive(Debug, Parser)]
#[command(name = "qphase", version, about = "Husimi Q-function phase-space toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Q,
    Wigner,
    Husimi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pipeline {
    Weyl,
    Berezin,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate Q, Wigner or Husimi on the grid.
    Dist {
        /// e.g. "coherent 1+0i", "superpose 0.6 fock 0 + 0.8 fock 1"
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value_t = Kind::Q)]
        kind: Kind,
        /// Husimi smoothing parameter (required for --kind husimi).
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Compare trace and phase-space values of a classical polynomial.
    Expect {
        #[arg(long)]
        state: String,
        /// Polynomial in q and p, e.g. "q^2*p^2".
        #[arg(long)]
        poly: String,
        #[arg(long, value_enum, default_value_t = Pipeline::Both)]
        pipeline: Pipeline,
    },
    /// Position densities and currents from the state, its Wigner and its Q grid.
    Marginals {
        #[arg(long)]
        state: String,
    },
    /// Unitary evolution with per-step Q grids.
    Evolve {
        #[arg(long)]
        state: String,
        /// "harmonic", "kerr chi=0.1" or "poly <ladder polynomial>"
        #[arg(long, default_value = "harmonic")]
        hamiltonian: String,
        #[arg(long)]
        t_final: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Also run the continuity check at the trajectory midpoint.
        #[arg(long)]
        continuity: bool,
        /// Time step of the continuity check.
        #[arg(long, default_value_t = 1e-3)]
        continuity_dt: f64,
    },
    /// Pointer-measurement experiment from a JSON descriptor.
    Measure {
        #[arg(long)]
        experiment: PathBuf,
        /// Condition on outcome j (1-based) and check the collapsed marginal.
        #[arg(long)]
        condition: Option<usize>,
    },
    /// Overlap of the Q-functions of number states n and m.
    Overlap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(PathBuf, std::io::Error),
    Core(qphase::Error),
}

impl From<qphase::Error> for CliError {
    fn from(e: qphase::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(path, e) => write!(f, "io error on {}: {e}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use qphase::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(..) => 2,
            CliError::Core(e) => match e {
                E::CoherentTail { .. }
                | E::Scale { .. }
                | E::Extent(_)
                | E::Sampling(_)
                | E::Conditioning(_) => 3,
                _ => 2,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = config::RunConfig::resolve(&cli.global)?;
    match cli.command {
        Command::Dist { state, kind, kappa } => commands::dist(&config, &state, kind, kappa),
        Command::Expect {
            state,
            poly,
            pipeline,
        } => commands::expect(&config, &state, &poly, pipeline),
        Command::Marginals { state } => commands::marginals(&config, &state),
        Command::Evolve {
            state,
            hamiltonian,
            t_final,
            steps,
            continuity,
            continuity_dt,
        } => {
            let check = continuity.then_some(continuity_dt);
            commands::evolve(&config, &state, &hamiltonian, t_final, steps, check)
        }
        Command::Measure {
            experiment,
            condition,
        } => commands::measure(&config, &experiment, condition),
        Command::Overlap { n, m } => commands::overlap(&config, n, m),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qphase: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
