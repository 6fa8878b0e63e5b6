//! `skewlab`: spectral, exponential-sum and graph experiments on skew-shift
//! matrices, written as CSV/JSON with a digest manifest.

mod cmd;
mod freq;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use skewlab_core::{DeterministicModel, Error as CoreError, FrequencyKind};

#[derive(Parser, Debug)]
#[command(name = "skewlab", version, about = "Skew-shift matrix laboratory")]
pub struct Cli {
    /// Eigensolver threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Skewshift,
    A,
    B,
    C,
}

impl Model {
    pub fn deterministic(self) -> Option<DeterministicModel> {
        match self {
            Model::Skewshift => None,
            Model::A => Some(DeterministicModel::A),
            Model::B => Some(DeterministicModel::B),
            Model::C => Some(DeterministicModel::C),
        }
    }
}

fn parse_freq(s: &str) -> Result<FrequencyKind, String> {
    freq::parse(s)
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Empirical spectral distribution and moments.
    Spectrum {
        #[arg(long, value_enum, default_value = "skewshift")]
        model: Model,
        /// Frequencies for the skew-shift model.
        #[arg(long, value_parser = parse_freq, default_value = "ialpha:sqrt2")]
        freq: FrequencyKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Highest moment order `2k` reported.
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value = "out/spectrum")]
        out_dir: PathBuf,
    },
    /// Nearest-neighbour level spacing near an energy.
    Spacing {
        #[arg(long, value_enum, default_value = "a")]
        model: Model,
        #[arg(long, value_parser = parse_freq, default_value = "ialpha:sqrt2")]
        freq: FrequencyKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        energy: f64,
        /// Window half-width is `N^-gamma`.
        #[arg(long, default_value_t = 0.1)]
        cutoff_exp: f64,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        #[arg(long, default_value_t = 3.0)]
        s_max: f64,
        #[arg(long, default_value = "out/spacing")]
        out_dir: PathBuf,
    },
    /// Quartic exponential sums and their decay in N.
    Expsum {
        #[arg(long, value_parser = parse_freq)]
        freq: FrequencyKind,
        /// Comma-separated N values.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_enum, default_value = "square")]
        method: Method,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Draws for `mean-random`.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out/expsum")]
        out_dir: PathBuf,
    },
    /// Exploration graphs and the moment calculus.
    Graphs {
        #[command(subcommand)]
        action: GraphCmd,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Brute,
    Square,
    Bound,
    MeanRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Proof,
    Statement,
}

#[derive(Subcommand, Debug)]
pub enum GraphCmd {
    /// Every exploration on k edges.
    Enumerate {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "out/graphs")]
        out_dir: PathBuf,
    },
    /// Good cycles of every preprocessed exploration graph with up to k edges.
    Goodcycles {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "out/graphs")]
        out_dir: PathBuf,
    },
    /// Effective graph weights of every exploration on k edges.
    Phi {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_freq, default_value = "ialpha:sqrt2")]
        freq: FrequencyKind,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value = "out/graphs")]
        out_dir: PathBuf,
    },
    /// Limiting moments from the recursion, exactly.
    Recursion {
        #[arg(long)]
        kmax: usize,
        /// Decimal or `a/b`.
        #[arg(long, default_value = "1")]
        rho: String,
        #[arg(long, value_enum, default_value = "proof")]
        form: Form,
        #[arg(long, default_value = "out/graphs")]
        out_dir: PathBuf,
    },
    /// Spectral moment against the graph sum of a deterministic model.
    Identity {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, default_value = "out/graphs")]
        out_dir: PathBuf,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Empty(String),
    Violation(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Empty(m) | Failure::Violation(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(f) = err.downcast_ref::<Failure>() {
        return match f {
            Failure::Usage(_) => 2,
            Failure::Empty(_) => 3,
            Failure::Violation(_) => 4,
        };
    }
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Size(_) | CoreError::ParameterDomain(_) | CoreError::Domain(_) | CoreError::Overflow(_)) => 2,
        Some(CoreError::EmptyWindow { .. }) => 3,
        Some(CoreError::Invariant(_)) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = if cli.threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cli.threads
    };
    skewlab_core::set_threads(threads);
    match cli.command {
        Command::Spectrum {
            model,
            freq,
            n,
            rho,
            seed,
            bins,
            kmax,
            out_dir,
        } => cmd::spectrum::run(
            &cmd::spectrum::Args {
                model,
                freq,
                n,
                rho,
                seed,
                bins,
                kmax,
            },
            &out_dir,
            threads,
        ),
        Command::Spacing {
            model,
            freq,
            n,
            seed,
            energy,
            cutoff_exp,
            bins,
            s_max,
            out_dir,
        } => cmd::spacing::run(
            &cmd::spacing::Args {
                model,
                freq,
                n,
                seed,
                energy,
                cutoff_exp,
                bins,
                s_max,
            },
            &out_dir,
            threads,
        ),
        Command::Expsum {
            freq,
            n_list,
            method,
            rho,
            samples,
            seed,
            out_dir,
        } => cmd::expsum::run(
            &cmd::expsum::Args {
                freq,
                n_list,
                method,
                rho,
                samples,
                seed,
            },
            &out_dir,
            threads,
        ),
        Command::Graphs { action } => cmd::graphs::run(action, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
