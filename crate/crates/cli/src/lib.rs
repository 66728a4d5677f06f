//! `qauction` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors (nothing is
//! written), 2 for runtime failures such as I/O errors.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use output::write_atomic;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid configuration.
    Validation(String),
    /// Failure after the input was accepted.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<qauction_core::Error> for CliError {
    fn from(e: qauction_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qauction", version, about = "Quantum market and auction simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration document
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output file (written atomically); stdout when omitted
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a two-mode market and write its price series
    GgSim {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Multifractal spectra of a gg-sim series (returns and absolute returns)
    Mfdfa {
        /// Series CSV produced by gg-sim
        #[arg(long, short)]
        input: PathBuf,
        /// Optional analysis settings: {"q": [...], "scales": {"min", "max", "count"}, "order"}
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// One clearing round of a trader ensemble
    PsRound {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Repeated adiabatic search on an auction document, with oracle statistics
    HpRun {
        #[command(flatten)]
        common: Common,
        /// Overrides the number of runs in the configuration
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Serve the session API over HTTP
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Journal directory; falls back to $QAUCTION_DATA_DIR, then to memory only
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("qauction: {}", e.message());
            e.exit_code()
        }
    }
}
