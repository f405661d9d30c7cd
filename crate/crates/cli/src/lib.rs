//! Command-line front end for the `qicost` simulator.
//!
//! Every command prints a short human-readable block followed by machine-readable
//! `key=value` lines (numbers with nine decimals). Exit status: 0 when every check passes,
//! 1 when a check fails, 2 on bad input.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qicost::error::QicError;

pub mod commands;
pub mod format;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(QicError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<QicError> for CliError {
    fn from(e: QicError) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qicost",
    version,
    about = "Information costs of two-party quantum and classical protocols"
)]
pub struct Cli {
    /// Largest dense matrix side and eigensolver block.
    #[arg(long, global = true, env = qicost::limits::DIM_CAP_ENV)]
    pub dim_cap: Option<usize>,
    /// Tolerance for every reported check.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Transform {
    /// Protocol file (JSON).
    pub protocol: PathBuf,
    /// Input distribution file; uniform when omitted.
    pub dist: Option<PathBuf>,
    /// Write the constructed protocol here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All information costs of a protocol, with identity residuals.
    Costs {
        protocol: PathBuf,
        dist: Option<PathBuf>,
        /// Replace the protocol by its safe version first.
        #[arg(long)]
        safe: bool,
        /// Truth table of f(x, y), x-major and comma separated, to report Bob's error.
        #[arg(long)]
        function: Option<String>,
        /// Report the worst-case error over inputs instead of the µ-average.
        #[arg(long)]
        worst_case: bool,
    },
    /// Pad, put in canonical randomness form and quantize a classical protocol.
    Quantize {
        classical: PathBuf,
        dist: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Safe version: both parties copy their inputs first.
    Safe(Transform),
    /// Forward run, copy of Bob's output bit, backward run.
    Clean {
        #[command(flatten)]
        t: Transform,
        #[arg(long)]
        function: String,
    },
    /// As clean, with the value left in the phase.
    Phase {
        #[command(flatten)]
        t: Transform,
        #[arg(long)]
        function: String,
    },
    /// Forward run keeping everything, then the backward run.
    Reverse(Transform),
    /// Phase-entropy lower bound against the send-x protocol for inner product on n bits.
    Ip { n: usize },
    /// Rényi-2 phase entropy of random boolean functions on n bits.
    Randomfn {
        n: usize,
        samples_arg: Option<usize>,
        seed_arg: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Information-flow identity on random interactive processes.
    Flowcheck {
        trials_arg: Option<usize>,
        seed_arg: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a reversible classical protocol by one that keeps every message.
    Ricsim {
        reversible: PathBuf,
        dist: Option<PathBuf>,
        /// Replace the protocol by its safe version first.
        #[arg(long)]
        safe: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Nine decimals, with round-off below the last digit printed as an unsigned zero.
pub fn bits(value: f64) -> String {
    let s = format!("{value:.9}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// Lines to print plus the outcome of every check made along the way.
#[derive(Debug, Default)]
pub struct Output {
    pub lines: Vec<String>,
    pub passed: bool,
}

impl Output {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            passed: true,
        }
    }

    fn text(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn measure(&mut self, name: &str, value: f64) {
        self.lines.push(format!("measure={name} value={}", bits(value)));
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.passed &= ok;
        self.lines.push(format!("check={name} pass={ok}"));
    }
}

/// Runs one command, writing its report to `out`. Returns whether every check passed.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    if let Some(cap) = cli.dim_cap {
        qicost::limits::set_dim_cap(cap);
    }
    let report = commands::dispatch(cli)?;
    for l in &report.lines {
        writeln!(out, "{l}").map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(report.passed)
}
