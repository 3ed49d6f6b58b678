//! Command implementations behind the `pnlm` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod benchmark;
pub mod commands;
pub mod validate;

use std::fmt;

use clap::ValueEnum;
use pnlm_core::{Aggregator, WeightKind};
use serde::{Deserialize, Serialize};

pub use args::{Cli, Command};

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments (exit 2).
    Usage(String),
    /// Anything that went wrong while doing the work (exit 1).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<pnlm_core::Error> for CliError {
    fn from(e: pnlm_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Weight function and aggregator pairs exposed on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NlmMean,
    PnlmMean,
    NlmMedian,
    PnlmMedian,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::NlmMean,
        Method::PnlmMean,
        Method::NlmMedian,
        Method::PnlmMedian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::NlmMean => "nlm-mean",
            Method::PnlmMean => "pnlm-mean",
            Method::NlmMedian => "nlm-median",
            Method::PnlmMedian => "pnlm-median",
        }
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, Method::PnlmMean | Method::PnlmMedian)
    }

    pub fn aggregator(self) -> Aggregator {
        match self {
            Method::NlmMean | Method::PnlmMean => Aggregator::WeightedMean,
            Method::NlmMedian | Method::PnlmMedian => Aggregator::WeightedMedian,
        }
    }

    pub fn weight(self, h_factor: f64, rho: f64) -> WeightKind {
        if self.is_probabilistic() {
            WeightKind::Probabilistic { rho }
        } else {
            WeightKind::Classic { h_factor }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sizes the global rayon pool from `PNLM_THREADS` when it is set.
pub fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var("PNLM_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return usage(format!(
                "PNLM_THREADS must be a positive integer, got {raw:?}"
            ))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))
}

pub fn run(cli: Cli) -> CliResult {
    configure_threads()?;
    match cli.command {
        Command::AddNoise(a) => commands::add_noise(&a),
        Command::Denoise(a) => commands::denoise(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::Validate(a) => validate::run(&a),
        Command::Benchmark(a) => benchmark::run(&a),
    }
}
