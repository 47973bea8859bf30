// SPDX-License-Identifier: Apache-2.0
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed netlist: {0}")]
    MalformedNetlist(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("target error rate {target} unreachable; achievable range is [{min_rate}, {max_rate}] over periods [{low_ps} ps, {high_ps} ps]")]
    Calibration {
        target: f64,
        min_rate: f64,
        max_rate: f64,
        low_ps: f64,
        high_ps: f64,
    },

    #[error("config {path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::MalformedNetlist(_) => "malformed-netlist",
            Error::ContractViolation(_) => "contract-violation",
            Error::Calibration { .. } => "calibration-failure",
            Error::Config { .. } => "config",
            Error::Context { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
