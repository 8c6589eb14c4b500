use std::path::PathBuf;

use mvhl_core::MvhlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: String,
        line: usize,
        field: String,
        message: String,
    },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("numerical failure: {0}")]
    Numerical(#[from] MvhlError),
}

impl HarnessError {
    /// Process exit code: 1 configuration/input, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Parse { .. } => 1,
            HarnessError::Io { .. } | HarnessError::Csv(_) => 2,
            HarnessError::Numerical(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Short stable tag for a per-trial failure, written to the `error` column.
pub fn error_code(err: &MvhlError) -> &'static str {
    match err {
        MvhlError::ShapeMismatch { .. } => "shape-mismatch",
        MvhlError::InvalidShape(_) => "invalid-shape",
        MvhlError::InvalidArgument(_) => "invalid-argument",
        MvhlError::UnknownModel(_) => "unknown-model",
        MvhlError::SeparationInfeasible { .. } => "separation-infeasible",
        MvhlError::InfeasibleColumn { .. } => "infeasible-column",
        MvhlError::InfeasibleBall { .. } => "infeasible-ball",
        MvhlError::ZeroNorm(_) => "zero-norm",
        MvhlError::SvdFailure => "svd-failure",
        MvhlError::NonFinite { .. } => "non-finite",
        MvhlError::RankDeficient { .. } => "rank-deficient",
        MvhlError::TooFewPeaks { .. } => "too-few-peaks",
    }
}
