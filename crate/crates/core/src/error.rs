use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MvhlError {
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown subspace model `{0}` (expected dft-rows, rademacher or fourier-steering)")]
    UnknownModel(String),
    #[error("minimum separation {separation} is infeasible for {count} sources")]
    SeparationInfeasible { separation: f64, count: usize },
    #[error("measurement column {column} has no support in any subspace but y[{column}] != 0")]
    InfeasibleColumn { column: usize },
    #[error("measurement ball of radius {delta} cannot be reached")]
    InfeasibleBall { delta: f64 },
    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),
    #[error("singular value decomposition failed to converge")]
    SvdFailure,
    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("lifted matrix has numerical rank {rank}, fewer than the requested {requested}")]
    RankDeficient { rank: usize, requested: usize },
    #[error("found {found} strict local maxima, fewer than the requested {requested}")]
    TooFewPeaks { found: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, MvhlError>;

pub(crate) fn shape_err(what: &'static str, expected: impl ToString, found: impl ToString) -> MvhlError {
    MvhlError::ShapeMismatch {
        what,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
