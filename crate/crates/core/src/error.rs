use thiserror::Error;

/// Errors raised by the importance pipeline.
///
/// Variants split into two families: bad input (the caller can fix it) and
/// numerical failure (the data are valid but a computation broke down).
/// [`Error::is_numerical`] tells them apart; the CLI maps them to distinct
/// exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("unknown response column `{0}`")]
    UnknownResponse(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("non-numeric cell {value:?} at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("regressor index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{players} players exceed the exact-enumeration cap of {cap}; use lmg with --approx sample:K")]
    TooManyPlayers { players: usize, cap: usize },
    #[error("{n} regressors exceed the factorial guard of {cap} for {what}")]
    FactorialGuard {
        n: usize,
        cap: usize,
        what: &'static str,
    },
    #[error("insufficient replicates: {0}")]
    InsufficientReplicates(String),
    #[error("no residual degrees of freedom: {0}")]
    NoResidualDf(String),
    #[error("regressor correlation matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("all raw importances are non-positive; shares are undefined")]
    NoPositiveImportance,
    #[error("variable sets differ between importance inputs: {0}")]
    LabelMismatch(String),
    #[error("invalid group specification: {0}")]
    InvalidGroups(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("bootstrap redraw cap exceeded: {0} degenerate replicates")]
    RedrawCapExceeded(usize),
}

impl Error {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_)
                | Error::NotPositiveDefinite(_)
                | Error::NoResidualDf(_)
                | Error::RedrawCapExceeded(_)
                | Error::NoPositiveImportance
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
