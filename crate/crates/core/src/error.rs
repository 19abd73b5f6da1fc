use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants are grouped by the stage that raises them; [`Error::kind`]
/// collapses them into the coarse categories the CLI maps to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    // series
    #[error("value {value} at index {index} is outside the domain of the {transform} transform")]
    Domain {
        transform: &'static str,
        index: usize,
        value: f64,
    },
    #[error("series of length {len} is too short: {reason}")]
    Length { len: usize, reason: String },
    #[error("calendar month {0} received no weekly observations")]
    EmptyMonth(String),
    #[error("period range {from}..={to} is outside the series index")]
    Range { from: String, to: String },
    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    // diagnostics
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("Ljung-Box degrees of freedom must be positive (lags {lags}, fitted parameters {fitted})")]
    DegreeOfFreedom { lags: usize, fitted: usize },

    // engine
    #[error("invalid model specification: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("model has {expected} covariates but {got} future covariate paths were supplied (need length >= {horizon})")]
    ExogMissing {
        expected: usize,
        got: usize,
        horizon: usize,
    },
    #[error("autoregressive polynomial is not stationary; refusing to simulate an explosive process")]
    Instability,

    // selection / scenarios
    #[error("every candidate in the grid failed to fit")]
    AllCandidatesFailed,
    #[error("candidate grid has {size} entries, above the configured maximum of {max}")]
    GridTooLarge { size: usize, max: usize },
    #[error("series are not aligned: {0}")]
    Alignment(String),
    #[error("window error: {0}")]
    Window(String),

    // ingest
    #[error("{file}: parse error at row {row}, column '{column}': {message}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{file}: gap in dates, expected period {missing}")]
    Gap { file: String, missing: String },
    #[error("{file}: row {row} has non-positive value {value} but a log transform is configured")]
    NegativeValue { file: String, row: usize, value: f64 },
    #[error("network error: {0}")]
    Network(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error category used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::GridTooLarge { .. } | Error::InvalidModel(_) => ErrorKind::Config,
            Error::Numerical(_)
            | Error::Instability
            | Error::AllCandidatesFailed
            | Error::Degenerate(_) => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
