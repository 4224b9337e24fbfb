use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("observation {index}: time must be finite and nonnegative, got {value}")]
    InvalidTime { index: usize, value: f64 },

    #[error("argument is NaN")]
    NanArgument,

    #[error("integrand is not finite at weighted observation {index} (time {time})")]
    NonFiniteIntegrand { index: usize, time: f64 },

    /// The requested estimator is undefined for the censoring pattern of the
    /// last two observations.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("resampling failed: {failed} of {total} resamples could not be fit")]
    ResamplingFailed { failed: usize, total: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("rejection sampling infeasible: no dataset satisfied {constraint} in {attempts} attempts")]
    Infeasible { constraint: String, attempts: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numeric failures (calibration, fitting, sampling) as opposed to bad
    /// input or configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Calibration(_)
                | Error::Infeasible { .. }
                | Error::RankDeficient(_)
                | Error::ResamplingFailed { .. }
                | Error::NonFiniteIntegrand { .. }
        )
    }
}
