use thiserror::Error;

/// Errors produced by the model, the analytic engine and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("at least two secondary users are required, got {0}")]
    TooFewUsers(usize),

    #[error("closed forms are evaluated for at most {max} secondary users, got {n}")]
    TooManyUsers { n: usize, max: usize },

    #[error("argument {0} is outside the domain of E1 (x > 0)")]
    DomainError(f64),

    #[error("negative gain {0} passed to a density")]
    NegativeGain(f64),

    /// The arrival rate is at or beyond the relay-queue stability bound.
    #[error("arrival rate {lambda_p} is not below the stability bound {bound}")]
    Unstable { lambda_p: f64, bound: f64 },

    /// Cancellation in an alternating binomial sum exceeds the accuracy budget.
    #[error("alternating sum for N = {n} is ill-conditioned (estimated error {error_estimate:e})")]
    IllConditioned { n: usize, error_estimate: f64 },

    #[error("quadrature did not converge: error estimate {error_estimate:e} after {evaluations} evaluations")]
    NonConvergent {
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("trace of length {len} is too short, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },

    /// A queue departure was requested from an empty queue.
    #[error("protocol violation in slot {slot}: {what}")]
    Protocol { slot: u64, what: &'static str },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
