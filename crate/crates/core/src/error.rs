use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside {range}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("coordinate {index} out of range 1..={n}")]
    CoordinateOutOfRange { index: usize, n: usize },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("message {0} has zero probability under the sender's prior")]
    OutsideSupport(usize),

    #[error("shared index streams need perfectly shared randomness, got rho = {0}")]
    NotPerfectlyShared(f64),

    #[error("strategy mismatch: {0}")]
    StrategyMismatch(String),

    #[error("not a valid strategy vector: {0}")]
    NotMember(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    ///
    /// 2 marks a malformed configuration or input file, 3 marks parameters
    /// that are well-formed but infeasible for the requested protocol.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) => 2,
            _ => 3,
        }
    }
}
