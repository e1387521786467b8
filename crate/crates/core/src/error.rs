use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("angle {0} rad is outside the array's visible range [-pi/2, pi/2]")]
    AngleOutOfRange(f64),

    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("degenerate geometry: positions coincide")]
    DegenerateGeometry,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pilot auto-covariance is rank deficient (L = {pilots}, n = {elements})")]
    RankDeficient { pilots: usize, elements: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("angle grid is empty")]
    EmptyGrid,

    #[error("bound is undefined: {0}")]
    UndefinedBound(String),

    #[error("malformed message: {0}")]
    Malformed(String),

    #[error("malformed beacon: {0}")]
    MalformedBeacon(String),

    #[error("session has already finished")]
    SessionFinished,

    #[error("cryptographic failure: {0}")]
    Crypto(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidArray(_)
            | Error::AngleOutOfRange(_)
            | Error::EmptyGrid => 1,
            _ => 2,
        }
    }
}
