use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{value} lies outside the effective domain of the graph")]
    OutsideDomain { value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("newton iteration failed at t = {time}: {iterations} iterations, residual {residual:e}")]
    NewtonFailure {
        time: f64,
        iterations: usize,
        residual: f64,
    },
    #[error("solution diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("too few states: need at least {needed}, found {found}")]
    TooFewStates { needed: usize, found: usize },
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("{0}")]
    Config(#[from] crate::config::ConfigErrors),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code, used in the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDomain(_) => "E_DOMAIN",
            Error::InvalidBasis(_) => "E_BASIS",
            Error::LengthMismatch { .. } => "E_LENGTH",
            Error::OutsideDomain { .. } => "E_OUTSIDE_DOMAIN",
            Error::InvalidParameter(_) => "E_PARAMETER",
            Error::NewtonFailure { .. } => "E_NEWTON",
            Error::Diverged { .. } => "E_DIVERGED",
            Error::TooFewStates { .. } => "E_TOO_FEW_STATES",
            Error::IncompatibleGrids(_) => "E_GRIDS",
            Error::Config(e) => e.0.first().map_or("E_CONFIG", |e| e.code),
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::Snapshot(_) => "E_SNAPSHOT",
            Error::Io(_) => "E_IO",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
