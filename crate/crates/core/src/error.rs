use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error(
        "truncation overflow at t = {time}: top-level population {population:.3e} \
         exceeds threshold {threshold:.3e} (increase dim)"
    )]
    TruncationOverflow {
        time: f64,
        population: f64,
        threshold: f64,
    },

    #[error("step size underflow at t = {time}: h = {step:.3e}")]
    StepUnderflow { time: f64, step: f64 },

    #[error("singular QFIM (det = {det:.3e}): parameters not jointly identifiable")]
    SingularQfim { det: f64 },

    #[error("quadrature grid too narrow: x_max = {x_max} < required {required}")]
    GridTooNarrow { x_max: f64, required: f64 },

    #[error("homodyne normalization failure: {0}")]
    Normalization(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Strips scenario context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
