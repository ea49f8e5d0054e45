use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An adaptive integration or root search stopped before reaching its tolerance.
    #[error("numeric failure in {what}: achieved error {achieved:.3e} (target {target:.3e})")]
    NumericFailure {
        what: String,
        achieved: f64,
        target: f64,
    },

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("sampler failure at beta = {beta}: {scheme} scheme made {proposals} proposals without acceptance")]
    SamplerFailure {
        beta: f64,
        scheme: &'static str,
        proposals: u64,
    },

    #[error("sampler precondition violated at beta = {beta}: {reason}")]
    SamplerPrecondition { beta: f64, reason: String },

    #[error("run failure: {0}")]
    RunFailure(String),

    #[error("model is not light-tailed: {0}")]
    NotLightTailed(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("replication {index} (stream seed {seed:#018x}) failed: {source}")]
    Replication {
        index: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("validation failed: {0}")]
    ValidationFailure(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    /// Process exit status for the command-line tool: 2 for configuration
    /// problems, 4 for failed validation, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. } => 2,
            Error::ValidationFailure(_) => 4,
            _ => 3,
        }
    }

    /// Unwraps replication context down to the originating error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replication { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
