use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("perturbation {delta:.6} rad exceeds the limit of {max:.6} rad")]
    InvalidPerturbation { delta: f64, max: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("codebook depth {levels} is too deep for {elements} azimuth elements")]
    CodebookTooDeep { levels: u32, elements: usize },

    #[error("only {available} beams fall within {window_db} dB, {requested} requested")]
    SelectionInfeasible {
        requested: usize,
        available: usize,
        window_db: f64,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate quantizer range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },

    #[error("insufficient samples: {got} trials, at least {min} required")]
    InsufficientSamples { got: usize, min: usize },

    #[error("zero single-probe entropy, the input carries no randomness")]
    ZeroEntropy,

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{scenario}: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Validation(_))
    }
}
