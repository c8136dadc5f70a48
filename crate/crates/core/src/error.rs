use std::fmt;

use thiserror::Error;

/// Syntax or grammar error in a map-definition source, with a byte offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error {0}")]
    Parse(ParseError),

    #[error("missing field '{0}' in map definition")]
    MissingField(&'static str),

    #[error("twist condition fails at ({x:.6}, {y:.6}): k + d(phi1)/dy = {value:.6e} does not have the sign of k")]
    TwistViolation { x: f64, y: f64, value: f64 },

    #[error("deck equivariance fails: max deviation {deviation:.3e} at ({x:.6}, {y:.6})")]
    DeckViolation { deviation: f64, x: f64, y: f64 },

    #[error("could not bracket the generating-function root after {expansions} expansions (twist constant misestimated?)")]
    BracketFailure { expansions: usize },

    #[error("orbit left the admissible displacement range after {iterations} iterations (|y| = {y:.3e})")]
    Overflow { iterations: usize, y: f64 },

    #[error("grid of {cells} cells exceeds the configured cap of {cap}")]
    ResourceLimit { cells: usize, cap: usize },

    #[error("no roots of the fiber equation on any fiber for (s, q) = ({s}, {q})")]
    EmptyRootSet { s: i64, q: u32 },

    #[error("free-curve validation failed: clearance {clearance:.3e}")]
    ValidationFailed { clearance: f64 },

    #[error("iterate {iteration} leaves the region below its predecessor at ({x:.6}, {y:.6})")]
    NestingViolation { iteration: usize, x: f64, y: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("orbit kind mismatch: {0}")]
    KindMismatch(String),

    #[error("certificate format error at line {line}: {message}")]
    CertificateFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
