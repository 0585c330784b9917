use std::fmt;

use thiserror::Error;

/// Line/column position in a source text, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index collision: `{0}` occurs more than once")]
    IndexCollision(String),
    #[error("malformed tensor network: {0}")]
    MalformedNetwork(String),
    #[error("tensor rank {rank} exceeds the limit of {max}")]
    RankTooLarge { rank: usize, max: usize },
    #[error("qubit {0} is listed more than once")]
    RepeatedQubit(usize),
    #[error("target qubit {target} is outside 1..={total}")]
    TargetOutOfRange { target: usize, total: usize },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("Kraus operators are not trace non-increasing (defect {0:.3e})")]
    NotTraceNonIncreasing(f64),
    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: normalisation violated at location `{location}` (defect norm {defect:.3e})")]
    NormalisationViolation {
        location: String,
        defect: f64,
        pos: Pos,
    },
    #[error("unbound atomic proposition `{name}` at {pos}")]
    UnboundAtom { name: String, pos: Pos },
    #[error("no finite trace available: {0}")]
    NoTraceAvailable(String),
}

impl Error {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        Error::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
