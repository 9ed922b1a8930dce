//! Crate-wide error type.

use std::fmt;
use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A line in a skeleton file could not be interpreted.
    Malformed { line: usize, message: String },
    /// Header frame count does not match the number of frame blocks.
    FrameCountMismatch { declared: usize, found: usize },
    /// A coordinate parsed to NaN or infinity.
    NonFiniteCoordinate { line: usize },
    /// Trajectory or tensor input contains a non-finite value.
    NonFiniteInput(String),
    /// Fewer samples than the quintic fit requires.
    TrajectoryTooShort { len: usize, min: usize },
    /// Determinant index out of the supported order range.
    OrderOutOfRange { order: usize, max: usize },
    /// Determinant indices are not pairwise distinct.
    RepeatedIndex { i: usize, j: usize, k: usize },
    /// A monomial ratio violates its structural constraints.
    InvalidSpec(String),
    /// Mismatched tensor/grid shapes.
    ShapeMismatch(String),
    /// Random transform bounds cannot be satisfied.
    UnsatisfiableBounds(String),
    /// NaN encountered while serializing a tensor.
    NanInTensor,
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Malformed { line, message } => {
                write!(f, "malformed input at line {line}: {message}")
            }
            Error::FrameCountMismatch { declared, found } => {
                write!(f, "frame count mismatch: header declares {declared}, found {found}")
            }
            Error::NonFiniteCoordinate { line } => {
                write!(f, "non-finite coordinate at line {line}")
            }
            Error::NonFiniteInput(what) => write!(f, "non-finite input: {what}"),
            Error::TrajectoryTooShort { len, min } => {
                write!(f, "trajectory has {len} samples, need at least {min}")
            }
            Error::OrderOutOfRange { order, max } => {
                write!(f, "derivative order {order} out of range (max {max})")
            }
            Error::RepeatedIndex { i, j, k } => {
                write!(f, "determinant indices ({i},{j},{k}) must be pairwise distinct")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid invariant spec: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::UnsatisfiableBounds(msg) => write!(f, "unsatisfiable bounds: {msg}"),
            Error::NanInTensor => write!(f, "tensor contains NaN"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
