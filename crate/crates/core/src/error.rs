//! Error type shared by the whole crate.

use core::fmt;

/// Everything that can go wrong in the numerical layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the admissible region (`a > 1`, `delta > 0`, ...)
    /// or an operation called outside its documented domain.
    Domain(&'static str),
    /// NaN or infinity encountered in an input or produced mid-computation.
    NonFinite(&'static str),
    /// The adaptive stepper was forced below its minimum step size,
    /// usually by a tangency or an inconsistent event specification.
    StepSizeUnderflow { t: f64, h: f64 },
    /// An event was requested between two states that do not bracket it.
    Bracket(&'static str),
    /// Adaptive quadrature failed to reach the requested tolerance.
    QuadratureFailure { estimate: f64, error: f64 },
    /// A bisection was started on an interval whose endpoints do not
    /// bracket a sign change.
    RootNotBracketed(&'static str),
    /// The displacement scan could not separate root brackets at the
    /// current grid resolution; retry with a finer grid.
    ScanInsufficient(&'static str),
    /// A classification query fell outside the coverage of the supplied
    /// diagram slice.
    OutOfCoverage { a: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::StepSizeUnderflow { t, h } => {
                write!(f, "step size underflow at t = {t} (h = {h})")
            }
            Error::Bracket(msg) => write!(f, "event not bracketed: {msg}"),
            Error::QuadratureFailure { estimate, error } => {
                write!(f, "quadrature failed to converge (I ~ {estimate}, err ~ {error})")
            }
            Error::RootNotBracketed(msg) => write!(f, "root not bracketed: {msg}"),
            Error::ScanInsufficient(msg) => write!(f, "scan insufficient: {msg}"),
            Error::OutOfCoverage { a } => write!(f, "a = {a} outside slice coverage"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
