use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix had the wrong length.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A structural parameter (dimension, layer width, count) is out of range.
    InvalidArgument(&'static str),
    /// A backward pass was handed a trace from other parameters or shapes.
    StaleTrace,
    /// A non-finite value appeared; `index` locates it (sample, step, ...).
    NonFinite { what: &'static str, index: usize },
    /// Training diverged.
    Diverged { epoch: usize, step: usize },
    /// A matrix expected to be in SO(N) is not orthogonal.
    NotOrthogonal { residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::StaleTrace => f.write_str("trace does not match the current parameters"),
            Error::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Error::Diverged { epoch, step } => {
                write!(f, "training diverged at epoch {epoch}, step {step}")
            }
            Error::NotOrthogonal { residual } => {
                write!(f, "matrix is not orthogonal (|g^T g - I|_inf = {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
