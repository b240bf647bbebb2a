use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A caller broke a documented precondition (dimension mismatch,
    /// out-of-range argument, wrong architecture).
    Contract(String),
    /// Non-finite data where finite values are required; the message names
    /// the offending location.
    NonFinite(String),
    /// A gradient buffer contained NaN/Inf; carries the layer index.
    NonFiniteGradient { layer: usize },
    /// The eigensolver did not reduce the off-diagonal norm below tolerance
    /// within the sweep cap.
    Convergence { sweeps: usize, off_diagonal: f64 },
    Io(std::io::Error),
    /// Malformed file content (checkpoint, image, grid sidecar).
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::NonFiniteGradient { layer } => {
                write!(f, "non-finite gradient in layer {layer}")
            }
            Error::Convergence {
                sweeps,
                off_diagonal,
            } => write!(
                f,
                "eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:.3e})"
            ),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
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

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

/// Bails with a `Contract` error unless the condition holds.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err($crate::error::Error::Contract(format!($($arg)*)));
        }
    };
}

pub(crate) use ensure;
