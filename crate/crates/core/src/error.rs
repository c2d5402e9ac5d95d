use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two points of a diffraction layout coincide, or a layout is otherwise
    /// physically meaningless.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Operand shapes do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A matrix that must be inverted is (numerically) singular.
    #[error("singular system: condition estimate {condition:.3e}")]
    Singular { condition: f64 },

    /// NaN/Inf produced during an iterative procedure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Singular { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
