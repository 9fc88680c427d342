use thiserror::Error;

/// Errors raised by the laboratory. Each variant maps onto one CLI exit class,
/// see [`LabError::exit_code`].
#[derive(Debug, Error)]
pub enum LabError {
    #[error("layout error: expected {expected}, found {found}")]
    Layout {
        expected: &'static str,
        found: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate resonance at xi = {xi}, xi1 = {xi1}: {reason}")]
    DegenerateResonance {
        xi: String,
        xi1: String,
        reason: &'static str,
    },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("instability: {0}")]
    Instability(String),

    #[error("reality error: imaginary residue {0:e} exceeds 1e-10")]
    Reality(f64),

    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("refusing to emit an empty record")]
    EmptyRecord,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// 1 precondition/parameter failures, 2 numerical failures, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Resolution(_)
            | LabError::Divergence(_)
            | LabError::Instability(_)
            | LabError::Reality(_)
            | LabError::Range(_) => 2,
            LabError::Io(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
