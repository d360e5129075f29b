use std::fmt;

/// Errors produced by the state algebra, the detection analysis and the
/// imaging simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The analyzer sandwich of a state returned a complex number, which means
    /// the matrix was not Hermitian to begin with.
    #[error("corrupted state: detection amplitude has imaginary part {imaginary:e}")]
    CorruptedState { imaginary: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A Bell-diagonal parameter triple outside the positivity tetrahedron.
    #[error("Bell-diagonal parameters not positive: eigenvalue {label} = {value:e}")]
    NotPositive { label: BellLabel, value: f64 },

    #[error("degenerate channel: zero total detection probability")]
    DegenerateChannel,

    #[error("likelihood threshold undefined for d = 0 with lambda != 1")]
    UndefinedThreshold,

    #[error("no intruder scenario reaches jamming level {level} (band ±{band})")]
    InfeasibleLevel { level: f64, band: f64 },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("malformed image file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Bell basis vectors, in the order used for Bell-diagonal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellLabel {
    /// (|HH⟩ + |VV⟩)/√2
    PhiPlus,
    /// (|HH⟩ − |VV⟩)/√2
    PhiMinus,
    /// (|HV⟩ + |VH⟩)/√2
    PsiPlus,
    /// (|HV⟩ − |VH⟩)/√2
    PsiMinus,
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
        })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
