use thiserror::Error;

/// Errors raised by the domain, solver and enumeration layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LerwError {
    #[error("domain size n = {0} is out of range (expected 2 <= n <= {max})", max = crate::lattice::MAX_N)]
    DomainSize(i64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    /// A factorization produced a nonpositive pivot or a quantity that must be
    /// positive came out nonpositive. Never silently absolute-valued.
    #[error("numerical diagnostic: {0}")]
    Numerical(String),
}

impl LerwError {
    pub fn precondition(msg: impl Into<String>) -> Self {
        LerwError::Precondition(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        LerwError::Numerical(msg.into())
    }

    /// `true` for errors that come from floating-point diagnostics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, LerwError::Numerical(_))
    }

    /// Prefixes the message with the domain size it arose at.
    pub fn at_n(self, n: u32) -> Self {
        match self {
            LerwError::Precondition(m) => LerwError::Precondition(format!("n = {n}: {m}")),
            LerwError::CapExceeded(m) => LerwError::CapExceeded(format!("n = {n}: {m}")),
            LerwError::Numerical(m) => LerwError::Numerical(format!("n = {n}: {m}")),
            e @ LerwError::DomainSize(_) => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, LerwError>;
