use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, got n={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{0}")]
    InvalidParameter(String),

    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),

    /// A tail or truncation estimate exceeded its tolerance.
    #[error("unresolved: {0}")]
    Resolution(String),

    #[error("operation needs an analytic handle: {0}")]
    MissingAnalytic(&'static str),

    #[error("zero function: {0}")]
    ZeroFunction(&'static str),

    #[error("imaginary residue {residue:.3e} exceeds {limit:.3e}; multiplier symmetry is corrupted")]
    SymmetryCorruption { residue: f64, limit: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_resolution(&self) -> bool {
        matches!(self.root(), Error::Resolution(_))
    }
}

pub(crate) fn check_open(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value > lo && value < hi {
        Ok(())
    } else {
        let fmt = |v: f64| {
            if v.is_infinite() {
                "∞".to_string()
            } else {
                format!("{v}")
            }
        };
        Err(Error::param(format!(
            "{name} must lie in ({},{}), got {value}",
            fmt(lo),
            fmt(hi)
        )))
    }
}
