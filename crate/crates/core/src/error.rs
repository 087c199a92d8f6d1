use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("displacement |alpha| = {alpha:.4} too large for cutoff {dim} (truncation defect {defect:.3e})")]
    Truncation { alpha: f64, dim: usize, defect: f64 },

    #[error("free evolution diverged: {0}")]
    IntegrationDiverged(String),

    #[error("Fock cutoff {dim} inadequate: population {population:.3e} in the top levels")]
    CutoffInadequate { dim: usize, population: f64 },

    #[error("Wigner grid integral {integral:.6} deviates from 1; extent too small")]
    MassDefect { integral: f64 },

    #[error("series too short: need more than {needed} samples, have {len}")]
    SeriesTooShort { needed: usize, len: usize },

    #[error("spectral window too short: need at least {needed} samples, have {len}")]
    WindowTooShort { needed: usize, len: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("at kick {kick}: {source}")]
    AtKick {
        kick: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_kick(self, kick: usize) -> Self {
        Error::AtKick {
            kick,
            source: Box::new(self),
        }
    }

    /// Strips any kick-index wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtKick { source, .. } => source.root(),
            other => other,
        }
    }
}
