use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Smallest frame-operator eigenvalue relative to the largest one.
    #[error("not a frame at this (a, M): eigenvalue ratio {ratio:.3e} (a = {a}, M = {m})")]
    NotAFrame { a: usize, m: usize, ratio: f64 },

    #[error("periodization needs {required} terms, limit is {limit}")]
    PeriodizationTooWide { required: usize, limit: usize },

    /// Every tap but one is zero, so the distance to a Gaussian keeps shrinking as λ → 0.
    #[error("degenerate window: single nonzero tap, fit is unbounded below")]
    DegenerateWindow,

    #[error("λ = {lambda} implies a window support beyond L = {len}")]
    SupportTooLarge { lambda: f64, len: usize },

    #[error("numerical failure at iteration {iteration}: {reason}")]
    Numerical { iteration: usize, reason: String },

    #[error("{path}: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::InvalidGrid(_) => 1,
            Error::Data { .. } | Error::Io(_) | Error::Dimension(_) | Error::NonFinite(_) => 2,
            Error::NotAFrame { .. }
            | Error::PeriodizationTooWide { .. }
            | Error::DegenerateWindow
            | Error::SupportTooLarge { .. }
            | Error::Numerical { .. } => 3,
        }
    }
}
