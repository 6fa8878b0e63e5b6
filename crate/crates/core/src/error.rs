use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical and combinatorial kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Input {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("integer multiplier {0} exceeds 2^62")]
    Overflow(u64),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("result out of floating point range: {0}")]
    Range(String),

    #[error("size cap exceeded: {0}")]
    Size(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no eigenvalues within {t} of energy {energy}")]
    EmptyWindow { energy: f64, t: f64 },

    #[error("graph invariant violated: {0}")]
    Invariant(String),

    #[error("precondition violated: {0}")]
    Contract(String),

    #[error("degenerate walk: {0}")]
    Degenerate(String),

    #[error("cannot fit decay: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
