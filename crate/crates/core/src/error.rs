use thiserror::Error;

use crate::energy::Smoothness;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("domain error: {0}")]
    Domain(String),

    /// Raised when a derivative is requested on a declared seam. The one-sided
    /// partials (below, above the seam) are attached.
    #[error("point ({}, {}) lies on seam `{seam}`", point.0, point.1)]
    Seam {
        point: (f64, f64),
        seam: String,
        below: (f64, f64),
        above: (f64, f64),
    },

    #[error("singular values too close: gap {gap:e} below separation margin {margin:e}")]
    Separation { gap: f64, margin: f64 },

    #[error("energy `{energy}` claims {claimed:?} smoothness but {required:?} is required")]
    Smoothness {
        energy: String,
        claimed: Smoothness,
        required: Smoothness,
    },

    #[error("cross term (nu1 - gamma1)(nu2 - gamma2) vanishes; c is unconstrained")]
    DegenerateCrossTerm,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at line {line}, column {column} near `{token}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        token: String,
        message: String,
    },

    #[error("unknown energy `{0}`")]
    UnknownEnergy(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
