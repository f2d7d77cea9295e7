use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FbmError>;

#[derive(Debug, Error)]
pub enum FbmError {
    #[error("Hurst index must lie in the open interval (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("time horizon must be finite and > 0, got {0}")]
    InvalidHorizon(f64),

    #[error("time arguments must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("{op}: argument outside the domain ({detail})")]
    OutOfDomain { op: &'static str, detail: String },

    #[error("grid size n={n} exceeds the configured cap {cap} for this generator")]
    GridTooLarge { n: usize, cap: usize },

    #[error("covariance matrix is not numerically positive definite (H={hurst}, n={n})")]
    FactorizationFailed { hurst: f64, n: usize },

    #[error(
        "circulant embedding has eigenvalue {value:e} below tolerance (max {max:e}, H={hurst}, n={n})"
    )]
    NegativeEigenvalue {
        value: f64,
        max: f64,
        hurst: f64,
        n: usize,
    },

    #[error("integrand is not finite at node {node} (t={time})")]
    NonFinite { node: usize, time: f64 },

    #[error("tail split requires n*s/t to be an integer (n={n}, s={s}, t={t}); choose n as a multiple of t/s")]
    NonIntegerSplit { n: usize, s: f64, t: f64 },

    #[error("path is degenerate (no variation at scale {scale}); the estimate is undefined")]
    DegeneratePath { scale: usize },

    #[error("paths live on different grids")]
    GridMismatch,

    #[error(
        "ensemble too small: n={n}, paths={paths}; need n >= {min_n} and paths >= {min_paths}"
    )]
    EnsembleTooSmall {
        n: usize,
        paths: usize,
        min_n: usize,
        min_paths: usize,
    },

    #[error("power-law fit needs strictly positive values, got {value} at t={t}")]
    NonPositiveOrdinate { t: f64, value: f64 },

    #[error("fit range [{t_min}, {t_max}] holds fewer than two grid points")]
    EmptyFitRange { t_min: f64, t_max: f64 },

    #[error("malformed path file {path}: {detail}")]
    PathFormat { path: PathBuf, detail: String },

    #[error("I/O failure on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FbmError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        FbmError::OutOfDomain {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            FbmError::FactorizationFailed { .. }
                | FbmError::NegativeEigenvalue { .. }
                | FbmError::NonFinite { .. }
                | FbmError::DegeneratePath { .. }
                | FbmError::NonPositiveOrdinate { .. }
        )
    }
}
