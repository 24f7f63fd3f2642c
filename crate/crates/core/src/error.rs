use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("parse error at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("covariance matrix is numerically indefinite (min/max eigenvalue ratio {ratio:e})")]
    NotPositiveDefinite { ratio: f64 },

    #[error("posterior is improper: {effective} effective observations, need more than {required}")]
    ImproperPosterior { effective: usize, required: usize },

    #[error("nonlinear restriction: {0}")]
    NonlinearRestriction(String),

    #[error("{attempts} consecutive unstable reduced-form draws")]
    UnstableDraws { attempts: usize },

    #[error("acceptance rate below {threshold:e} after {attempts} attempts; the restrictions look implausible for these data")]
    LowAcceptance { attempts: usize, threshold: f64 },

    #[error("every draw has an empty conditional identified set (zero plausibility)")]
    ZeroPlausibility,

    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },

    #[error("boundary case: {0}")]
    BoundaryCase(String),

    #[error("narrative proxy undefined: {0}")]
    ProxyUndefined(String),

    #[error("numerical contradiction: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
