use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("integration failed at t = {t} (last accepted step h = {h:e}): {reason}")]
    IntegrationFailure { t: f64, h: f64, reason: String },

    #[error("quadrature accuracy not reached: estimate {estimate} with error {error:e}")]
    AccuracyNotReached { estimate: f64, error: f64 },

    #[error("wannier gauge fixing failed: {0}")]
    Gauge(String),

    #[error("insufficient accuracy: {0}")]
    Accuracy(String),

    #[error("averaging window too short: {0}")]
    Window(String),

    #[error("vanishing perturbative denominator: {0}")]
    DegenerateDenominator(String),

    #[error("root finding failed for m = {m}: {reason} (bracket [{lo}, {hi}])")]
    RootFinding { m: i64, lo: f64, hi: f64, reason: String },

    #[error("evolution failed at k = {k}: {source}")]
    Evolution {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the failure is a configuration/validation problem rather than a
    /// numerical one. The CLI maps the two classes onto different exit codes.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io { .. })
    }
}
