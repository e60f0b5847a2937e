use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A contract violation: the operation was called outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request exceeds what the implementation can compute reliably
    /// (e.g. difference orders beyond the binomial cap).
    #[error("capability error: {0}")]
    Capability(String),

    /// An iteration failed to converge within the allowed number of steps.
    #[error("iteration failure after {iterations} steps: {message}")]
    IterationFailure { iterations: usize, message: String },

    /// The fixed-point radicand crossed its safeguard: the solve is
    /// approaching the highest wave.
    #[error("approaching highest wave: radicand {radicand:.3e} at x = {x:.6}")]
    HighestWaveProximity { x: f64, radicand: f64 },

    /// Singular Jacobian encountered during a Newton solve.
    #[error("fold detected: singular Jacobian ({0})")]
    FoldDetected(String),

    /// Time integration blew up.
    #[error("instability: |u| exceeded blow-up threshold at t = {t:.6}")]
    Instability { t: f64 },

    /// Two independent numerical routes disagree beyond their tolerance;
    /// the resolution (n, M) is insufficient.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A degenerate configuration that must be handled separately by the
    /// caller (e.g. a measure atom at t = 1).
    #[error("degenerate case: {0}")]
    Degenerate(String),

    /// Internal inconsistency between supplied data and preconditions.
    #[error("inconsistency: {0}")]
    Inconsistency(String),

    /// Malformed configuration or input file.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
