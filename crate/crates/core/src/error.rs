use thiserror::Error;

/// Errors produced by the solver suite.
///
/// Variants fall into two groups: controlled refusals, where the requested
/// regime lies outside what the method supports (see [`Error::is_refusal`]),
/// and genuine failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode basis is empty below the cutoff; increase the cutoff")]
    DegenerateBasis,

    #[error("quadratic part has no positive subspace at this cutoff (lambda = {lambda}); increase cutoff")]
    NoPositiveSubspace { lambda: f64 },

    #[error("state is not compatible with the basis: {0}")]
    Incompatible(String),

    #[error("grid under-resolved on axis {axis}: need at least {required} points, got {actual}")]
    UnderResolved {
        axis: usize,
        required: usize,
        actual: usize,
    },

    #[error("{stage} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("direction leaves the admissible cone (scale collapsed to {t:e})")]
    AdmissibleCone { t: f64 },

    #[error("regime not supported: {0}")]
    Refusal(String),

    #[error("ansatz requires condition (S): {0}")]
    NotSymmetric(String),

    #[error("lambda below reduced spectrum; symmetric solver restricted to definite regime (smallest reduced eigenvalue {mu_min:.6}, lambda {lambda})")]
    IndefiniteReduced { mu_min: f64, lambda: f64 },

    #[error("problem dimension {dim} exceeds oracle limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("Palais-Smale diagnostic: iterate norm grew to {norm:e} (initial {initial:e})")]
    UnboundedIterates { norm: f64, initial: f64 },

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
        /// Set when the document is well formed but requests an unsupported regime.
        refusal: bool,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for regime errors: the input is well formed but outside the
    /// hypotheses the method needs. The CLI maps these to exit status 2.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::NoPositiveSubspace { .. }
                | Error::Refusal(_)
                | Error::NotSymmetric(_)
                | Error::IndefiniteReduced { .. }
                | Error::AdmissibleCone { .. }
                | Error::DimensionTooLarge { .. }
                | Error::DegenerateBasis
                | Error::Config { refusal: true, .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
