use thiserror::Error;

/// Errors raised by the numerical kernels, the integrators and the model catalog.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JhiError {
    #[error("singular series: division by a series with zero constant term")]
    SingularSeries,

    #[error("truncation orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },

    #[error("derivative of order {requested} requested from a series truncated at order {order}")]
    TruncationOrder { requested: usize, order: usize },

    #[error("{function}: argument {value} outside the function's domain")]
    Domain { function: &'static str, value: f64 },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("singular scale: the homogeneity coordinate t vanished")]
    SingularScale,

    #[error("invalid scale factor {0}: the homogeneity action needs z != 0")]
    InvalidScale(f64),

    #[error("cotangent lift failed: coordinate-change Jacobian is singular")]
    LiftSingular,

    #[error("state left the bi-realization domain ({0}); reduce the step size")]
    OutOfDomain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate step: Newton matrix is singular")]
    DegenerateStep,

    #[error("step {index} failed: {source}")]
    StepFailure {
        index: usize,
        #[source]
        source: Box<JhiError>,
    },

    #[error("incompatible grids: {0}")]
    GridMismatch(String),
}

impl JhiError {
    /// True for user-facing configuration problems as opposed to numerical failures.
    pub fn is_configuration(&self) -> bool {
        match self {
            JhiError::Configuration(_) | JhiError::Capability(_) | JhiError::GridMismatch(_) => true,
            JhiError::StepFailure { source, .. } => source.is_configuration(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, JhiError>;
