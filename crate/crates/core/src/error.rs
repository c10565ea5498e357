use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive-definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid trajectory '{id}': {reason}")]
    InvalidTrajectory { id: String, reason: String },

    #[error("insufficient data: pooled weight {weight} < dimension {dim}")]
    InsufficientData { weight: usize, dim: usize },

    #[error("covariance estimate is singular")]
    SingularEstimate,

    #[error("degenerate variance: residuals are identically zero")]
    DegenerateVariance,

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid triplet ({start}, {mid}, {end}) for sequence of horizon {horizon}")]
    InvalidTriplet {
        start: usize,
        mid: usize,
        end: usize,
        horizon: usize,
    },

    #[error("triplet sampling needs horizon >= 4, sequence '{id}' has {horizon}")]
    TripletInfeasible { id: String, horizon: usize },

    #[error("training diverged at epoch {epoch}: loss {loss} (initial {initial})")]
    Diverged { epoch: usize, loss: f64, initial: f64 },

    #[error("no non-identity block permutation exists ({blocks} block(s))")]
    NoNontrivialPermutation { blocks: usize },

    #[error("cannot place {windows} disjoint windows of size {size} in {len} points")]
    InfeasibleWindows {
        windows: usize,
        size: usize,
        len: usize,
    },

    #[error("empty set")]
    EmptySet,

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("trajectory '{id}': {source}")]
    AtTrajectory {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {field}: {message}")]
    Format {
        line: usize,
        field: String,
        message: String,
    },
}

impl Error {
    pub(crate) fn at(id: &str, source: Error) -> Self {
        Error::AtTrajectory {
            id: id.to_string(),
            source: Box::new(source),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::SingularEstimate
            | Error::DegenerateVariance
            | Error::Diverged { .. } => true,
            Error::AtTrajectory { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
