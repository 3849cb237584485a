use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("edge function needs at least {needed} samples per edge, edge {edge} has {got}")]
    TooFewSamples { edge: usize, needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("boundary residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    BoundaryResidual { residual: f64, tolerance: f64 },

    #[error("form domain violated: |P psi| = {0:.3e}")]
    FormDomain(f64),

    #[error("(A, B) is rank deficient")]
    RankDeficient,

    #[error("Assumption A holds, so no non-accretivity witness exists")]
    AssumptionAHolds,

    #[error("could not certify a witness direction: {0}")]
    NoWitnessDirection(String),

    #[error("boundary data cannot be projected onto the constraint space: {0}")]
    Projection(String),

    #[error("boundary condition is not quasi-m-accretive; refusing (use force to override)")]
    NotQuasiAccretive,

    #[error("linear solve failed at step {step}")]
    LinearSolve { step: usize },

    #[error("eigen decomposition failed: {0}")]
    Eigen(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Mathematical refusals (as opposed to malformed input or I/O faults).
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Precondition(_)
                | Error::RankDeficient
                | Error::AssumptionAHolds
                | Error::NotQuasiAccretive
                | Error::NoWitnessDirection(_)
        )
    }
}
