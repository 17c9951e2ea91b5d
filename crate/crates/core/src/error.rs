use thiserror::Error;

use crate::slh::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("tensor dimension {dim} exceeds the cap of {cap}")]
    TensorCap { dim: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scattering matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("Hamiltonian is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("model does not satisfy the single-photon linearity conditions: {}", .0.summary())]
    Validation(Box<ValidationReport>),

    #[error("unstable stage: Re(a) = {0} must be negative")]
    Unstable(f64),

    #[error("frequency-response self-test failed at omega = 0 (residual {0:.3e})")]
    SelfTest(f64),

    #[error("feedback loop is singular: |1 - S22| = {0:.3e}")]
    SingularLoop(f64),

    #[error("time window of {span} is too short for the filter; use at least {required}")]
    GridTooShort { span: f64, required: f64 },

    #[error("time step {dt} is too coarse for the filter; use at most {max_dt}")]
    GridTooCoarse { dt: f64, max_dt: f64 },

    #[error("pulse has zero norm")]
    ZeroPulse,

    #[error("operation needs a single-stage filter; cascades are evaluated in the frequency domain")]
    MultiStage,

    #[error("model file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
