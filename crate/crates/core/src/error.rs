use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("transform kind mismatch: expected {expected:?}, got {actual:?}")]
    KindMismatch {
        expected: crate::transform::TransformKind,
        actual: crate::transform::TransformKind,
    },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("symbol is not smooth enough for spectral differentiation: {0}")]
    NonSmoothSymbol(String),

    #[error("division guard tripped at x index {x_index}, frequency {j}: |u_j(x)| = {magnitude:e}")]
    DivisionGuard { x_index: usize, j: i64, magnitude: f64 },

    #[error("symbol value on the branch cut at x index {x_index}, frequency {j}")]
    BranchCut { x_index: usize, j: i64 },

    #[error("singular resolvent: sigma(j) = lambda for j in {indices:?}")]
    SingularResolvent { indices: Vec<i64> },

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("pairing not positive for this f: value {value:e}")]
    PairingNotPositive { value: f64 },

    #[error("iteration did not converge after {iterations} steps (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
