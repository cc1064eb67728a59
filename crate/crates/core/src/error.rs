use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("kernel must have at least one point")]
    Empty,

    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),

    #[error("tropical power must be at least 1")]
    ZeroPower,

    #[error("kernel has a cycle of negative mean {mean}; walk costs are unbounded below")]
    NegativeCycle { mean: f64 },

    #[error("kernel is not normalized: minimum cycle mean {mean} is not zero")]
    NotNormalized { mean: f64 },

    #[error("Aubry set is empty after thresholding (min |c(a,a)| = {min_diagonal})")]
    EmptyAubrySet { min_diagonal: f64 },

    #[error("function is not c-Lipschitz on the Aubry set: phi({b}) - phi({a}) exceeds c({a},{b}) by {violation}")]
    NotLipschitz { a: usize, b: usize, violation: f64 },

    #[error("potential is not a fixed point of T-: residual {residual}")]
    NotFixedPoint { residual: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("coupling marginals do not match (residual {residual})")]
    MarginalMismatch { residual: f64 },

    #[error("no point y achieves phi1(y) = phi0({x}) + c({x}, y) (gap {gap})")]
    NoSelection { x: usize, gap: f64 },

    #[error("no D-successor for point {x}")]
    NoSuccessor { x: usize },

    #[error("point {x} is not in the Aubry set")]
    NotAubry { x: usize },

    #[error("minimal stationary action {value} is not zero")]
    NonzeroMatherValue { value: f64 },

    #[error("orbit of length {0} is too short")]
    OrbitTooShort(usize),

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
