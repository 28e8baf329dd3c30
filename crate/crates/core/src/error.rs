use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("elliptic operator is singular on wavevector {0:?}")]
    SingularMode([i64; 3]),

    #[error("non-finite value encountered in {0}")]
    NumericFault(&'static str),

    #[error(
        "singular auxiliary-variable solve at step {step}: denominator {denominator:e} \
         (3/(2k)+gamma = {reference:e}, b1 = {b1:e}, b2 = {b2:e})"
    )]
    SingularScalarSolve {
        step: u64,
        denominator: f64,
        reference: f64,
        b1: f64,
        b2: f64,
    },

    #[error("solution diverged at step {step} (t = {time})")]
    Divergence { step: u64, time: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}
