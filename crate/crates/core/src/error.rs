use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("evaluator failed at {point:?}: {message}")]
    Evaluator { point: Vec<f64>, message: String },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("finite-difference stencil reaches the origin at {0:?}")]
    StencilAtOrigin(Vec<f64>),

    #[error(
        "cost budget exceeded: {calls} evaluator calls against a budget of {budget}; \
         use the product/mixed path or a smaller M"
    )]
    CostBudget { calls: u128, budget: u64 },

    #[error("invalid exponent: {0}")]
    Exponent(String),

    #[error("invalid index data: {0}")]
    Index(String),

    #[error("atom construction failed: {0}")]
    Atom(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
