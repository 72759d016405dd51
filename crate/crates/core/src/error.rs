use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty design matrix")]
    EmptyDesign,

    #[error("design matrix has rank 0")]
    DegenerateDesign,

    #[error("column index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("predictor {0} is not in the model")]
    NotInModel(usize),

    #[error("model size {size} exceeds rank {rank}")]
    ExceedsRank { size: usize, rank: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("prior mass is zero at model size {0}")]
    ZeroPriorMass(usize),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("search needs {needed} models but the budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("Gram matrix of the model is singular")]
    SingularGram,

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("estimator failed in replication {replication}: {source}")]
    Estimator {
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}
