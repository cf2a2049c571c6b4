use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("right-hand side is not reachable from the support (residual {residual:e})")]
    InfeasibleOnSupport { residual: f64 },
    #[error("matrix has rank {rank}, expected full row rank {rows}")]
    RankDeficient { rank: usize, rows: usize },
    #[error("weights must be nonnegative with at least one positive entry")]
    InvalidWeights,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("no path connects source to sink")]
    DisconnectedInstance,
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("epsilon {0} outside (0, 1/2)")]
    BadEpsilon(f64),
    #[error("step size {h} invalid for {variant}")]
    BadStepSize { h: f64, variant: &'static str },
    #[error("coordinate {index} carries flow but has zero weight")]
    ZeroWeightNonzeroFlow { index: usize },
    #[error("weight at coordinate {index} is not strictly positive")]
    NonPositiveWeight { index: usize },
    #[error("alpha enumeration needs {subsets} submatrices, over budget {budget}")]
    TooLargeForExactAlpha { subsets: u128, budget: u128 },
    #[error("oracle enumeration needs {bases} bases, over budget {budget}")]
    TooLargeForOracle { bases: u128, budget: u128 },
    #[error("step size {h:e} exceeds the barrier-lemma bound {bound:e}")]
    StepSizeHypothesisViolated { h: f64, bound: f64 },
    #[error("state is not feasible (residual {residual:e})")]
    InfeasibleState { residual: f64 },
}
