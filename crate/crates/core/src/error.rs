use thiserror::Error;

/// Errors shared across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse rational from {input:?}")]
    ParseRational { input: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("profile is not a member of the domain")]
    ProfileOutsideDomain,

    #[error("allocation loads must be 0/1 for set systems, found {0}")]
    NonBinaryLoad(u64),

    #[error("machine costs must be positive for greedy scheduling")]
    NonPositiveCost,

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("node {0} is not present in the tree")]
    UnknownNode(usize),

    #[error("leaf outcome is deferred; no allocation is attached")]
    DeferredOutcome,

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("payment synthesis requires a graph without negative cycles")]
    NegativeCyclePresent,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter regime is infeasible: {0}")]
    InfeasibleRegime(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
