use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),

    /// The prior puts no mass where the evidence has positive likelihood.
    #[error("incompatible prior/evidence: {0}")]
    Incompatible(String),

    #[error("prior is not a mixture")]
    NotMixed,

    #[error("component index {index} out of range for mixture of {len}")]
    ComponentIndex { index: usize, len: usize },

    #[error("no plan for lot size {lot_size} at AQL {aql}")]
    NoPlan { lot_size: u64, aql: f64 },

    #[error("plan table line {line}, column {column}: {message}")]
    PlanParse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("plan table: overlapping lot ranges for AQL {aql}: [{first_min}, {first_max}] and [{second_min}, {second_max}]")]
    PlanOverlap {
        aql: f64,
        first_min: u64,
        first_max: u64,
        second_min: u64,
        second_max: u64,
    },

    #[error("exact enumeration refused: population {population} exceeds limit {limit}")]
    CostGuard { population: u64, limit: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
