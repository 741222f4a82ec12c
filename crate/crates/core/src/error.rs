use thiserror::Error;

use crate::numcore::Support;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(f64),

    #[error("argument {0} must be strictly negative")]
    NonNegativeLogArgument(f64),

    #[error("value {n} lies outside the support {support}")]
    OutOfSupport { n: i64, support: Support },

    #[error("support {0} is empty")]
    EmptySupport(Support),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("{family} does not accept support {support}")]
    UnsupportedSupport { family: &'static str, support: Support },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("|n - mu| = {distance} exceeds the summation window {window}; mass is below truncation error")]
    TruncationUnsound { distance: f64, window: u32 },

    #[error("enumeration window of {size} integers exceeds the budget of {budget}")]
    EnumerationBudget { size: u64, budget: u64 },

    #[error("parameter {name} = {value} is within {margin} of a boundary or non-smooth point")]
    BoundaryProximity { name: String, value: f64, margin: f64 },

    #[error("mixture components must share one family (found {0})")]
    HeterogeneousMixture(String),
}
