use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A value was requested outside the mathematical domain of a formula.
    #[error("out of domain: {0}")]
    Domain(String),

    /// The exact DP state space would exceed the configured guard.
    #[error("state space of {states} states exceeds guard of {guard}; {hint}")]
    StateSpace {
        states: u128,
        guard: u128,
        hint: String,
    },

    /// A brute-force enumeration would exceed the configured guard.
    #[error("enumeration of {subsets} subsets exceeds guard of {guard}")]
    EnumerationGuard { subsets: u128, guard: u128 },

    /// A constrained optimization problem has no feasible point.
    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    /// File or stream I/O failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A text format (edge list, config) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
