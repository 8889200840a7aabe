use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("infeasible replica vector: {0}")]
    Infeasible(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("budget multiplier search did not converge within {0} bisection steps")]
    MultiplierSearch(usize),

    /// Exhaustive search was asked to enumerate more points than allowed.
    #[error("exhaustive search needs {required} candidate vectors, cap is {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("trial {trial} did not decode within {cap} slots (|candidates| = {candidates})")]
    SlotCap { trial: u64, cap: u64, candidates: usize },
}
