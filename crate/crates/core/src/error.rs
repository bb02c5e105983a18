use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("agent index {agent} out of range (n = {num_agents})")]
    AgentOutOfRange { agent: usize, num_agents: usize },
    #[error("item index {item} out of range (m = {num_items})")]
    ItemOutOfRange { item: usize, num_items: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("certificate has no witness for agent {agent}")]
    IncompleteCertificate { agent: usize },
    #[error("evaluation budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}
