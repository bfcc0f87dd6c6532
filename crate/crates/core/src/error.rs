use thiserror::Error;

use crate::partition::PartitionViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// `v_i(S)` is undefined when `i` is not in `S`.
    #[error("valuation undefined: agent {agent} is not a member of the coalition")]
    NotAMember { agent: usize },

    #[error("agent index {agent} is out of range for n = {n}")]
    AgentOutOfRange { agent: usize, n: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(#[from] PartitionViolation),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distribution is not lambda-bounded (explicit family support)")]
    UnboundedLambda,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration over n = {n} agents exceeds the guard of {limit} (set EPSFC_MAX_N to override)")]
    GuardExceeded { n: usize, limit: usize },

    #[error("learning failed: valuations of agents {:?} are under-determined by the sample", one_based(.agents))]
    Underdetermined { agents: Vec<usize> },

    #[error("inconsistent sample: {0}")]
    InconsistentSample(String),

    #[error("no samples: the mean coalition size is undefined")]
    NoSamples,

    #[error("empty size interval: {0}")]
    EmptyInterval(String),

    #[error("search exhausted {attempts} attempts without a hit")]
    NotFound { attempts: u64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn one_based(agents: &[usize]) -> Vec<usize> {
    agents.iter().map(|a| a + 1).collect()
}
