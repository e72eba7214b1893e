use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("not a number: {0:?}")]
    BadNumber(String),
    #[error("epsilon {0} must lie in (0, 1] with 1/epsilon an integer")]
    InvalidEpsilon(String),
    #[error("power {value} is not a multiple of epsilon 1/{resolution} in [0, 1]")]
    OffGrid { value: String, resolution: u64 },
    #[error("power distribution needs at least one node and a positive resolution")]
    EmptyDistribution,
    #[error("power grid needs n >= 2 nodes (got {0})")]
    GridTooSmall(usize),
    #[error("node {0} is out of range")]
    UnknownNode(NodeId),
    #[error("ledger has no elapsed blocks")]
    NoBlocks,
    #[error("node {0} already responded to the contract")]
    DuplicateResponder(NodeId),
    #[error("contract is no longer open")]
    ContractClosed,
    #[error("the launcher cannot respond to its own contract")]
    LauncherResponded,
    #[error("response order is invalid: {0}")]
    BadOrder(String),
    #[error("{responders} responders exceed the exact-enumeration cap of {cap}")]
    TooManyResponders { responders: usize, cap: usize },
    #[error("scenario is not runnable: {0}")]
    InvalidScenario(String),
    #[error("attack regime is invalid: {0}")]
    InvalidRegime(String),
    #[error("game tree too large to render: {0}")]
    TreeTooLarge(String),
    #[error("reward function: {0}")]
    RewardFunction(String),
    #[error("multi-contract spec: {0}")]
    MultiContract(String),
    #[error("coalitions {first} and {second} both reached the threshold")]
    DoubleWinner { first: usize, second: usize },
    #[error("active-node history needs at least two samples (got {0})")]
    ShortHistory(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
