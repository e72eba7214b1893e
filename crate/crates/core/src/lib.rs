//! Simulation and equilibrium checks for rational censorship attacks on
//! blockchains.
//!
//! A launcher posts a call-to-attack contract; other nodes may join by
//! declaring their voting power. Once the declared total reaches the
//! threshold `t`, the members stop exchanging messages with everyone else and
//! split the block rewards among themselves. This crate runs the contract,
//! simulates the chain under the resulting regime, and checks by exhaustive
//! enumeration that joining truthfully is an equilibrium.

pub mod chain;
pub mod countermeasures;
pub mod cta;
pub mod error;
pub mod game;
pub mod model;
pub mod rational;

pub use chain::{AttackRegime, ChainConfig};
pub use countermeasures::{JoinModel, MultiContractSpec, RewardFunction, WinnerReport};
pub use cta::{Action, ContractStatus, OutcomeRecord, ResponseOrder, ShuffleSource};
pub use error::{CoreError, Result};
pub use game::{GameSpec, OrderDistribution, PayoffRule, StrategyProfile};
pub use model::{
    validate_scenario, NodeId, PowerDistribution, ProtocolParams, RewardLedger, TerminationPolicy, ValidationReport,
};
pub use rational::Rational;
