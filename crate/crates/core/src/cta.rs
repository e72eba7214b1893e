//! The call-to-attack contract: a registry that admits `(node, declared
//! power)` pairs until the declared sum reaches the threshold or the timeout
//! expires, plus the chance process that orders responders.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{NodeId, PowerDistribution, ProtocolParams, TerminationPolicy};
use crate::rational::{self, Rational};

/// A responder's move: stay out, or join declaring a power on the grid
/// (in grid units).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Abstain,
    Declare(u64),
}

impl Action {
    pub fn declared(self) -> Option<u64> {
        match self {
            Action::Abstain => None,
            Action::Declare(units) => Some(units),
        }
    }

    pub fn label(self, resolution: u64) -> String {
        match self {
            Action::Abstain => "⊥".to_string(),
            Action::Declare(units) => {
                rational::format_rational(&rational::ratio(units as i64, resolution as i64))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredResponse {
    pub node: NodeId,
    pub declared_units: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseOrder(pub Vec<NodeId>);

impl ResponseOrder {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }
}

impl fmt::Display for ResponseOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractStatus {
    Open,
    Succeeded,
    Aborted,
}

/// Parameters a contract instance needs on every transition, resolved once
/// at launch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContractRules {
    pub resolution: u64,
    pub threshold_units: u64,
    pub eta: usize,
    pub timeout: u64,
    pub policy: TerminationPolicy,
}

impl ContractRules {
    pub fn from_params(params: &ProtocolParams) -> Result<Self> {
        let resolution = params.resolution()?;
        Ok(Self {
            resolution,
            threshold_units: params.threshold_units(resolution),
            eta: params.eta,
            timeout: params.timeout,
            policy: params.policy,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtaState {
    launcher: NodeId,
    launcher_declared: u64,
    accumulated: u64,
    coalition: Vec<NodeId>,
    members: Vec<bool>,
    clock: u64,
    status: ContractStatus,
    rules: ContractRules,
}

/// Opens a contract for a population of `population` nodes. If the launcher's
/// own declaration already satisfies the closing condition the contract is
/// returned closed.
pub fn launch(launcher: NodeId, declared: &Rational, population: usize, params: &ProtocolParams) -> Result<CtaState> {
    let units = params.to_units(declared)?;
    CtaState::open(launcher, units, population, ContractRules::from_params(params)?)
}

impl CtaState {
    pub fn open(launcher: NodeId, declared_units: u64, population: usize, rules: ContractRules) -> Result<Self> {
        if launcher.0 >= population {
            return Err(CoreError::UnknownNode(launcher));
        }
        if declared_units > rules.resolution {
            return Err(CoreError::OffGrid {
                value: format!("{declared_units}/{}", rules.resolution),
                resolution: rules.resolution,
            });
        }
        let mut members = vec![false; population];
        members[launcher.0] = true;
        let mut state = Self {
            launcher,
            launcher_declared: declared_units,
            accumulated: declared_units,
            coalition: vec![launcher],
            members,
            clock: 0,
            status: ContractStatus::Open,
            rules,
        };
        state.close_if_done();
        Ok(state)
    }

    pub fn launcher(&self) -> NodeId {
        self.launcher
    }

    pub fn launcher_declared(&self) -> u64 {
        self.launcher_declared
    }

    /// Declared power sum `V`, in grid units.
    pub fn accumulated(&self) -> u64 {
        self.accumulated
    }

    pub fn accumulated_fraction(&self) -> Rational {
        rational::ratio(self.accumulated as i64, self.rules.resolution as i64)
    }

    /// Members in admission order, launcher first.
    pub fn coalition(&self) -> &[NodeId] {
        &self.coalition
    }

    pub fn is_member(&self, node: NodeId) -> bool {
        self.members.get(node.0).copied().unwrap_or(false)
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn status(&self) -> ContractStatus {
        self.status
    }

    pub fn is_open(&self) -> bool {
        self.status == ContractStatus::Open
    }

    pub fn rules(&self) -> &ContractRules {
        &self.rules
    }

    fn excluded_count(&self) -> usize {
        self.members.len() - self.coalition.len()
    }

    fn closing_condition(&self) -> bool {
        let enough = self.accumulated >= self.rules.threshold_units;
        match self.rules.policy {
            TerminationPolicy::PowerOnly => enough,
            TerminationPolicy::PowerAndVisibility => enough && self.excluded_count() < self.rules.eta,
        }
    }

    fn close_if_done(&mut self) {
        if self.is_open() && self.closing_condition() {
            self.status = ContractStatus::Succeeded;
        }
    }

    pub fn apply_response(&mut self, response: DeclaredResponse) -> Result<()> {
        if !self.is_open() {
            return Err(CoreError::ContractClosed);
        }
        let node = response.node;
        if node.0 >= self.members.len() {
            return Err(CoreError::UnknownNode(node));
        }
        if node == self.launcher {
            return Err(CoreError::LauncherResponded);
        }
        if self.members[node.0] {
            return Err(CoreError::DuplicateResponder(node));
        }
        if response.declared_units > self.rules.resolution {
            return Err(CoreError::OffGrid {
                value: format!("{}/{}", response.declared_units, self.rules.resolution),
                resolution: self.rules.resolution,
            });
        }
        self.members[node.0] = true;
        self.coalition.push(node);
        self.accumulated += response.declared_units;
        self.close_if_done();
        Ok(())
    }

    /// Advances the contract clock by one block; an open contract that has not
    /// met its closing condition by the timeout aborts.
    pub fn tick(&mut self) -> Result<()> {
        if !self.is_open() {
            return Err(CoreError::ContractClosed);
        }
        self.clock += 1;
        if self.clock >= self.rules.timeout {
            self.status = ContractStatus::Aborted;
        }
        Ok(())
    }
}

/// One resolved play of the contract followed by the censorship phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub success: bool,
    pub contract_status: ContractStatus,
    pub coalition: Vec<NodeId>,
    pub excluded: Vec<NodeId>,
    #[serde(with = "rational::serde_str")]
    pub coalition_true_power: Rational,
    pub order: ResponseOrder,
    pub seed: Option<u64>,
}

/// Lightweight outcome used by the exact enumerators; no allocation beyond
/// the member mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub status: ContractStatus,
    pub success: bool,
    pub members: Vec<bool>,
    pub true_units: u64,
    pub declared_units: u64,
    pub size: usize,
}

/// Runs the contract with responses arriving in `order`, then decides whether
/// the attack actually works: the contract only sees declared power, but the
/// censored network keeps functioning only if the coalition's true power
/// reaches the threshold.
///
/// `actions` is indexed by node id; the launcher's entry is ignored.
pub fn run_contract(
    powers: &PowerDistribution,
    params: &ProtocolParams,
    launcher: NodeId,
    launcher_declared: u64,
    actions: &[Action],
    order: &ResponseOrder,
    seed: Option<u64>,
) -> Result<OutcomeRecord> {
    let rules = ContractRules::from_params(params)?;
    let resolution = resolve_contract(powers, &rules, launcher, launcher_declared, actions, order)?;
    let mut coalition = Vec::with_capacity(resolution.size);
    let mut excluded = Vec::new();
    for node in powers.nodes() {
        if resolution.members[node.0] {
            coalition.push(node);
        } else {
            excluded.push(node);
        }
    }
    Ok(OutcomeRecord {
        success: resolution.success,
        contract_status: resolution.status,
        coalition,
        excluded,
        coalition_true_power: rational::ratio(resolution.true_units as i64, powers.resolution() as i64),
        order: order.clone(),
        seed,
    })
}

pub(crate) fn check_order(launcher: NodeId, actions: &[Action], order: &ResponseOrder) -> Result<()> {
    let mut seen = vec![false; actions.len()];
    for &node in order.nodes() {
        if node.0 >= actions.len() {
            return Err(CoreError::BadOrder(format!("{node} is not a node")));
        }
        if node == launcher {
            return Err(CoreError::BadOrder("launcher appears in the order".into()));
        }
        if actions[node.0] == Action::Abstain {
            return Err(CoreError::BadOrder(format!("{node} abstained")));
        }
        if std::mem::replace(&mut seen[node.0], true) {
            return Err(CoreError::BadOrder(format!("{node} appears twice")));
        }
    }
    let responders = actions
        .iter()
        .enumerate()
        .filter(|&(i, a)| i != launcher.0 && *a != Action::Abstain)
        .count();
    if responders != order.nodes().len() {
        return Err(CoreError::BadOrder(format!(
            "order has {} nodes but {responders} responded",
            order.nodes().len()
        )));
    }
    Ok(())
}

pub fn resolve_contract(
    powers: &PowerDistribution,
    rules: &ContractRules,
    launcher: NodeId,
    launcher_declared: u64,
    actions: &[Action],
    order: &ResponseOrder,
) -> Result<Resolution> {
    if actions.len() != powers.len() {
        return Err(CoreError::BadOrder(format!(
            "{} actions for {} nodes",
            actions.len(),
            powers.len()
        )));
    }
    check_order(launcher, actions, order)?;
    let mut state = CtaState::open(launcher, launcher_declared, powers.len(), *rules)?;
    for &node in order.nodes() {
        let Some(declared_units) = actions[node.0].declared() else {
            continue;
        };
        if !state.is_open() {
            log::trace!("contract closed; ignoring late response from {node}");
            continue;
        }
        state.apply_response(DeclaredResponse { node, declared_units })?;
        if state.is_open() {
            state.tick()?;
        }
    }
    while state.is_open() {
        state.tick()?;
    }
    let true_units = powers.sum_units(state.coalition());
    let success = state.status() == ContractStatus::Succeeded && true_units >= rules.threshold_units;
    Ok(Resolution {
        status: state.status(),
        success,
        true_units,
        declared_units: state.accumulated(),
        size: state.coalition().len(),
        members: state.members,
    })
}

/// Seeded source of uniformly random response orders.
#[derive(Clone, Debug)]
pub struct ShuffleSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl ShuffleSource {
    pub const ALGORITHM: &'static str = "chacha8/fisher-yates";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Draws the next uniformly random permutation of `responders`.
pub fn sample_order(responders: &[NodeId], source: &mut ShuffleSource) -> ResponseOrder {
    let mut order = responders.to_vec();
    order.shuffle(source.rng());
    ResponseOrder(order)
}
