//! Discrete-time block production with the censorship filter applied by
//! coalition members once the attack is triggered.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::countermeasures::RewardFunction;
use crate::error::{CoreError, Result};
use crate::model::{cost_of_strategy, NodeId, PowerDistribution, ProtocolParams, RewardLedger};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub powers: PowerDistribution,
    pub params: ProtocolParams,
    pub horizon: u64,
    pub reward: RewardFunction,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(powers: PowerDistribution, params: ProtocolParams, horizon: u64, seed: u64) -> Self {
        Self {
            powers,
            params,
            horizon,
            reward: RewardFunction::default(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRegime {
    pub active: bool,
    pub coalition: Vec<NodeId>,
    pub trigger_block: u64,
}

impl AttackRegime {
    pub fn honest() -> Self {
        Self {
            active: false,
            coalition: Vec::new(),
            trigger_block: 0,
        }
    }

    pub fn attack(coalition: Vec<NodeId>, trigger_block: u64) -> Self {
        Self {
            active: true,
            coalition,
            trigger_block,
        }
    }

    pub fn is_member(&self, node: NodeId) -> bool {
        self.coalition.contains(&node)
    }

    pub fn censoring_at(&self, block: u64) -> bool {
        self.active && block >= self.trigger_block
    }

    /// An active regime needs a coalition of known nodes whose true power
    /// meets the threshold.
    pub fn check(&self, powers: &PowerDistribution, params: &ProtocolParams) -> Result<()> {
        if !self.active {
            return Ok(());
        }
        if self.coalition.is_empty() {
            return Err(CoreError::InvalidRegime("empty coalition".into()));
        }
        let mut seen = vec![false; powers.len()];
        for &node in &self.coalition {
            if !powers.contains(node) {
                return Err(CoreError::UnknownNode(node));
            }
            if std::mem::replace(&mut seen[node.0], true) {
                return Err(CoreError::InvalidRegime(format!("{node} listed twice")));
            }
        }
        let resolution = powers.resolution();
        if powers.sum_units(&self.coalition) < params.threshold_units(resolution) {
            return Err(CoreError::InvalidRegime("coalition true power is below the threshold".into()));
        }
        Ok(())
    }

    fn excluded_count(&self, n: usize) -> usize {
        n - self.coalition.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Send,
    Deliver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterDecision {
    Pass,
    Drop,
}

/// Network filter run by each coalition member: while the attack is active,
/// traffic to or from non-members is dropped in both directions.
pub fn filter_message(_direction: Direction, peer: NodeId, regime: &AttackRegime) -> FilterDecision {
    if !regime.active || regime.is_member(peer) {
        FilterDecision::Pass
    } else {
        FilterDecision::Drop
    }
}

/// Proposer sampler with the cumulative weights precomputed for both phases.
#[derive(Clone, Debug)]
pub struct BlockProducer {
    honest_cumulative: Vec<u64>,
    honest_reward: f64,
    attack_cumulative: Vec<(u64, NodeId)>,
    attack_reward: f64,
    regime: AttackRegime,
}

impl BlockProducer {
    pub fn new(config: &ChainConfig, regime: &AttackRegime) -> Result<Self> {
        let powers = &config.powers;
        let n = powers.len();
        let honest_cumulative = powers
            .units()
            .iter()
            .scan(0u64, |acc, &u| {
                *acc += u;
                Some(*acc)
            })
            .collect::<Vec<_>>();
        if honest_cumulative.last().copied().unwrap_or(0) == 0 {
            return Err(CoreError::EmptyDistribution);
        }
        let mut attack_cumulative = Vec::new();
        let mut acc = 0;
        let mut members: Vec<NodeId> = regime.coalition.clone();
        members.sort();
        for node in members {
            acc += powers.unit(node);
            attack_cumulative.push((acc, node));
        }
        if regime.active && acc == 0 {
            return Err(CoreError::InvalidRegime("coalition holds no power".into()));
        }
        let attack_reward = if regime.active {
            config.reward.value_f64(regime.coalition.len())?
        } else {
            0.0
        };
        Ok(Self {
            honest_cumulative,
            honest_reward: config.reward.value_f64(n)?,
            attack_cumulative,
            attack_reward,
            regime: regime.clone(),
        })
    }

    /// Picks the proposer of `block` and the reward it mints. Under
    /// censorship only coalition blocks propagate, so the proposer is drawn
    /// from the coalition in proportion to true power.
    pub fn produce(&self, block: u64, rng: &mut ChaCha8Rng) -> (NodeId, f64) {
        if self.regime.censoring_at(block) {
            let total = self.attack_cumulative.last().map(|&(c, _)| c).unwrap_or(0);
            let draw = rng.random_range(0..total);
            let idx = self.attack_cumulative.partition_point(|&(c, _)| c <= draw);
            (self.attack_cumulative[idx].1, self.attack_reward)
        } else {
            let total = *self.honest_cumulative.last().unwrap();
            let draw = rng.random_range(0..total);
            let idx = self.honest_cumulative.partition_point(|&c| c <= draw);
            (NodeId(idx), self.honest_reward)
        }
    }
}

pub fn produce_block(
    block: u64,
    regime: &AttackRegime,
    config: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(NodeId, f64)> {
    Ok(BlockProducer::new(config, regime)?.produce(block, rng))
}

/// Runs `config.horizon` blocks. Coalition members pay the detection cost of
/// excluding `excluded` nodes, scaled by their own power, on every censored
/// block.
pub fn simulate_horizon(config: &ChainConfig, regime: &AttackRegime, excluded: usize) -> Result<RewardLedger> {
    regime.check(&config.powers, &config.params)?;
    let producer = BlockProducer::new(config, regime)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cost = rational::to_f64(&cost_of_strategy(excluded, &config.params));
    let member_costs: Vec<(usize, f64)> = regime
        .coalition
        .iter()
        .map(|&m| (m.0, cost * config.powers.power_f64(m)))
        .collect();

    let mut ledger = RewardLedger::new(config.powers.len());
    for block in 0..config.horizon {
        let (proposer, reward) = producer.produce(block, &mut rng);
        ledger.rewards[proposer.0] += reward;
        if regime.censoring_at(block) {
            for &(m, c) in &member_costs {
                ledger.costs[m] += c;
            }
        }
        ledger.blocks += 1;
    }
    Ok(ledger)
}

/// Per-block honest payoffs `v_i * f(n)`.
pub fn honest_block_utilities(powers: &PowerDistribution, reward: &RewardFunction) -> Result<Vec<Rational>> {
    let full = reward.value(powers.len())?;
    Ok(powers.nodes().map(|n| powers.power(n) * &full).collect())
}

/// Per-block payoffs once censorship is in force: members share
/// `f(|coalition|)` in proportion to true power and pay the detection cost;
/// excluded nodes earn nothing.
pub fn attack_block_utilities(
    powers: &PowerDistribution,
    params: &ProtocolParams,
    reward: &RewardFunction,
    regime: &AttackRegime,
) -> Result<Vec<Rational>> {
    let n = powers.len();
    let total = powers.sum_units(&regime.coalition);
    if total == 0 {
        return Err(CoreError::InvalidRegime("coalition holds no power".into()));
    }
    let minted = reward.value(regime.coalition.len())?;
    let cost = cost_of_strategy(regime.excluded_count(n), params);
    let mut out = vec![rational::int(0); n];
    for &m in &regime.coalition {
        let share = rational::ratio(powers.unit(m) as i64, total as i64);
        out[m.0] = share * &minted - &cost * powers.power(m);
    }
    Ok(out)
}

/// Exact expected per-block utility over the configured horizon, averaging
/// the honest phase before `trigger_block` with the censored phase after it.
pub fn expected_ledger(config: &ChainConfig, regime: &AttackRegime) -> Result<Vec<Rational>> {
    regime.check(&config.powers, &config.params)?;
    let honest = honest_block_utilities(&config.powers, &config.reward)?;
    if !regime.active {
        return Ok(honest);
    }
    let attack = attack_block_utilities(&config.powers, &config.params, &config.reward, regime)?;
    let horizon = config.horizon.max(1);
    let before = regime.trigger_block.min(horizon);
    let after = horizon - before;
    let weight = |blocks: u64| rational::ratio(blocks as i64, horizon as i64);
    Ok(honest
        .iter()
        .zip(&attack)
        .map(|(h, a)| h * weight(before) + a * weight(after))
        .collect())
}

#[derive(Debug, Serialize)]
struct LedgerRow {
    node_id: usize,
    true_power: f64,
    total_reward: f64,
    total_cost: f64,
    avg_utility: f64,
}

/// Writes one CSV row per node:
/// `node_id,true_power,total_reward,total_cost,avg_utility`.
pub fn write_ledger_csv<W: Write>(ledger: &RewardLedger, powers: &PowerDistribution, out: W) -> Result<()> {
    let averages = ledger.average_utility()?;
    let mut writer = csv::Writer::from_writer(out);
    for node in powers.nodes() {
        writer.serialize(LedgerRow {
            node_id: node.0,
            true_power: powers.power_f64(node),
            total_reward: ledger.rewards[node.0],
            total_cost: ledger.costs[node.0],
            avg_utility: averages[node.0],
        })?;
    }
    writer.flush()?;
    Ok(())
}
