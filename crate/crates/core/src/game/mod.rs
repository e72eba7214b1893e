//! The two-stage game induced by the call-to-attack contract.
//!
//! The launcher first decides whether to post the contract. All other nodes
//! then move simultaneously, choosing to stay out or to join with some
//! declared power, and chance picks the order in which the joining responses
//! reach the contract. Utilities are expectations over that order, computed
//! exactly by enumerating permutations or estimated by sampling them.

mod tree;
mod verify;

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::chain;
use crate::countermeasures::RewardFunction;
use crate::cta::{resolve_contract, sample_order, ContractRules, Resolution, ResponseOrder, ShuffleSource};
use crate::error::{CoreError, Result};
use crate::model::{cost_of_strategy, validate_scenario, NodeId, PowerDistribution, ProtocolParams, TerminationPolicy};
use crate::rational::{self, Rational};

pub use crate::cta::Action;
pub use tree::{game_tree_leaf_count, render_game_tree};
pub use verify::{
    check_deviation_classes, enumerate_deviations, verify_ne_subgame, verify_spe, Deviation, DeviationClass,
    DeviationClassReport, DeviationWitness, EnumerationStats, PlayerMove, SpeReport, VerificationReport,
};

/// Largest responder count for which permutations are enumerated exactly.
pub const EXACT_RESPONDER_CAP: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderDistribution {
    #[default]
    UniformExact,
    UniformSampled { trials: u64, seed: u64 },
}

/// How a successful coalition splits the minted reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffRule {
    /// Blocks are won in proportion to true power, whatever was declared.
    #[default]
    TruePowerShare,
    /// Paid by declared power. Not a property of any real chain; kept as a
    /// negative control that should make over-declaration pay.
    DeclaredPowerShare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub powers: PowerDistribution,
    pub params: ProtocolParams,
    pub launcher: NodeId,
    pub order_distribution: OrderDistribution,
    pub reward: RewardFunction,
    pub payoff_rule: PayoffRule,
}

impl GameSpec {
    pub fn new(
        powers: PowerDistribution,
        params: ProtocolParams,
        launcher: NodeId,
        order_distribution: OrderDistribution,
    ) -> Self {
        Self {
            powers,
            params,
            launcher,
            order_distribution,
            reward: RewardFunction::default(),
            payoff_rule: PayoffRule::default(),
        }
    }

    pub fn with_payoff_rule(mut self, rule: PayoffRule) -> Self {
        self.payoff_rule = rule;
        self
    }

    pub fn with_reward(mut self, reward: RewardFunction) -> Self {
        self.reward = reward;
        self
    }

    /// All nodes except the launcher, ascending.
    pub fn responders(&self) -> Vec<NodeId> {
        self.powers.nodes().filter(|&n| n != self.launcher).collect()
    }

    pub fn resolution(&self) -> u64 {
        self.powers.resolution()
    }

    pub fn check(&self) -> Result<()> {
        if !self.powers.contains(self.launcher) {
            return Err(CoreError::UnknownNode(self.launcher));
        }
        validate_scenario(&self.powers, &self.params).into_result()?;
        self.reward.validate(self.powers.len())
    }

    fn check_exact(&self) -> Result<()> {
        let responders = self.powers.len() - 1;
        if responders > EXACT_RESPONDER_CAP {
            return Err(CoreError::TooManyResponders {
                responders,
                cap: EXACT_RESPONDER_CAP,
            });
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "powers={} t={} launcher={}",
            self.powers,
            rational::format_rational(&self.params.threshold),
            self.launcher
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub launcher_attacks: bool,
    /// Launcher's declaration in grid units.
    pub launcher_declared: u64,
    /// One action per responder, in [`GameSpec::responders`] order.
    pub responder_actions: Vec<Action>,
}

impl StrategyProfile {
    /// Launch, and every responder joins declaring its true power.
    pub fn truthful(spec: &GameSpec) -> Self {
        Self {
            launcher_attacks: true,
            launcher_declared: spec.powers.unit(spec.launcher),
            responder_actions: spec
                .responders()
                .into_iter()
                .map(|n| Action::Declare(spec.powers.unit(n)))
                .collect(),
        }
    }

    pub fn no_attack(spec: &GameSpec) -> Self {
        Self {
            launcher_attacks: false,
            ..Self::truthful(spec)
        }
    }

    pub fn action_of(&self, spec: &GameSpec, node: NodeId) -> Option<Action> {
        let idx = responder_index(spec, node)?;
        self.responder_actions.get(idx).copied()
    }

    /// Copy of the profile with `node` playing `action` instead.
    pub fn with_action(&self, spec: &GameSpec, node: NodeId, action: Action) -> Result<Self> {
        let idx = responder_index(spec, node).ok_or(CoreError::UnknownNode(node))?;
        let mut out = self.clone();
        out.responder_actions[idx] = action;
        Ok(out)
    }

    /// Actions indexed by node id; the launcher's slot holds its declaration.
    pub fn node_actions(&self, spec: &GameSpec) -> Vec<Action> {
        let mut actions = vec![Action::Abstain; spec.powers.len()];
        actions[spec.launcher.0] = Action::Declare(self.launcher_declared);
        for (node, action) in spec.responders().into_iter().zip(&self.responder_actions) {
            actions[node.0] = *action;
        }
        actions
    }

    fn joining_responders(&self, spec: &GameSpec) -> Vec<NodeId> {
        spec.responders()
            .into_iter()
            .zip(&self.responder_actions)
            .filter(|(_, a)| **a != Action::Abstain)
            .map(|(n, _)| n)
            .collect()
    }
}

fn responder_index(spec: &GameSpec, node: NodeId) -> Option<usize> {
    if node == spec.launcher || !spec.powers.contains(node) {
        return None;
    }
    Some(if node.0 > spec.launcher.0 { node.0 - 1 } else { node.0 })
}

/// Per-node expected utility, in block rewards per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    pub values: Vec<f64>,
    #[serde(with = "rational::serde_str_opt_vec")]
    pub exact: Option<Vec<Rational>>,
    /// Standard error of each sampled mean.
    pub stderr: Option<Vec<f64>>,
    /// Orders enumerated or sampled.
    pub plays: u64,
}

impl UtilityVector {
    fn from_exact(exact: Vec<Rational>, plays: u64) -> Self {
        Self {
            values: exact.iter().map(rational::to_f64).collect(),
            exact: Some(exact),
            stderr: None,
            plays,
        }
    }
}

/// One chance outcome of the contract with how many orders lead to it.
#[derive(Clone, Debug)]
pub(crate) struct OutcomeClass {
    pub resolution: Resolution,
    pub count: u64,
}

/// Resolves the contract under every order of the joining responders, in
/// lexicographic order.
pub(crate) fn exact_plays(spec: &GameSpec, profile: &StrategyProfile) -> Result<Vec<(ResponseOrder, Resolution)>> {
    spec.check_exact()?;
    let rules = ContractRules::from_params(&spec.params)?;
    let actions = profile.node_actions(spec);
    let joining = profile.joining_responders(spec);
    let k = joining.len();
    joining
        .into_iter()
        .permutations(k)
        .map(|perm| {
            let order = ResponseOrder(perm);
            let res = resolve_contract(&spec.powers, &rules, spec.launcher, profile.launcher_declared, &actions, &order)?;
            Ok((order, res))
        })
        .collect()
}

pub(crate) fn exact_outcome_classes(spec: &GameSpec, profile: &StrategyProfile) -> Result<(Vec<OutcomeClass>, u64)> {
    let plays = exact_plays(spec, profile)?;
    let total = plays.len() as u64;
    let mut index: HashMap<Resolution, usize> = HashMap::new();
    let mut classes: Vec<OutcomeClass> = Vec::new();
    for (_, res) in plays {
        match index.get(&res) {
            Some(&i) => classes[i].count += 1,
            None => {
                index.insert(res.clone(), classes.len());
                classes.push(OutcomeClass { resolution: res, count: 1 });
            }
        }
    }
    Ok((classes, total))
}

/// Per-node payoff of a single resolved play.
pub(crate) fn play_payoffs(spec: &GameSpec, profile: &StrategyProfile, res: &Resolution) -> Result<Vec<Rational>> {
    let n = spec.powers.len();
    if !res.success {
        return chain::honest_block_utilities(&spec.powers, &spec.reward);
    }
    let minted = spec.reward.value(res.size)?;
    let cost = cost_of_strategy(n - res.size, &spec.params);
    let actions = profile.node_actions(spec);
    let mut out = vec![Rational::zero(); n];
    for node in spec.powers.nodes().filter(|n| res.members[n.0]) {
        let share = match spec.payoff_rule {
            PayoffRule::TruePowerShare => rational::ratio(spec.powers.unit(node) as i64, res.true_units as i64),
            PayoffRule::DeclaredPowerShare => {
                let declared = actions[node.0].declared().unwrap_or(0);
                if res.declared_units == 0 {
                    Rational::zero()
                } else {
                    rational::ratio(declared as i64, res.declared_units as i64)
                }
            }
        };
        out[node.0] = share * &minted - &cost * spec.powers.power(node);
    }
    Ok(out)
}

/// Expected utility of every node under `profile`.
pub fn expected_utilities(spec: &GameSpec, profile: &StrategyProfile) -> Result<UtilityVector> {
    if !profile.launcher_attacks {
        let honest = chain::honest_block_utilities(&spec.powers, &spec.reward)?;
        return Ok(UtilityVector::from_exact(honest, 1));
    }
    match spec.order_distribution {
        OrderDistribution::UniformExact => exact_utilities(spec, profile),
        OrderDistribution::UniformSampled { trials, seed } => sampled_utilities(spec, profile, trials, seed),
    }
}

pub(crate) fn exact_utilities(spec: &GameSpec, profile: &StrategyProfile) -> Result<UtilityVector> {
    if !profile.launcher_attacks {
        let honest = chain::honest_block_utilities(&spec.powers, &spec.reward)?;
        return Ok(UtilityVector::from_exact(honest, 1));
    }
    let (classes, total) = exact_outcome_classes(spec, profile)?;
    let mut sums = vec![Rational::zero(); spec.powers.len()];
    for class in &classes {
        let weight = rational::int(class.count as i64);
        for (sum, payoff) in sums.iter_mut().zip(play_payoffs(spec, profile, &class.resolution)?) {
            *sum += payoff * &weight;
        }
    }
    let total_r = rational::int(total as i64);
    let exact = sums.into_iter().map(|s| s / &total_r).collect();
    Ok(UtilityVector::from_exact(exact, total))
}

fn sampled_utilities(spec: &GameSpec, profile: &StrategyProfile, trials: u64, seed: u64) -> Result<UtilityVector> {
    if trials == 0 {
        return Err(CoreError::BadOrder("sampling needs at least one trial".into()));
    }
    let rules = ContractRules::from_params(&spec.params)?;
    let actions = profile.node_actions(spec);
    let joining = profile.joining_responders(spec);
    let n = spec.powers.len();
    let mut source = ShuffleSource::new(seed);
    let mut cache: HashMap<Resolution, Vec<f64>> = HashMap::new();
    // Welford running mean and M2 per node
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for trial in 1..=trials {
        let order = sample_order(&joining, &mut source);
        let res = resolve_contract(&spec.powers, &rules, spec.launcher, profile.launcher_declared, &actions, &order)?;
        if !cache.contains_key(&res) {
            let payoffs = play_payoffs(spec, profile, &res)?.iter().map(rational::to_f64).collect();
            cache.insert(res.clone(), payoffs);
        }
        let payoffs = &cache[&res];
        for i in 0..n {
            let delta = payoffs[i] - mean[i];
            mean[i] += delta / trial as f64;
            m2[i] += delta * (payoffs[i] - mean[i]);
        }
    }
    let stderr = m2
        .iter()
        .map(|&m| {
            if trials < 2 {
                0.0
            } else {
                (m / (trials - 1) as f64 / trials as f64).sqrt()
            }
        })
        .collect();
    Ok(UtilityVector {
        values: mean,
        exact: None,
        stderr: Some(stderr),
        plays: trials,
    })
}

/// Outcome probabilities of one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeProbabilities {
    /// joined, attack failed
    #[serde(with = "rational::serde_str")]
    pub p1: Rational,
    /// stayed out, attack failed
    #[serde(with = "rational::serde_str")]
    pub p2: Rational,
    /// joined, attack succeeded, in the coalition
    #[serde(with = "rational::serde_str")]
    pub p3: Rational,
    /// stayed out, attack succeeded
    #[serde(with = "rational::serde_str")]
    pub p4: Rational,
    /// joined, attack succeeded, left out of the coalition
    #[serde(with = "rational::serde_str")]
    pub p5: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbabilityProfile {
    pub nodes: Vec<NodeProbabilities>,
    pub plays: u64,
}

/// Outcome probabilities per node. Under sampling these are the empirical
/// frequencies, still held exactly.
pub fn probability_profile(spec: &GameSpec, profile: &StrategyProfile) -> Result<ProbabilityProfile> {
    let n = spec.powers.len();
    let actions = profile.node_actions(spec);
    let joined: Vec<bool> = spec
        .powers
        .nodes()
        .map(|node| profile.launcher_attacks && actions[node.0] != Action::Abstain)
        .collect();

    let (classes, total) = if !profile.launcher_attacks {
        let nobody = Resolution {
            status: crate::cta::ContractStatus::Aborted,
            success: false,
            members: vec![false; n],
            true_units: 0,
            declared_units: 0,
            size: 0,
        };
        (vec![OutcomeClass { resolution: nobody, count: 1 }], 1)
    } else {
        match spec.order_distribution {
            OrderDistribution::UniformExact => exact_outcome_classes(spec, profile)?,
            OrderDistribution::UniformSampled { trials, seed } => sampled_outcome_classes(spec, profile, trials, seed)?,
        }
    };

    let mut counts = vec![[0u64; 5]; n];
    for class in &classes {
        let res = &class.resolution;
        for node in 0..n {
            let slot = match (joined[node], res.success, res.members[node]) {
                (true, false, _) => 0,
                (false, false, _) => 1,
                (true, true, true) => 2,
                (false, true, _) => 3,
                (true, true, false) => 4,
            };
            counts[node][slot] += class.count;
        }
    }
    let frac = |c: u64| rational::ratio(c as i64, total as i64);
    Ok(ProbabilityProfile {
        nodes: counts
            .iter()
            .map(|c| NodeProbabilities {
                p1: frac(c[0]),
                p2: frac(c[1]),
                p3: frac(c[2]),
                p4: frac(c[3]),
                p5: frac(c[4]),
            })
            .collect(),
        plays: total,
    })
}

fn sampled_outcome_classes(
    spec: &GameSpec,
    profile: &StrategyProfile,
    trials: u64,
    seed: u64,
) -> Result<(Vec<OutcomeClass>, u64)> {
    let rules = ContractRules::from_params(&spec.params)?;
    let actions = profile.node_actions(spec);
    let joining = profile.joining_responders(spec);
    let mut source = ShuffleSource::new(seed);
    let mut counts: HashMap<Resolution, u64> = HashMap::new();
    for _ in 0..trials {
        let order = sample_order(&joining, &mut source);
        let res = resolve_contract(&spec.powers, &rules, spec.launcher, profile.launcher_declared, &actions, &order)?;
        *counts.entry(res).or_insert(0) += 1;
    }
    let classes = counts
        .into_iter()
        .map(|(resolution, count)| OutcomeClass { resolution, count })
        .collect();
    Ok((classes, trials))
}

/// `p3_i * v_i / V` for every node, valid when every successful play ends
/// with the same coalition power `V`; `None` otherwise.
pub fn closed_form_utilities(spec: &GameSpec, profile: &StrategyProfile) -> Result<Option<Vec<Rational>>> {
    let (classes, _) = exact_outcome_classes(spec, profile)?;
    let powers: BTreeSet<u64> = classes
        .iter()
        .filter(|c| c.resolution.success)
        .map(|c| c.resolution.true_units)
        .collect();
    if powers.len() != 1 {
        return Ok(None);
    }
    let v_units = *powers.iter().next().unwrap();
    let probs = probability_profile(
        &GameSpec {
            order_distribution: OrderDistribution::UniformExact,
            ..spec.clone()
        },
        profile,
    )?;
    Ok(Some(
        spec.powers
            .nodes()
            .map(|node| &probs.nodes[node.0].p3 * rational::ratio(spec.powers.unit(node) as i64, v_units as i64))
            .collect(),
    ))
}

/// Outcome-weighted form of the same identity, `E[1{i in N_a} v_i / V]`
/// plus the honest payoff on failed plays. Matches [`expected_utilities`]
/// for a constant unit reward and no detection cost.
pub fn outcome_weighted_utilities(spec: &GameSpec, profile: &StrategyProfile) -> Result<Vec<Rational>> {
    let (classes, total) = exact_outcome_classes(spec, profile)?;
    let n = spec.powers.len();
    let mut out = vec![Rational::zero(); n];
    for class in &classes {
        let res = &class.resolution;
        let weight = rational::ratio(class.count as i64, total as i64);
        for node in spec.powers.nodes() {
            let term = if !res.success {
                spec.powers.power(node)
            } else if res.members[node.0] {
                rational::ratio(spec.powers.unit(node) as i64, res.true_units as i64)
            } else {
                Rational::zero()
            };
            out[node.0] += term * &weight;
        }
    }
    Ok(out)
}

/// Distinct coalitions (sorted member lists) that end a successful attack
/// under `profile`.
///
/// Under the power-only policy with a timeout long enough for every response,
/// a set `S` containing the launcher is a closing coalition iff its declared
/// sum meets the threshold and dropping some non-launcher member falls below
/// it (that member can arrive last), or `S` is the launcher alone. This is
/// enumerated over subsets so it also covers populations beyond the
/// permutation cap; other policies fall back to permutations.
pub fn successful_coalitions(spec: &GameSpec, profile: &StrategyProfile) -> Result<Vec<Vec<NodeId>>> {
    if !profile.launcher_attacks {
        return Ok(Vec::new());
    }
    let joining = profile.joining_responders(spec);
    let rules = ContractRules::from_params(&spec.params)?;
    let subset_ok = spec.params.policy == TerminationPolicy::PowerOnly
        && rules.timeout > joining.len() as u64
        && joining.len() <= 20;
    let mut found: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    if subset_ok {
        let actions = profile.node_actions(spec);
        let declared = |n: NodeId| actions[n.0].declared().unwrap_or(0);
        let m = rules.threshold_units;
        let launcher_units = profile.launcher_declared;
        if launcher_units >= m {
            if spec.powers.unit(spec.launcher) >= m {
                found.insert(vec![spec.launcher]);
            }
        } else {
            for mask in 1u64..(1u64 << joining.len()) {
                let chosen: Vec<NodeId> = (0..joining.len())
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| joining[b])
                    .collect();
                let sum: u64 = launcher_units + chosen.iter().map(|&n| declared(n)).sum::<u64>();
                if sum < m || !chosen.iter().any(|&n| sum - declared(n) < m) {
                    continue;
                }
                let mut members = chosen;
                members.push(spec.launcher);
                if spec.powers.sum_units(&members) < m {
                    continue;
                }
                members.sort();
                found.insert(members);
            }
        }
    } else {
        for (_, res) in exact_plays(spec, profile)? {
            if res.success {
                found.insert(spec.powers.nodes().filter(|n| res.members[n.0]).collect());
            }
        }
    }
    Ok(found.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    pub(super) fn spec_n3() -> GameSpec {
        let powers = PowerDistribution::from_units(vec![8, 7, 5], 20).unwrap();
        let params = ProtocolParams::new(ratio(1, 2), 3, int(100), 100, ratio(1, 20));
        GameSpec::new(powers, params, NodeId(0), OrderDistribution::UniformExact)
    }

    #[test]
    fn truthful_utilities_match_hand_enumeration() {
        // orders (x2,x3): coalition {x1,x2}, V=3/4; (x3,x2): {x1,x3}, V=13/20
        let spec = spec_n3();
        let u = expected_utilities(&spec, &StrategyProfile::truthful(&spec)).unwrap();
        let exact = u.exact.unwrap();
        assert_eq!(exact[0], ratio(1, 2) * ratio(8, 15) + ratio(1, 2) * ratio(8, 13));
        assert_eq!(exact[1], ratio(7, 30));
        assert_eq!(exact[2], ratio(1, 2) * ratio(5, 13));
        assert!((u.values[0] - 0.574_358_974).abs() < 1e-8);
        assert!((u.values[2] - 0.192_307_692).abs() < 1e-8);
        assert_eq!(u.plays, 2);
    }

    #[test]
    fn no_attack_pays_true_power() {
        let spec = spec_n3();
        let u = expected_utilities(&spec, &StrategyProfile::no_attack(&spec)).unwrap();
        assert_eq!(u.exact.unwrap(), vec![ratio(2, 5), ratio(7, 20), ratio(1, 4)]);
    }

    #[test]
    fn abstaining_responder_gets_nothing() {
        let spec = spec_n3();
        let profile = StrategyProfile::truthful(&spec)
            .with_action(&spec, NodeId(1), Action::Abstain)
            .unwrap();
        let u = expected_utilities(&spec, &profile).unwrap().exact.unwrap();
        assert_eq!(u[1], int(0));
        assert_eq!(u[0], ratio(8, 13));
        let probs = probability_profile(&spec, &profile).unwrap();
        assert_eq!(probs.nodes[1].p2, int(0));
        assert_eq!(probs.nodes[1].p4, int(1));
    }

    #[test]
    fn probabilities_for_truthful_profile() {
        let spec = spec_n3();
        let probs = probability_profile(&spec, &StrategyProfile::truthful(&spec)).unwrap();
        let x2 = &probs.nodes[1];
        assert_eq!(x2.p3, ratio(1, 2));
        assert_eq!(x2.p1, int(0));
        assert_eq!(x2.p5, ratio(1, 2));
        assert_eq!(probs.nodes[0].p3, int(1));
    }

    #[test]
    fn everyone_abstaining_fails() {
        let spec = spec_n3();
        let profile = StrategyProfile {
            responder_actions: vec![Action::Abstain; 2],
            ..StrategyProfile::truthful(&spec)
        };
        let probs = probability_profile(&spec, &profile).unwrap();
        assert_eq!(probs.nodes[0].p1, int(1));
        assert_eq!(probs.nodes[1].p2, int(1));
        let u = expected_utilities(&spec, &profile).unwrap().exact.unwrap();
        assert_eq!(u, vec![ratio(2, 5), ratio(7, 20), ratio(1, 4)]);
    }

    #[test]
    fn visibility_policy_forces_full_coalition() {
        let powers = PowerDistribution::equal(4).unwrap();
        let params = ProtocolParams::new(ratio(1, 2), 1, int(100), 100, ratio(1, 4))
            .with_policy(TerminationPolicy::PowerAndVisibility);
        let spec = GameSpec::new(powers, params, NodeId(0), OrderDistribution::UniformExact);
        let probs = probability_profile(&spec, &StrategyProfile::truthful(&spec)).unwrap();
        assert!(probs.nodes.iter().all(|p| p.p3 == int(1)));
        let coalitions = successful_coalitions(&spec, &StrategyProfile::truthful(&spec)).unwrap();
        assert_eq!(coalitions, vec![(0..4).map(NodeId).collect::<Vec<_>>()]);
    }

    #[test]
    fn closed_form_agrees() {
        let spec = spec_n3();
        let profile = StrategyProfile::truthful(&spec);
        // two different closing powers, so the single-V form does not apply
        assert!(closed_form_utilities(&spec, &profile).unwrap().is_none());
        let exact = expected_utilities(&spec, &profile).unwrap().exact.unwrap();
        assert_eq!(outcome_weighted_utilities(&spec, &profile).unwrap(), exact);

        let equal = GameSpec::new(
            PowerDistribution::equal(5).unwrap(),
            ProtocolParams::new(ratio(3, 5), 5, int(100), 100, ratio(1, 5)),
            NodeId(2),
            OrderDistribution::UniformExact,
        );
        let profile = StrategyProfile::truthful(&equal);
        let closed = closed_form_utilities(&equal, &profile).unwrap().unwrap();
        assert_eq!(closed, expected_utilities(&equal, &profile).unwrap().exact.unwrap());
        // launcher + 2 of 4 responders: p3 = 1/2 for each responder
        assert_eq!(closed[0], ratio(1, 2) * ratio(1, 3));
    }

    #[test]
    fn sampled_agrees_with_exact() {
        let spec = spec_n3();
        let profile = StrategyProfile::truthful(&spec);
        let exact = expected_utilities(&spec, &profile).unwrap().values;
        let sampled_spec = GameSpec {
            order_distribution: OrderDistribution::UniformSampled { trials: 20_000, seed: 3 },
            ..spec
        };
        let s = expected_utilities(&sampled_spec, &profile).unwrap();
        let se = s.stderr.unwrap();
        for i in 0..3 {
            assert!((s.values[i] - exact[i]).abs() <= 4.0 * se[i] + 1e-12, "{i}");
        }
    }

    #[test]
    fn exact_cap_enforced() {
        let spec = GameSpec::new(
            PowerDistribution::equal(10).unwrap(),
            ProtocolParams::new(ratio(3, 5), 10, int(100), 100, ratio(1, 10)),
            NodeId(0),
            OrderDistribution::UniformExact,
        );
        assert!(matches!(
            expected_utilities(&spec, &StrategyProfile::truthful(&spec)),
            Err(CoreError::TooManyResponders { responders: 9, .. })
        ));
        // subset enumeration still works past the cap
        let coalitions = successful_coalitions(&spec, &StrategyProfile::truthful(&spec)).unwrap();
        assert_eq!(coalitions.len(), 126); // launcher + any 5 of 9
        assert!(coalitions.iter().all(|c| c.len() == 6));
    }

    #[test]
    fn subset_and_permutation_coalitions_agree() {
        for units in [vec![8u64, 7, 5], vec![4, 4, 6, 6], vec![5, 0, 5, 5, 5], vec![2, 6, 3, 3, 6]] {
            let n = units.len();
            let spec = GameSpec::new(
                PowerDistribution::from_units(units, 20).unwrap(),
                ProtocolParams::new(ratio(3, 5), n, int(100), 100, ratio(1, 20)),
                NodeId(1),
                OrderDistribution::UniformExact,
            );
            let profile = StrategyProfile::truthful(&spec);
            let from_perms: BTreeSet<Vec<NodeId>> = exact_plays(&spec, &profile)
                .unwrap()
                .into_iter()
                .filter(|(_, r)| r.success)
                .map(|(_, r)| spec.powers.nodes().filter(|n| r.members[n.0]).collect())
                .collect();
            let from_subsets: BTreeSet<Vec<NodeId>> =
                successful_coalitions(&spec, &profile).unwrap().into_iter().collect();
            assert_eq!(from_perms, from_subsets);
        }
    }

    #[test]
    fn node_actions_place_launcher_declaration() {
        let mut spec = spec_n3();
        spec.launcher = NodeId(1);
        let profile = StrategyProfile::truthful(&spec);
        assert_eq!(profile.responder_actions, vec![Action::Declare(8), Action::Declare(5)]);
        assert_eq!(
            profile.node_actions(&spec),
            vec![Action::Declare(8), Action::Declare(7), Action::Declare(5)]
        );
        assert_eq!(profile.action_of(&spec, NodeId(2)), Some(Action::Declare(5)));
        assert_eq!(profile.action_of(&spec, NodeId(1)), None);
    }
}
