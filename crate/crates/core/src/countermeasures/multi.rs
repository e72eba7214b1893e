//! Several attack contracts posted at once.
//!
//! Each of the `k` launchers opens its own contract and every other node
//! picks at most one of them. Declarations are truthful, so a coalition's
//! power is its launcher's plus that of everyone who picked it, and all
//! contracts resolve together at a single deadline.

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cta::ShuffleSource;
use crate::error::{CoreError, Result};
use crate::model::{cost_of_strategy, validate_scenario, NodeId, PowerDistribution, ProtocolParams};
use crate::rational::{self, Rational};

use super::RewardFunction;

/// Assignments are enumerated exactly up to this many.
pub const EXACT_ASSIGNMENT_CAP: u64 = 1_000_000;

/// A free node's move: stay out, or join contract `c` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiAction {
    Abstain,
    Join(usize),
    /// Join every contract at once; only reachable through [`JoinModel::JoinAll`].
    JoinAll,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JoinModel {
    /// Every free node joins contract `contract` (1-based).
    AllJoinCoalition { contract: usize },
    /// Free nodes pick a contract uniformly at random.
    UniformRandom { seed: u64, trials: u64 },
    /// One action per free node, in [`MultiContractSpec::free_nodes`] order.
    ExplicitProfile { actions: Vec<MultiAction> },
    /// Free nodes join every contract. The winner is then the lowest-indexed
    /// contract at the threshold, and several may reach it.
    JoinAll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiContractSpec {
    pub powers: PowerDistribution,
    pub params: ProtocolParams,
    /// Launcher of contract `c` is `launchers[c - 1]`.
    pub launchers: Vec<NodeId>,
    pub join_model: JoinModel,
    pub reward: RewardFunction,
    /// Lets launchers of losing contracts move to another contract. Off by
    /// default.
    pub launchers_may_join: bool,
}

impl MultiContractSpec {
    pub fn new(powers: PowerDistribution, params: ProtocolParams, launchers: Vec<NodeId>, join_model: JoinModel) -> Self {
        Self {
            powers,
            params,
            launchers,
            join_model,
            reward: RewardFunction::default(),
            launchers_may_join: false,
        }
    }

    pub fn k(&self) -> usize {
        self.launchers.len()
    }

    pub fn free_nodes(&self) -> Vec<NodeId> {
        self.powers.nodes().filter(|n| !self.launchers.contains(n)).collect()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.powers.len();
        let k = self.k();
        if k == 0 || k >= n {
            return Err(CoreError::MultiContract(format!("need 1 <= k < n, got k = {k}, n = {n}")));
        }
        for (i, l) in self.launchers.iter().enumerate() {
            if !self.powers.contains(*l) {
                return Err(CoreError::UnknownNode(*l));
            }
            if self.launchers[..i].contains(l) {
                return Err(CoreError::MultiContract(format!("launcher {l} appears twice")));
            }
        }
        validate_scenario(&self.powers, &self.params).into_result()?;
        self.reward.validate(n)?;
        match &self.join_model {
            JoinModel::AllJoinCoalition { contract } => self.check_contract(*contract),
            JoinModel::ExplicitProfile { actions } => self.check_actions(actions),
            JoinModel::UniformRandom { trials, .. } if *trials == 0 => {
                Err(CoreError::MultiContract("uniform joining needs at least one trial".into()))
            }
            _ => Ok(()),
        }
    }

    fn check_contract(&self, contract: usize) -> Result<()> {
        if contract == 0 || contract > self.k() {
            return Err(CoreError::MultiContract(format!("no contract {contract} among {}", self.k())));
        }
        Ok(())
    }

    fn check_actions(&self, actions: &[MultiAction]) -> Result<()> {
        let free = self.free_nodes().len();
        if actions.len() != free {
            return Err(CoreError::MultiContract(format!(
                "{} actions for {free} free nodes",
                actions.len()
            )));
        }
        for a in actions {
            match a {
                MultiAction::Join(c) => self.check_contract(*c)?,
                MultiAction::JoinAll => {
                    return Err(CoreError::MultiContract("join-all is a join model, not a single action".into()))
                }
                MultiAction::Abstain => {}
            }
        }
        Ok(())
    }

    fn contract_of_launcher(&self, node: NodeId) -> Option<usize> {
        self.launchers.iter().position(|&l| l == node).map(|i| i + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerReport {
    /// 1-based contract index.
    pub winner: Option<usize>,
    #[serde(with = "rational::serde_str_vec")]
    pub coalition_powers: Vec<Rational>,
    pub coalitions: Vec<Vec<NodeId>>,
    pub no_winner: bool,
    /// Contracts at or above the threshold. More than one only under join-all.
    pub at_threshold: Vec<usize>,
}

/// Everyone's contract choice: free nodes by `actions`, launchers in their
/// own contract unless `launcher_moves` says otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub free: Vec<MultiAction>,
    /// Per launcher; `None` keeps the launcher in its own contract.
    pub launcher_moves: Vec<Option<usize>>,
}

impl Assignment {
    pub fn free_only(free: Vec<MultiAction>, k: usize) -> Self {
        Self {
            free,
            launcher_moves: vec![None; k],
        }
    }
}

/// Resolves one assignment. A second contract at the threshold is an error
/// unless nodes were allowed to join every contract.
pub fn resolve_assignment(spec: &MultiContractSpec, assignment: &Assignment) -> Result<WinnerReport> {
    let k = spec.k();
    let res = spec.powers.resolution();
    let threshold = spec.params.threshold_units(res);
    let mut coalitions: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    for (c, &l) in spec.launchers.iter().enumerate() {
        let target = assignment.launcher_moves.get(c).copied().flatten().unwrap_or(c + 1);
        coalitions[target - 1].push(l);
    }
    let mut overlapping = false;
    for (&node, action) in spec.free_nodes().iter().zip(&assignment.free) {
        match action {
            MultiAction::Abstain => {}
            MultiAction::Join(c) => coalitions[c - 1].push(node),
            MultiAction::JoinAll => {
                overlapping = true;
                for coalition in coalitions.iter_mut() {
                    coalition.push(node);
                }
            }
        }
    }
    for c in coalitions.iter_mut() {
        c.sort();
    }
    let units: Vec<u64> = coalitions.iter().map(|c| spec.powers.sum_units(c)).collect();
    let at_threshold: Vec<usize> = (0..k).filter(|&c| units[c] >= threshold).map(|c| c + 1).collect();
    if !overlapping && at_threshold.len() > 1 {
        return Err(CoreError::DoubleWinner {
            first: at_threshold[0],
            second: at_threshold[1],
        });
    }
    let winner = at_threshold.first().copied();
    Ok(WinnerReport {
        winner,
        no_winner: winner.is_none(),
        coalition_powers: units.iter().map(|&u| rational::ratio(u as i64, res as i64)).collect(),
        coalitions,
        at_threshold,
    })
}

/// Resolves the spec's join model. Uniform joining draws one assignment
/// from its seed.
pub fn resolve_multi_contract(spec: &MultiContractSpec) -> Result<WinnerReport> {
    spec.check()?;
    let k = spec.k();
    let free = spec.free_nodes().len();
    let actions = match &spec.join_model {
        JoinModel::AllJoinCoalition { contract } => vec![MultiAction::Join(*contract); free],
        JoinModel::ExplicitProfile { actions } => actions.clone(),
        JoinModel::JoinAll => vec![MultiAction::JoinAll; free],
        JoinModel::UniformRandom { seed, .. } => {
            let mut source = ShuffleSource::new(*seed);
            uniform_assignment(free, k, &mut source)
        }
    };
    resolve_assignment(spec, &Assignment::free_only(actions, k))
}

fn uniform_assignment(free: usize, k: usize, source: &mut ShuffleSource) -> Vec<MultiAction> {
    (0..free).map(|_| MultiAction::Join(source.rng().random_range(1..=k))).collect()
}

/// Per-node payoff: members of the winning coalition split the reward by
/// true power and bear the detection cost, everyone else gets nothing; with
/// no winner every node earns its honest share.
pub fn multi_utilities(spec: &MultiContractSpec, report: &WinnerReport) -> Result<Vec<Rational>> {
    let n = spec.powers.len();
    let Some(w) = report.winner else {
        let full = spec.reward.value(n)?;
        return Ok(spec.powers.nodes().map(|v| spec.powers.power(v) * &full).collect());
    };
    let coalition = &report.coalitions[w - 1];
    let units = spec.powers.sum_units(coalition);
    let minted = spec.reward.value(coalition.len())?;
    let cost = cost_of_strategy(n - coalition.len(), &spec.params);
    let mut out = vec![Rational::zero(); n];
    for &node in coalition {
        out[node.0] = rational::ratio(spec.powers.unit(node) as i64, units as i64) * &minted - &cost * spec.powers.power(node);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinProbabilities {
    /// Entry `c - 1` is the chance that contract `c` wins.
    #[serde(with = "rational::serde_str_vec")]
    pub per_contract: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub no_winner: Rational,
    pub exact: bool,
    /// Assignments enumerated, or trials sampled.
    pub samples: u64,
}

impl WinProbabilities {
    #[allow(clippy::wrong_self_convention)]
    pub fn any_winner(&self) -> Rational {
        self.per_contract.iter().fold(Rational::zero(), |acc, p| acc + p)
    }
}

/// Win probability of each contract when free nodes join uniformly at random.
pub fn win_probability(spec: &MultiContractSpec) -> Result<WinProbabilities> {
    spec.check()?;
    let JoinModel::UniformRandom { seed, trials } = spec.join_model else {
        return Err(CoreError::MultiContract("win probability needs the uniform join model".into()));
    };
    let k = spec.k();
    let free = spec.free_nodes().len();
    let total = (k as u64).checked_pow(free as u32).filter(|&t| t <= EXACT_ASSIGNMENT_CAP);
    let mut counts = vec![0u64; k + 1];
    let (samples, exact) = match total {
        Some(total) => {
            let tallies: Vec<usize> = (0..total)
                .into_par_iter()
                .map(|code| {
                    let mut code = code;
                    let actions = (0..free)
                        .map(|_| {
                            let c = (code % k as u64) as usize + 1;
                            code /= k as u64;
                            MultiAction::Join(c)
                        })
                        .collect();
                    resolve_assignment(spec, &Assignment::free_only(actions, k)).map(|r| r.winner.unwrap_or(0))
                })
                .collect::<Result<_>>()?;
            for t in tallies {
                counts[t] += 1;
            }
            (total, true)
        }
        None => {
            let mut source = ShuffleSource::new(seed);
            for _ in 0..trials {
                let actions = uniform_assignment(free, k, &mut source);
                let r = resolve_assignment(spec, &Assignment::free_only(actions, k))?;
                counts[r.winner.unwrap_or(0)] += 1;
            }
            (trials, false)
        }
    };
    let frac = |c: u64| rational::ratio(c as i64, samples as i64);
    Ok(WinProbabilities {
        per_contract: counts[1..].iter().map(|&c| frac(c)).collect(),
        no_winner: frac(counts[0]),
        exact,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiWitness {
    pub node: NodeId,
    pub deviation: MultiAction,
    #[serde(with = "rational::serde_str")]
    pub before: Rational,
    #[serde(with = "rational::serde_str")]
    pub after: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiNeReport {
    pub holds: bool,
    /// Coalition `j` stays at the threshold without any single free node.
    pub assumptions_hold: bool,
    pub witnesses: Vec<MultiWitness>,
    /// Largest payoff any deviator collects from another contract winning.
    #[serde(with = "rational::serde_str")]
    pub max_other_contract_payoff: Rational,
    pub mixed_samples: usize,
    pub mixed_violations: usize,
    pub deviations_checked: usize,
    pub notes: Vec<String>,
}

const MIXED_SAMPLES_PER_NODE: usize = 64;

/// Checks that everyone joining contract `j` is an equilibrium of the
/// reduced game, and that staying out is dominated by joining.
///
/// Every unilateral deviation (another contract, or staying out) is tried
/// for every free node, and for launchers of other contracts when they may
/// move. Staying out is also tested against seeded random mixed strategies
/// of the deviator and random pure assignments of the others.
pub fn verify_multi_contract_ne(spec: &MultiContractSpec, seed: u64) -> Result<MultiNeReport> {
    spec.check()?;
    let JoinModel::AllJoinCoalition { contract: j } = spec.join_model else {
        return Err(CoreError::MultiContract("equilibrium check needs the all-join model".into()));
    };
    let k = spec.k();
    let free = spec.free_nodes();
    let res = spec.powers.resolution();
    let threshold = spec.params.threshold_units(res);

    let mut base = Assignment::free_only(vec![MultiAction::Join(j); free.len()], k);
    if spec.launchers_may_join {
        for (c, slot) in base.launcher_moves.iter_mut().enumerate() {
            if c + 1 != j {
                *slot = Some(j);
            }
        }
    }
    let base_report = resolve_assignment(spec, &base)?;
    let base_u = multi_utilities(spec, &base_report)?;

    let coalition_units = spec.powers.sum_units(&base_report.coalitions[j - 1]);
    let movers: Vec<NodeId> = base_report.coalitions[j - 1]
        .iter()
        .copied()
        .filter(|&n| n != spec.launchers[j - 1])
        .collect();
    let biggest = movers.iter().map(|&n| spec.powers.unit(n)).max().unwrap_or(0);
    let assumptions_hold = spec.params.threshold > rational::ratio(1, 2) && coalition_units - biggest >= threshold;
    let mut notes = vec!["no winner pays every node its honest share".to_string()];
    if !assumptions_hold {
        notes.push(format!(
            "coalition {j} falls below t without one of its free nodes; outside the equilibrium assumptions"
        ));
    }

    // unilateral deviations
    let mut witnesses = Vec::new();
    let mut max_other = Rational::zero();
    let mut checked = 0;
    for &node in &movers {
        let options = std::iter::once(MultiAction::Abstain).chain((1..=k).filter(|&c| c != j).map(MultiAction::Join));
        for dev in options {
            checked += 1;
            let assignment = deviate(spec, &base, node, dev);
            let report = resolve_assignment(spec, &assignment)?;
            let u = multi_utilities(spec, &report)?;
            if let (MultiAction::Join(c), Some(w)) = (dev, report.winner) {
                if w == c && u[node.0] > max_other {
                    max_other = u[node.0].clone();
                }
            }
            if u[node.0] > base_u[node.0] {
                witnesses.push(MultiWitness {
                    node,
                    deviation: dev,
                    before: base_u[node.0].clone(),
                    after: u[node.0].clone(),
                });
            }
        }
    }

    let (mixed_samples, mixed_violations) = mixed_strategy_check(spec, &base, &movers, j, seed)?;
    Ok(MultiNeReport {
        holds: witnesses.is_empty() && mixed_violations == 0,
        assumptions_hold,
        witnesses,
        max_other_contract_payoff: max_other,
        mixed_samples,
        mixed_violations,
        deviations_checked: checked,
        notes,
    })
}

fn deviate(spec: &MultiContractSpec, base: &Assignment, node: NodeId, action: MultiAction) -> Assignment {
    let mut out = base.clone();
    if let Some(c) = spec.contract_of_launcher(node) {
        out.launcher_moves[c - 1] = match action {
            MultiAction::Join(target) => Some(target),
            _ => None,
        };
    } else {
        let idx = spec.free_nodes().iter().position(|&n| n == node).expect("free node");
        out.free[idx] = action;
    }
    out
}

/// Two sampled families:
/// * the deviator mixes over `{⊥, 1..k}` against everyone else in `j`;
///   shifting its mass on `⊥` to `j` must not lower its expected payoff;
/// * the others play a random pure assignment; some contract must pay the
///   deviator at least as much as staying out.
fn mixed_strategy_check(
    spec: &MultiContractSpec,
    base: &Assignment,
    movers: &[NodeId],
    j: usize,
    seed: u64,
) -> Result<(usize, usize)> {
    let k = spec.k();
    let free = spec.free_nodes();
    let mut source = ShuffleSource::new(seed);
    let mut samples = 0;
    let mut violations = 0;
    for &node in movers {
        let payoff = |assignment: &Assignment| -> Result<Rational> {
            let r = resolve_assignment(spec, assignment)?;
            Ok(multi_utilities(spec, &r)?[node.0].clone())
        };
        let pure: Vec<Rational> = std::iter::once(MultiAction::Abstain)
            .chain((1..=k).map(MultiAction::Join))
            .map(|a| payoff(&deviate(spec, base, node, a)))
            .collect::<Result<_>>()?;

        for _ in 0..MIXED_SAMPLES_PER_NODE {
            samples += 2;
            // mixed strategy with positive weight on ⊥, weights on a 1/100 grid
            let mut weights: Vec<i64> = (0..=k).map(|_| source.rng().random_range(0..=100)).collect();
            weights[0] = weights[0].max(1);
            let total: i64 = weights.iter().sum();
            let mixed = |w: &[i64]| -> Rational {
                w.iter()
                    .zip(&pure)
                    .fold(Rational::zero(), |acc, (&wi, u)| acc + rational::ratio(wi, total) * u)
            };
            let mut moved = weights.clone();
            moved[j] += moved[0];
            moved[0] = 0;
            if mixed(&moved) < mixed(&weights) {
                violations += 1;
            }

            let others: Vec<MultiAction> = free
                .iter()
                .map(|_| match source.rng().random_range(0..=k) {
                    0 => MultiAction::Abstain,
                    c => MultiAction::Join(c),
                })
                .collect();
            let random_base = Assignment {
                free: others,
                launcher_moves: base.launcher_moves.clone(),
            };
            let out = payoff(&deviate(spec, &random_base, node, MultiAction::Abstain))?;
            let mut best_join = None::<Rational>;
            for c in 1..=k {
                let u = payoff(&deviate(spec, &random_base, node, MultiAction::Join(c)))?;
                if best_join.as_ref().is_none_or(|b| u > *b) {
                    best_join = Some(u);
                }
            }
            if best_join.is_some_and(|b| b < out) {
                violations += 1;
            }
        }
    }
    Ok((samples, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn equal_spec(n: usize, k: usize, t: Rational, model: JoinModel) -> MultiContractSpec {
        let powers = PowerDistribution::equal(n).unwrap();
        let params = ProtocolParams::new(t, n, int(100), 100, ratio(1, n as i64));
        MultiContractSpec::new(powers, params, (0..k).map(NodeId).collect(), model)
    }

    #[test]
    fn both_free_nodes_in_one_coalition() {
        let s = equal_spec(4, 2, ratio(3, 5), JoinModel::AllJoinCoalition { contract: 1 });
        let r = resolve_multi_contract(&s).unwrap();
        assert_eq!(r.winner, Some(1));
        assert_eq!(r.coalition_powers[0], ratio(3, 4));
        assert_eq!(r.coalitions[0], vec![NodeId(0), NodeId(2), NodeId(3)]);
    }

    #[test]
    fn split_and_abstain_leave_no_winner() {
        let split = equal_spec(
            4,
            2,
            ratio(3, 5),
            JoinModel::ExplicitProfile {
                actions: vec![MultiAction::Join(1), MultiAction::Join(2)],
            },
        );
        let r = resolve_multi_contract(&split).unwrap();
        assert!(r.no_winner);
        assert_eq!(r.coalition_powers, vec![ratio(1, 2), ratio(1, 2)]);

        let out = equal_spec(
            4,
            2,
            ratio(3, 5),
            JoinModel::ExplicitProfile {
                actions: vec![MultiAction::Abstain; 2],
            },
        );
        assert!(resolve_multi_contract(&out).unwrap().no_winner);
        let u = multi_utilities(&out, &resolve_multi_contract(&out).unwrap()).unwrap();
        assert_eq!(u, vec![ratio(1, 4); 4]);
    }

    #[test]
    fn uniform_win_probabilities_n4() {
        let s = equal_spec(4, 2, ratio(3, 5), JoinModel::UniformRandom { seed: 1, trials: 10 });
        let p = win_probability(&s).unwrap();
        assert!(p.exact);
        assert_eq!(p.samples, 4);
        assert_eq!(p.per_contract, vec![ratio(1, 4), ratio(1, 4)]);
        assert_eq!(p.no_winner, ratio(1, 2));
        assert_eq!(p.any_winner() + &p.no_winner, int(1));
    }

    #[test]
    fn single_contract_always_wins() {
        let s = equal_spec(5, 1, ratio(3, 5), JoinModel::UniformRandom { seed: 1, trials: 10 });
        let p = win_probability(&s).unwrap();
        assert_eq!(p.per_contract, vec![int(1)]);
        assert_eq!(p.no_winner, int(0));
    }

    #[test]
    fn no_winner_grows_with_k() {
        let mut last = int(-1);
        for k in 1..=3 {
            let s = equal_spec(6, k, ratio(3, 5), JoinModel::UniformRandom { seed: 1, trials: 10 });
            let p = win_probability(&s).unwrap();
            assert!(p.no_winner >= last, "k = {k}");
            last = p.no_winner;
        }
        assert!(last > int(0));
    }

    #[test]
    fn sampled_probabilities_when_too_many_assignments() {
        // 2^20 assignments exceed the cap
        let powers = PowerDistribution::equal(22).unwrap();
        let params = ProtocolParams::new(ratio(3, 5), 22, int(100), 100, ratio(1, 22));
        let s = MultiContractSpec::new(
            powers,
            params,
            vec![NodeId(0), NodeId(1)],
            JoinModel::UniformRandom { seed: 9, trials: 2_000 },
        );
        let p = win_probability(&s).unwrap();
        assert!(!p.exact);
        assert_eq!(p.samples, 2_000);
        assert_eq!(p.any_winner() + &p.no_winner, int(1));
        assert_eq!(p, win_probability(&s).unwrap());
    }

    #[test]
    fn equilibrium_n5() {
        let s = equal_spec(5, 2, ratio(3, 5), JoinModel::AllJoinCoalition { contract: 1 });
        let r = verify_multi_contract_ne(&s, 7).unwrap();
        assert!(r.holds, "{:?}", r.witnesses);
        assert!(r.assumptions_hold);
        assert_eq!(r.max_other_contract_payoff, int(0));
        assert_eq!(r.deviations_checked, 3 * 2);
        assert_eq!(r.mixed_violations, 0);
    }

    #[test]
    fn abstaining_pays_zero_n5() {
        let s = equal_spec(5, 2, ratio(3, 5), JoinModel::AllJoinCoalition { contract: 1 });
        let mut a = Assignment::free_only(vec![MultiAction::Join(1); 3], 2);
        a.free[0] = MultiAction::Abstain;
        let r = resolve_assignment(&s, &a).unwrap();
        assert_eq!(r.winner, Some(1));
        assert_eq!(multi_utilities(&s, &r).unwrap()[2], int(0));
    }

    #[test]
    fn scope_gate_reports_outside_assumptions() {
        // coalition 1 is 3/4; without one free node it is 1/2 < 3/5
        let s = equal_spec(4, 2, ratio(3, 5), JoinModel::AllJoinCoalition { contract: 1 });
        let r = verify_multi_contract_ne(&s, 7).unwrap();
        assert!(!r.assumptions_hold);
        assert!(r.notes.iter().any(|n| n.contains("outside")));
    }

    #[test]
    fn launcher_relaxation_still_equilibrium() {
        let mut s = equal_spec(6, 2, ratio(3, 5), JoinModel::AllJoinCoalition { contract: 1 });
        s.launchers_may_join = true;
        let r = verify_multi_contract_ne(&s, 3).unwrap();
        assert!(r.holds, "{:?}", r.witnesses);
        // free nodes and the second launcher each have one alternative + ⊥
        assert_eq!(r.deviations_checked, 5 * 2);
    }

    #[test]
    fn join_all_allows_overlap() {
        let s = equal_spec(5, 2, ratio(3, 5), JoinModel::JoinAll);
        let r = resolve_multi_contract(&s).unwrap();
        assert_eq!(r.at_threshold, vec![1, 2]);
        assert_eq!(r.winner, Some(1));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = equal_spec(4, 2, ratio(3, 5), JoinModel::AllJoinCoalition { contract: 3 });
        assert!(s.check().is_err());
        s.join_model = JoinModel::AllJoinCoalition { contract: 1 };
        s.launchers = vec![NodeId(0), NodeId(0)];
        assert!(s.check().is_err());
        s.launchers = (0..4).map(NodeId).collect();
        assert!(s.check().is_err());
        let e = equal_spec(4, 2, ratio(3, 5), JoinModel::ExplicitProfile { actions: vec![MultiAction::Join(1)] });
        assert!(e.check().is_err());
    }

    #[test]
    fn winner_unique_on_random_assignments() {
        let s = equal_spec(7, 3, ratio(4, 7), JoinModel::UniformRandom { seed: 0, trials: 1 });
        let mut source = ShuffleSource::new(5);
        for _ in 0..2_000 {
            let free: Vec<MultiAction> = (0..4)
                .map(|_| match source.rng().random_range(0..=3) {
                    0 => MultiAction::Abstain,
                    c => MultiAction::Join(c),
                })
                .collect();
            let r = resolve_assignment(&s, &Assignment::free_only(free, 3)).unwrap();
            assert!(r.at_threshold.len() <= 1);
        }
    }
}
