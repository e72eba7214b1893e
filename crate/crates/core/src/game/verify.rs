//! Exhaustive equilibrium checks over the finite action grid.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exact_plays, exact_utilities, play_payoffs, GameSpec, StrategyProfile};
use crate::cta::Action;
use crate::error::{CoreError, Result};
use crate::model::NodeId;
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationClass {
    Abstain,
    UnderDeclare,
    Truthful,
    OverDeclare,
}

impl DeviationClass {
    pub fn of(action: Action, true_units: u64) -> Self {
        match action {
            Action::Abstain => DeviationClass::Abstain,
            Action::Declare(d) if d < true_units => DeviationClass::UnderDeclare,
            Action::Declare(d) if d > true_units => DeviationClass::OverDeclare,
            Action::Declare(_) => DeviationClass::Truthful,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub class: DeviationClass,
    pub action: Action,
}

/// Every non-truthful action available to responder `node`.
pub fn enumerate_deviations(spec: &GameSpec, node: NodeId) -> Result<Vec<Deviation>> {
    if node == spec.launcher || !spec.powers.contains(node) {
        return Err(CoreError::UnknownNode(node));
    }
    let truth = spec.powers.unit(node);
    let actions = std::iter::once(Action::Abstain).chain((0..=spec.resolution()).map(Action::Declare));
    Ok(actions
        .map(|action| Deviation {
            class: DeviationClass::of(action, truth),
            action,
        })
        .filter(|d| d.class != DeviationClass::Truthful)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum PlayerMove {
    Attack { declared_units: u64 },
    NoAttack,
    Respond { action: Action },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationWitness {
    pub node: NodeId,
    pub original: PlayerMove,
    pub deviation: PlayerMove,
    pub class: Option<DeviationClass>,
    #[serde(with = "rational::serde_str")]
    pub before: Rational,
    #[serde(with = "rational::serde_str")]
    pub after: Rational,
    pub gain: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub profiles_evaluated: u64,
    pub plays_resolved: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub holds: bool,
    pub witnesses: Vec<DeviationWitness>,
    pub enumeration_stats: EnumerationStats,
}

/// Checks that no responder gains by a unilateral deviation from the
/// truthful profile, once the contract has been launched.
pub fn verify_ne_subgame(spec: &GameSpec) -> Result<VerificationReport> {
    spec.check()?;
    let truthful = StrategyProfile::truthful(spec);
    let base = exact_utilities(spec, &truthful)?;
    let before = base.exact.expect("exact utilities");

    let mut tasks = Vec::new();
    for node in spec.responders() {
        for dev in enumerate_deviations(spec, node)? {
            tasks.push((node, dev));
        }
    }
    let results: Vec<(Option<DeviationWitness>, u64)> = tasks
        .par_iter()
        .map(|&(node, dev)| {
            let profile = truthful.with_action(spec, node, dev.action)?;
            let u = exact_utilities(spec, &profile)?;
            let after = u.exact.expect("exact utilities")[node.0].clone();
            let witness = (after > before[node.0]).then(|| DeviationWitness {
                node,
                original: PlayerMove::Respond {
                    action: Action::Declare(spec.powers.unit(node)),
                },
                deviation: PlayerMove::Respond { action: dev.action },
                class: Some(dev.class),
                gain: rational::to_f64(&(&after - &before[node.0])),
                before: before[node.0].clone(),
                after,
            });
            Ok((witness, u.plays))
        })
        .collect::<Result<_>>()?;

    let stats = EnumerationStats {
        profiles_evaluated: 1 + tasks.len() as u64,
        plays_resolved: base.plays + results.iter().map(|(_, p)| p).sum::<u64>(),
    };
    let witnesses: Vec<DeviationWitness> = results.into_iter().filter_map(|(w, _)| w).collect();
    Ok(VerificationReport {
        scenario: spec.describe(),
        holds: witnesses.is_empty(),
        witnesses,
        enumeration_stats: stats,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeReport {
    pub subgame: VerificationReport,
    #[serde(with = "rational::serde_str")]
    pub launcher_attack_utility: Rational,
    #[serde(with = "rational::serde_str")]
    pub launcher_honest_utility: Rational,
    /// attack minus honest
    #[serde(with = "rational::serde_str")]
    pub margin: Rational,
    pub launcher_witnesses: Vec<DeviationWitness>,
    pub holds: bool,
}

/// Subgame check plus the launcher's first move: staying honest, or
/// launching with any other declaration, must not beat launching truthfully.
pub fn verify_spe(spec: &GameSpec) -> Result<SpeReport> {
    let subgame = verify_ne_subgame(spec)?;
    let launcher = spec.launcher;
    let truth = spec.powers.unit(launcher);
    let truthful = StrategyProfile::truthful(spec);
    let attack = exact_utilities(spec, &truthful)?.exact.expect("exact utilities")[launcher.0].clone();
    let honest = exact_utilities(spec, &StrategyProfile::no_attack(spec))?.exact.expect("exact utilities")
        [launcher.0]
        .clone();

    let original = PlayerMove::Attack { declared_units: truth };
    let mut alternatives = vec![(PlayerMove::NoAttack, honest.clone())];
    let declared: Vec<u64> = (0..=spec.resolution()).filter(|&d| d != truth).collect();
    let utilities: Vec<(PlayerMove, Rational)> = declared
        .par_iter()
        .map(|&d| {
            let profile = StrategyProfile {
                launcher_declared: d,
                ..truthful.clone()
            };
            let u = exact_utilities(spec, &profile)?.exact.expect("exact utilities")[launcher.0].clone();
            Ok((PlayerMove::Attack { declared_units: d }, u))
        })
        .collect::<Result<_>>()?;
    alternatives.extend(utilities);

    let launcher_witnesses: Vec<DeviationWitness> = alternatives
        .into_iter()
        .filter(|(_, u)| *u > attack)
        .map(|(deviation, after)| DeviationWitness {
            node: launcher,
            original,
            deviation,
            class: None,
            gain: rational::to_f64(&(&after - &attack)),
            before: attack.clone(),
            after,
        })
        .collect();
    Ok(SpeReport {
        holds: subgame.holds && launcher_witnesses.is_empty(),
        subgame,
        margin: &attack - &honest,
        launcher_attack_utility: attack,
        launcher_honest_utility: honest,
        launcher_witnesses,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationClassReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl DeviationClassReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Order-by-order properties of each deviation class against the truthful
/// profile:
///
/// * staying out pays exactly zero;
/// * under-declaring never pays more on any order, and pays strictly less
///   whenever it lets the closing coalition pick up extra true power while
///   the deviator is in it;
/// * over-declaring only adds orders on which the attack fails.
pub fn check_deviation_classes(spec: &GameSpec) -> Result<DeviationClassReport> {
    spec.check()?;
    let truthful = StrategyProfile::truthful(spec);
    let base_plays = exact_plays(spec, &truthful)?;
    let base_payoffs = base_plays
        .iter()
        .map(|(_, r)| play_payoffs(spec, &truthful, r))
        .collect::<Result<Vec<_>>>()?;

    let mut report = DeviationClassReport::default();
    for node in spec.responders() {
        for dev in enumerate_deviations(spec, node)? {
            report.checked += 1;
            let profile = truthful.with_action(spec, node, dev.action)?;
            let label = format!("{} {} {:?}", spec.describe(), node, dev.action);
            match dev.class {
                DeviationClass::Abstain => {
                    let u = exact_utilities(spec, &profile)?.exact.expect("exact utilities");
                    if !u[node.0].is_zero() {
                        report.violations.push(format!("{label}: abstaining pays {}", u[node.0]));
                    }
                }
                DeviationClass::UnderDeclare => {
                    let plays = exact_plays(spec, &profile)?;
                    for (k, ((order, dev_res), (_, base_res))) in plays.iter().zip(&base_plays).enumerate() {
                        let after = &play_payoffs(spec, &profile, dev_res)?[node.0];
                        let before = &base_payoffs[k][node.0];
                        let grew = base_res.success
                            && base_res.members[node.0]
                            && dev_res.true_units > base_res.true_units;
                        if after > before || (grew && after >= before) {
                            report.violations.push(format!(
                                "{label}: order {:?} pays {after} vs truthful {before}",
                                order.nodes()
                            ));
                        }
                    }
                }
                DeviationClass::OverDeclare => {
                    let plays = exact_plays(spec, &profile)?;
                    for ((order, dev_res), (_, base_res)) in plays.iter().zip(&base_plays) {
                        if !base_res.success && dev_res.success {
                            report.violations.push(format!(
                                "{label}: order {:?} succeeds only when over-declaring",
                                order.nodes()
                            ));
                        }
                    }
                }
                DeviationClass::Truthful => unreachable!("truthful actions are not deviations"),
            }
        }
    }
    Ok(report)
}
