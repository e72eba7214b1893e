//! Graphviz rendering of the full game tree for tiny populations.

use std::fmt::Write;

use itertools::Itertools;

use super::{exact_plays, play_payoffs, GameSpec, StrategyProfile};
use crate::cta::Action;
use crate::error::{CoreError, Result};
use crate::rational::format_rational;

/// Trees are only drawn up to this many nodes.
pub const TREE_NODE_CAP: usize = 4;

/// Leaves of the tree for the launcher's truthful declaration: one for not
/// attacking, plus `m!` chance leaves for every responder profile with `m`
/// joiners.
pub fn game_tree_leaf_count(spec: &GameSpec) -> u128 {
    let r = spec.powers.len() as u128 - 1;
    let choices = spec.resolution() as u128 + 1;
    let mut total = 1u128;
    for m in 0..=r {
        let binom = (0..m).fold(1u128, |acc, k| acc * (r - k) / (k + 1));
        let fact: u128 = (1..=m).product();
        total += binom * choices.pow(m as u32) * fact;
    }
    total
}

/// DOT text of the game with the launcher declaring truthfully. Responder
/// moves are drawn as one simultaneous layer; leaves carry the order and the
/// exact payoff vector.
pub fn render_game_tree(spec: &GameSpec) -> Result<String> {
    spec.check()?;
    let n = spec.powers.len();
    if n > TREE_NODE_CAP {
        return Err(CoreError::TreeTooLarge(format!(
            "{n} nodes; trees are drawn for at most {TREE_NODE_CAP}"
        )));
    }
    let res = spec.resolution();
    let responders = spec.responders();
    let truthful = StrategyProfile::truthful(spec);
    let launcher_label = truthful.launcher_declared;

    let mut out = String::new();
    let mut id = 0usize;
    let mut next = || {
        id += 1;
        format!("n{id}")
    };
    let payoff_label = |p: &[crate::rational::Rational]| p.iter().map(format_rational).join(", ");

    writeln!(out, "digraph game {{").unwrap();
    writeln!(out, "  node [fontname=\"monospace\"];").unwrap();
    writeln!(out, "  root [label=\"{}\", shape=ellipse];", spec.launcher).unwrap();

    let honest = play_payoffs(spec, &StrategyProfile::no_attack(spec), &no_attack_resolution(n))?;
    let leaf = next();
    writeln!(out, "  {leaf} [label=\"({})\", shape=box];", payoff_label(&honest)).unwrap();
    writeln!(out, "  root -> {leaf} [label=\"no attack\"];").unwrap();

    let attack = next();
    writeln!(out, "  {attack} [label=\"responders\", shape=ellipse];").unwrap();
    writeln!(
        out,
        "  root -> {attack} [label=\"attack {}\"];",
        Action::Declare(launcher_label).label(res)
    )
    .unwrap();

    let options: Vec<Action> = std::iter::once(Action::Abstain).chain((0..=res).map(Action::Declare)).collect();
    for combo in (0..responders.len()).map(|_| options.iter().copied()).multi_cartesian_product() {
        let profile = StrategyProfile {
            responder_actions: combo.clone(),
            ..truthful.clone()
        };
        let chance = next();
        let edge = responders
            .iter()
            .zip(&combo)
            .map(|(node, a)| format!("{node}:{}", a.label(res)))
            .join(" ");
        writeln!(out, "  {chance} [label=\"chance\", shape=diamond];").unwrap();
        writeln!(out, "  {attack} -> {chance} [label=\"{edge}\"];").unwrap();
        for (order, resolution) in exact_plays(spec, &profile)? {
            let payoffs = play_payoffs(spec, &profile, &resolution)?;
            let leaf = next();
            let order_label = order.nodes().iter().join(",");
            writeln!(out, "  {leaf} [label=\"({})\", shape=box];", payoff_label(&payoffs)).unwrap();
            writeln!(out, "  {chance} -> {leaf} [label=\"[{order_label}]\"];").unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    Ok(out)
}

fn no_attack_resolution(n: usize) -> crate::cta::Resolution {
    crate::cta::Resolution {
        status: crate::cta::ContractStatus::Aborted,
        success: false,
        members: vec![false; n],
        true_units: 0,
        declared_units: 0,
        size: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::super::OrderDistribution;
    use super::*;
    use crate::model::{NodeId, PowerDistribution, ProtocolParams};
    use crate::rational::{int, ratio};

    #[test]
    fn leaf_count_matches_rendering() {
        let spec = GameSpec::new(
            PowerDistribution::from_units(vec![2, 1, 1], 4).unwrap(),
            ProtocolParams::new(ratio(1, 2), 3, int(100), 100, ratio(1, 4)),
            NodeId(0),
            OrderDistribution::UniformExact,
        );
        let dot = render_game_tree(&spec).unwrap();
        let leaves = dot.matches("shape=box").count() as u128;
        // r = 2, 5 declarations: 1 + 2*5*1 + 1*25*2 + 1 (no attack)
        assert_eq!(game_tree_leaf_count(&spec), 62);
        assert_eq!(leaves, 62);
        assert!(dot.starts_with("digraph game {"));
    }

    #[test]
    fn refuses_large_trees() {
        let spec = GameSpec::new(
            PowerDistribution::equal(5).unwrap(),
            ProtocolParams::new(ratio(3, 5), 5, int(100), 100, ratio(1, 5)),
            NodeId(0),
            OrderDistribution::UniformExact,
        );
        assert!(matches!(render_game_tree(&spec), Err(CoreError::TreeTooLarge(_))));
    }
}
