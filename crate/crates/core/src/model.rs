//! Scenario model: nodes, voting power, protocol parameters, the detection
//! cost step and per-block utility accounting.
//!
//! Voting power is held in integer units of the declaration granularity
//! `epsilon`, so a distribution with resolution `r` stores `v_i * r` for each
//! node. Every threshold comparison in the crate is an integer comparison on
//! these units.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rational::{self, ceil_units, format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0 + 1)
    }
}

/// Normalized voting powers in units of `1 / resolution`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PowerDistribution {
    units: Vec<u64>,
    resolution: u64,
}

impl PowerDistribution {
    pub fn from_units(units: Vec<u64>, resolution: u64) -> Result<Self> {
        if units.is_empty() || resolution == 0 {
            return Err(CoreError::EmptyDistribution);
        }
        Ok(Self { units, resolution })
    }

    /// Converts exact fractions onto the grid, rejecting off-grid values.
    pub fn from_fractions(powers: &[Rational], resolution: u64) -> Result<Self> {
        let units = powers
            .iter()
            .map(|p| fraction_to_units(p, resolution, false))
            .collect::<Result<Vec<_>>>()?;
        Self::from_units(units, resolution)
    }

    /// `n` nodes holding `1/n` each.
    pub fn equal(n: usize) -> Result<Self> {
        Self::from_units(vec![1; n], n as u64)
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn units(&self) -> &[u64] {
        &self.units
    }

    pub fn unit(&self, node: NodeId) -> u64 {
        self.units[node.0]
    }

    pub fn power(&self, node: NodeId) -> Rational {
        rational::ratio(self.units[node.0] as i64, self.resolution as i64)
    }

    pub fn power_f64(&self, node: NodeId) -> f64 {
        self.units[node.0] as f64 / self.resolution as f64
    }

    pub fn powers(&self) -> Vec<Rational> {
        self.nodes().map(|n| self.power(n)).collect()
    }

    pub fn total_units(&self) -> u64 {
        self.units.iter().sum()
    }

    pub fn sum_units<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> u64 {
        nodes.into_iter().map(|n| self.units[n.0]).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.units.len()).map(NodeId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.units.len()
    }
}

impl fmt::Display for PowerDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .nodes()
            .map(|n| format_rational(&self.power(n)))
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// When the call-to-attack contract stops admitting responders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationPolicy {
    /// Close as soon as the declared sum reaches the threshold.
    #[default]
    PowerOnly,
    /// Additionally wait until fewer than `eta` nodes would be excluded.
    PowerAndVisibility,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Honest power threshold `t`.
    #[serde(with = "rational::serde_str")]
    pub threshold: Rational,
    /// Number of excluded nodes at which censorship becomes detectable.
    pub eta: usize,
    /// Per-block detection cost, in block rewards per unit of power.
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    /// Contract timeout in blocks.
    pub timeout: u64,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub policy: TerminationPolicy,
}

impl ProtocolParams {
    pub fn new(threshold: Rational, eta: usize, alpha: Rational, timeout: u64, epsilon: Rational) -> Self {
        Self {
            threshold,
            eta,
            alpha,
            timeout,
            epsilon,
            policy: TerminationPolicy::PowerOnly,
        }
    }

    pub fn with_policy(mut self, policy: TerminationPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// `1 / epsilon`, if epsilon is a valid granularity.
    pub fn resolution(&self) -> Result<u64> {
        let invalid = || CoreError::InvalidEpsilon(format_rational(&self.epsilon));
        if !self.epsilon.is_positive() || self.epsilon > Rational::one() {
            return Err(invalid());
        }
        let inv = self.epsilon.recip();
        if !inv.is_integer() {
            return Err(invalid());
        }
        inv.to_integer().to_u64().ok_or_else(invalid)
    }

    /// Smallest declared/true power, in grid units, that meets the threshold.
    pub fn threshold_units(&self, resolution: u64) -> u64 {
        ceil_units(&self.threshold, resolution)
    }

    /// Maps a declarable value in `{0, eps, ..., 1}` to grid units.
    pub fn to_units(&self, value: &Rational) -> Result<u64> {
        fraction_to_units(value, self.resolution()?, true)
    }
}

fn fraction_to_units(value: &Rational, resolution: u64, cap_at_one: bool) -> Result<u64> {
    let off_grid = || CoreError::OffGrid {
        value: format_rational(value),
        resolution,
    };
    let scaled = value * Rational::from_integer(BigInt::from(resolution));
    if !scaled.is_integer() || scaled.is_negative() {
        return Err(off_grid());
    }
    let units = scaled.to_integer().to_u64().ok_or_else(off_grid)?;
    if cap_at_one && units > resolution {
        return Err(off_grid());
    }
    Ok(units)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotNormalized {
        #[serde(with = "rational::serde_str")]
        total: Rational,
    },
    BigPlayer {
        node: NodeId,
        #[serde(with = "rational::serde_str")]
        power: Rational,
        #[serde(with = "rational::serde_str")]
        limit: Rational,
    },
    ThresholdBelowHalf {
        #[serde(with = "rational::serde_str")]
        threshold: Rational,
    },
    ThresholdAboveOne {
        #[serde(with = "rational::serde_str")]
        threshold: Rational,
    },
    EtaOutOfRange { eta: usize, nodes: usize },
    AlphaTooSmall {
        #[serde(with = "rational::serde_str")]
        alpha: Rational,
    },
    InvalidEpsilon {
        #[serde(with = "rational::serde_str")]
        epsilon: Rational,
    },
    GridMismatch { powers_resolution: u64, params_resolution: u64 },
    TooFewNodes { nodes: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotNormalized { total } => {
                write!(f, "powers sum to {} instead of 1", format_rational(total))
            }
            Violation::BigPlayer { node, power, limit } => write!(
                f,
                "node {} power {} > 1-t = {}",
                node.0,
                format_rational(power),
                format_rational(limit)
            ),
            Violation::ThresholdBelowHalf { threshold } => {
                write!(f, "t below 1/2 (t = {})", format_rational(threshold))
            }
            Violation::ThresholdAboveOne { threshold } => {
                write!(f, "t above 1 (t = {})", format_rational(threshold))
            }
            Violation::EtaOutOfRange { eta, nodes } => {
                write!(f, "eta = {eta} outside [1, {nodes}]")
            }
            Violation::AlphaTooSmall { alpha } => {
                write!(f, "alpha = {} must exceed 1", format_rational(alpha))
            }
            Violation::InvalidEpsilon { epsilon } => write!(
                f,
                "epsilon = {} must lie in (0, 1] with integer inverse",
                format_rational(epsilon)
            ),
            Violation::GridMismatch {
                powers_resolution,
                params_resolution,
            } => write!(
                f,
                "powers are on a 1/{powers_resolution} grid but epsilon is 1/{params_resolution}"
            ),
            Violation::TooFewNodes { nodes } => write!(f, "need at least 2 nodes, got {nodes}"),
        }
    }
}

/// Every violated scenario constraint, not just the first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn runnable(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.runnable() {
            Ok(())
        } else {
            Err(CoreError::InvalidScenario(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "runnable");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

pub fn validate_scenario(powers: &PowerDistribution, params: &ProtocolParams) -> ValidationReport {
    let mut violations = Vec::new();
    let n = powers.len();
    let resolution = powers.resolution();
    let one = Rational::one();
    let half = rational::ratio(1, 2);

    if powers.total_units() != resolution {
        violations.push(Violation::NotNormalized {
            total: rational::ratio(powers.total_units() as i64, resolution as i64),
        });
    }

    let limit = &one - &params.threshold;
    for node in powers.nodes() {
        let power = powers.power(node);
        if power > limit {
            violations.push(Violation::BigPlayer {
                node,
                power,
                limit: limit.clone(),
            });
        }
    }

    if params.threshold < half {
        violations.push(Violation::ThresholdBelowHalf {
            threshold: params.threshold.clone(),
        });
    }
    if params.threshold > one {
        violations.push(Violation::ThresholdAboveOne {
            threshold: params.threshold.clone(),
        });
    }
    if n < 2 {
        violations.push(Violation::TooFewNodes { nodes: n });
    }
    if params.eta < 1 || params.eta > n {
        violations.push(Violation::EtaOutOfRange { eta: params.eta, nodes: n });
    }
    if params.alpha <= one {
        violations.push(Violation::AlphaTooSmall {
            alpha: params.alpha.clone(),
        });
    }
    match params.resolution() {
        Err(_) => violations.push(Violation::InvalidEpsilon {
            epsilon: params.epsilon.clone(),
        }),
        Ok(r) if r != resolution => violations.push(Violation::GridMismatch {
            powers_resolution: resolution,
            params_resolution: r,
        }),
        Ok(_) => {}
    }

    ValidationReport { violations }
}

/// Per-block cost of a censorship strategy that excludes `excluded` nodes.
pub fn cost_of_strategy(excluded: usize, params: &ProtocolParams) -> Rational {
    if excluded < params.eta {
        Rational::zero()
    } else {
        params.alpha.clone()
    }
}

/// Rewards and detection costs accumulated over a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardLedger {
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
    pub blocks: u64,
}

impl RewardLedger {
    pub fn new(nodes: usize) -> Self {
        Self {
            rewards: vec![0.0; nodes],
            costs: vec![0.0; nodes],
            blocks: 0,
        }
    }

    /// `(reward_i - cost_i) / blocks` for every node.
    pub fn average_utility(&self) -> Result<Vec<f64>> {
        if self.blocks == 0 {
            return Err(CoreError::NoBlocks);
        }
        let blocks = self.blocks as f64;
        Ok(self
            .rewards
            .iter()
            .zip(&self.costs)
            .map(|(r, c)| (r - c) / blocks)
            .collect())
    }
}

/// Enumerates every weak composition of 1 into `n` multiples of epsilon that
/// passes [`validate_scenario`], in lexicographic order of the unit vectors.
pub fn power_grid(n: usize, params: &ProtocolParams) -> Result<impl Iterator<Item = PowerDistribution>> {
    if n < 2 {
        return Err(CoreError::GridTooSmall(n));
    }
    let resolution = params.resolution()?;
    let params = params.clone();
    Ok(Compositions::new(n, resolution).filter_map(move |units| {
        let powers = PowerDistribution::from_units(units, resolution).ok()?;
        validate_scenario(&powers, &params).runnable().then_some(powers)
    }))
}

/// Weak compositions of `total` into `parts` non-negative integers.
#[derive(Clone, Debug)]
pub struct Compositions {
    current: Option<Vec<u64>>,
    total: u64,
}

impl Compositions {
    pub fn new(parts: usize, total: u64) -> Self {
        let current = (parts > 0).then(|| {
            let mut first = vec![0; parts];
            first[parts - 1] = total;
            first
        });
        Self { current, total }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.current.take()?;
        let n = out.len();
        let mut next = out.clone();
        let mut suffix = 0;
        for i in (0..n.saturating_sub(1)).rev() {
            suffix += next[i + 1];
            if suffix > 0 {
                next[i] += 1;
                let prefix: u64 = next[..=i].iter().sum();
                for slot in &mut next[i + 1..] {
                    *slot = 0;
                }
                next[n - 1] = self.total - prefix;
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn params(t: Rational, eta: usize, resolution: i64) -> ProtocolParams {
        ProtocolParams::new(t, eta, int(100), 10, ratio(1, resolution))
    }

    fn dist(powers: &[(i64, i64)], resolution: u64) -> PowerDistribution {
        let fr: Vec<Rational> = powers.iter().map(|&(a, b)| ratio(a, b)).collect();
        PowerDistribution::from_fractions(&fr, resolution).unwrap()
    }

    #[test]
    fn accepts_scenario_within_limits() {
        let powers = dist(&[(2, 5), (7, 20), (1, 4)], 20);
        let report = validate_scenario(&powers, &params(ratio(1, 2), 2, 20));
        assert!(report.runnable(), "{report}");
    }

    #[test]
    fn flags_big_player() {
        let powers = dist(&[(3, 5), (2, 5)], 5);
        let report = validate_scenario(&powers, &params(ratio(1, 2), 1, 5));
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::BigPlayer { node: NodeId(0), .. }
        ));
    }

    #[test]
    fn flags_low_threshold() {
        let powers = dist(&[(1, 2), (1, 2)], 2);
        let report = validate_scenario(&powers, &params(ratio(2, 5), 1, 2));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ThresholdBelowHalf { .. })));
        assert!(report.to_string().contains("t below 1/2"));
    }

    #[test]
    fn each_constraint_fails_alone() {
        let ok_powers = dist(&[(1, 4), (1, 4), (1, 4), (1, 4)], 4);
        let ok = params(ratio(1, 2), 2, 4);
        assert!(validate_scenario(&ok_powers, &ok).runnable());

        let unnormalized = PowerDistribution::from_units(vec![1, 1, 1], 4).unwrap();
        let r = validate_scenario(&unnormalized, &params(ratio(1, 2), 2, 4));
        assert!(matches!(r.violations[..], [Violation::NotNormalized { .. }]));

        let skewed = PowerDistribution::from_units(vec![3, 1, 0, 0], 4).unwrap();
        let r = validate_scenario(&skewed, &ok);
        assert!(matches!(r.violations[..], [Violation::BigPlayer { .. }]));

        let r = validate_scenario(&ok_powers, &params(ratio(1, 3), 2, 4));
        assert!(r
            .violations
            .iter()
            .all(|v| matches!(v, Violation::ThresholdBelowHalf { .. })));

        let r = validate_scenario(&ok_powers, &params(ratio(1, 2), 5, 4));
        assert!(matches!(r.violations[..], [Violation::EtaOutOfRange { .. }]));
        let r = validate_scenario(&ok_powers, &params(ratio(1, 2), 0, 4));
        assert!(matches!(r.violations[..], [Violation::EtaOutOfRange { .. }]));

        let mut cheap = ok.clone();
        cheap.alpha = int(1);
        let r = validate_scenario(&ok_powers, &cheap);
        assert!(matches!(r.violations[..], [Violation::AlphaTooSmall { .. }]));

        let mut bad_eps = ok.clone();
        bad_eps.epsilon = ratio(3, 10);
        let r = validate_scenario(&ok_powers, &bad_eps);
        assert!(matches!(r.violations[..], [Violation::InvalidEpsilon { .. }]));

        let r = validate_scenario(&ok_powers, &params(ratio(1, 2), 2, 8));
        assert!(matches!(r.violations[..], [Violation::GridMismatch { .. }]));
    }

    #[test]
    fn off_grid_powers_are_rejected() {
        let err = PowerDistribution::from_fractions(&[ratio(1, 3), ratio(2, 3)], 4).unwrap_err();
        assert!(matches!(err, CoreError::OffGrid { .. }));
    }

    #[test]
    fn cost_step() {
        let p = params(ratio(1, 2), 2, 4);
        assert_eq!(cost_of_strategy(0, &p), int(0));
        assert_eq!(cost_of_strategy(1, &p), int(0));
        assert_eq!(cost_of_strategy(2, &p), int(100));
        assert_eq!(cost_of_strategy(7, &p), int(100));
    }

    proptest! {
        #[test]
        fn cost_has_exactly_one_jump_at_eta(eta in 1usize..12, alpha in 2i64..500) {
            let mut p = params(ratio(1, 2), eta, 4);
            p.alpha = int(alpha);
            let costs: Vec<Rational> = (0..=12).map(|k| cost_of_strategy(k, &p)).collect();
            let jumps: Vec<usize> = (1..costs.len()).filter(|&k| costs[k] != costs[k - 1]).collect();
            prop_assert_eq!(jumps, vec![eta]);
            prop_assert!(costs.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn average_utility_arithmetic() {
        let ledger = RewardLedger {
            rewards: vec![3.0, 0.0],
            costs: vec![0.0, 0.0],
            blocks: 10,
        };
        assert_eq!(ledger.average_utility().unwrap(), vec![0.3, 0.0]);
    }

    #[test]
    fn detectable_attack_utility_is_negative() {
        // Node with power 1/2 mines every block while paying alpha * v each block.
        let blocks = 1000;
        let ledger = RewardLedger {
            rewards: vec![blocks as f64],
            costs: vec![100.0 * 0.5 * blocks as f64],
            blocks,
        };
        assert_eq!(ledger.average_utility().unwrap(), vec![-49.0]);
    }

    #[test]
    fn average_utility_needs_blocks() {
        assert!(matches!(
            RewardLedger::new(2).average_utility(),
            Err(CoreError::NoBlocks)
        ));
    }

    fn brute_force_grid(n: usize, resolution: u64, t: &Rational) -> Vec<Vec<u64>> {
        // Independent of the odometer: nested counting over base-(r+1) digits.
        let base = resolution + 1;
        let limit = (Rational::one() - t) * int(resolution as i64);
        let mut out = Vec::new();
        for code in 0..base.pow(n as u32) {
            let mut c = code;
            let mut parts = Vec::with_capacity(n);
            for _ in 0..n {
                parts.push(c % base);
                c /= base;
            }
            parts.reverse();
            if parts.iter().sum::<u64>() != resolution {
                continue;
            }
            if parts.iter().any(|&p| int(p as i64) > limit) {
                continue;
            }
            out.push(parts);
        }
        out
    }

    #[test]
    fn grid_examples() {
        let g: Vec<_> = power_grid(2, &params(ratio(1, 2), 1, 2)).unwrap().collect();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].units(), &[1, 1]);

        let g: Vec<Vec<u64>> = power_grid(3, &params(ratio(1, 2), 1, 4))
            .unwrap()
            .map(|d| d.units().to_vec())
            .collect();
        assert_eq!(
            g,
            vec![
                vec![0, 2, 2],
                vec![1, 1, 2],
                vec![1, 2, 1],
                vec![2, 0, 2],
                vec![2, 1, 1],
                vec![2, 2, 0]
            ]
        );

        assert_eq!(power_grid(2, &params(ratio(1, 2), 1, 1)).unwrap().count(), 0);
        assert!(matches!(
            power_grid(1, &params(ratio(1, 2), 1, 2)),
            Err(CoreError::GridTooSmall(1))
        ));
    }

    #[test]
    fn grid_matches_brute_force() {
        for n in 2..=4usize {
            for resolution in 1..=10u64 {
                for t in [ratio(1, 2), ratio(3, 5), ratio(2, 3)] {
                    // eta = 1 is always in range, so only the power constraints filter.
                    let p = params(t.clone(), 1, resolution as i64);
                    let got: Vec<Vec<u64>> = power_grid(n, &p)
                        .unwrap()
                        .map(|d| d.units().to_vec())
                        .collect();
                    assert_eq!(got, brute_force_grid(n, resolution, &t), "n={n} r={resolution}");
                }
            }
        }
    }

    #[test]
    fn compositions_count() {
        // C(total + parts - 1, parts - 1)
        assert_eq!(Compositions::new(5, 10).count(), 1001);
        assert_eq!(Compositions::new(1, 3).collect::<Vec<_>>(), vec![vec![3]]);
        assert_eq!(Compositions::new(3, 0).count(), 1);
    }
}
