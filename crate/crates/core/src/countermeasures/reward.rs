//! Participation-dependent block rewards and the condition under which they
//! make censorship unprofitable.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::game::{self, GameSpec, StrategyProfile};
use crate::model::{NodeId, ProtocolParams};
use crate::rational::{self, format_rational, Rational};

/// Block reward as a function of the number of effective participants `ñ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardFunction {
    Constant {
        #[serde(with = "rational::serde_str")]
        value: Rational,
    },
    /// `slope * ñ`
    Linear {
        #[serde(with = "rational::serde_str")]
        slope: Rational,
    },
    /// `table[ñ - 1]`
    Custom {
        #[serde(with = "rational::serde_str_vec")]
        table: Vec<Rational>,
    },
}

impl Default for RewardFunction {
    fn default() -> Self {
        RewardFunction::Constant { value: rational::int(1) }
    }
}

impl RewardFunction {
    pub fn constant(value: Rational) -> Self {
        RewardFunction::Constant { value }
    }

    pub fn linear(slope: Rational) -> Self {
        RewardFunction::Linear { slope }
    }

    pub fn custom(table: Vec<Rational>) -> Self {
        RewardFunction::Custom { table }
    }

    pub fn value(&self, participants: usize) -> Result<Rational> {
        if participants == 0 {
            return Err(CoreError::RewardFunction("participant count must be >= 1".into()));
        }
        match self {
            RewardFunction::Constant { value } => Ok(value.clone()),
            RewardFunction::Linear { slope } => Ok(slope * rational::int(participants as i64)),
            RewardFunction::Custom { table } => table.get(participants - 1).cloned().ok_or_else(|| {
                CoreError::RewardFunction(format!("no table entry for {participants} participants"))
            }),
        }
    }

    pub fn value_f64(&self, participants: usize) -> Result<f64> {
        Ok(rational::to_f64(&self.value(participants)?))
    }

    /// Defined, non-negative and non-decreasing on `1..=n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let values = (1..=n).map(|m| self.value(m)).collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| *v < Rational::zero()) {
            return Err(CoreError::RewardFunction("negative reward".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(CoreError::RewardFunction("reward must be non-decreasing in participants".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            RewardFunction::Constant { value } => format!("constant:{}", format_rational(value)),
            RewardFunction::Linear { slope } => format!("linear:{}", format_rational(slope)),
            RewardFunction::Custom { table } => {
                let parts: Vec<String> = table.iter().map(format_rational).collect();
                format!("custom:{}", parts.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnprofitabilityReport {
    pub satisfied_for: BTreeSet<usize>,
    pub violated_for: BTreeSet<usize>,
}

impl UnprofitabilityReport {
    pub fn satisfied_for_all<'a>(&self, sizes: impl IntoIterator<Item = &'a usize>) -> bool {
        sizes.into_iter().all(|m| self.satisfied_for.contains(m))
    }
}

/// Splits `ñ ∈ [1, n-1]` by whether `f(ñ) < t * f(n)`.
pub fn check_unprofitability_condition(
    reward: &RewardFunction,
    params: &ProtocolParams,
    n: usize,
) -> Result<UnprofitabilityReport> {
    let full = reward.value(n)?;
    let bound = &params.threshold * &full;
    let mut report = UnprofitabilityReport {
        satisfied_for: BTreeSet::new(),
        violated_for: BTreeSet::new(),
    };
    for m in 1..n {
        if reward.value(m)? < bound {
            report.satisfied_for.insert(m);
        } else {
            report.violated_for.insert(m);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitabilityRow {
    pub coalition: Vec<NodeId>,
    pub node: NodeId,
    #[serde(with = "rational::serde_str")]
    pub attack_utility: Rational,
    #[serde(with = "rational::serde_str")]
    pub honest_utility: Rational,
    pub attack_profitable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitabilityReport {
    pub reward: RewardFunction,
    /// Coalition sizes realized by the truthful profile.
    pub reachable_sizes: BTreeSet<usize>,
    pub rows: Vec<ProfitabilityRow>,
}

impl ProfitabilityReport {
    pub fn any_profitable(&self) -> bool {
        self.rows.iter().any(|r| r.attack_profitable)
    }

    pub fn all_profitable(&self) -> bool {
        self.rows.iter().all(|r| r.attack_profitable)
    }
}

/// For every coalition that the truthful profile can produce, compares each
/// member's per-block attack payoff under `reward` with its honest payoff
/// `v_i * f(n)`.
pub fn attack_profitability_under_reward(reward: &RewardFunction, spec: &GameSpec) -> Result<ProfitabilityReport> {
    let n = spec.powers.len();
    reward.validate(n)?;
    let mut spec = spec.clone();
    spec.reward = reward.clone();
    let profile = StrategyProfile::truthful(&spec);
    let coalitions = game::successful_coalitions(&spec, &profile)?;

    let mut rows = Vec::new();
    let mut reachable_sizes = BTreeSet::new();
    for coalition in coalitions {
        reachable_sizes.insert(coalition.len());
        let regime = crate::chain::AttackRegime::attack(coalition.clone(), 0);
        let per_block = crate::chain::attack_block_utilities(&spec.powers, &spec.params, &spec.reward, &regime)?;
        for &node in &coalition {
            let honest_utility = spec.powers.power(node) * reward.value(n)?;
            let attack_utility = per_block[node.0].clone();
            rows.push(ProfitabilityRow {
                coalition: coalition.clone(),
                node,
                attack_profitable: attack_utility > honest_utility,
                attack_utility,
                honest_utility,
            });
        }
    }
    Ok(ProfitabilityReport {
        reward: reward.clone(),
        reachable_sizes,
        rows,
    })
}
