//! Fixed scenarios shared by the benchmarks.

use ratcensor_core::chain::{AttackRegime, ChainConfig};
use ratcensor_core::countermeasures::{JoinModel, MultiContractSpec};
use ratcensor_core::game::{GameSpec, OrderDistribution};
use ratcensor_core::model::{NodeId, PowerDistribution, ProtocolParams};
use ratcensor_core::rational::{int, ratio};

pub fn params(n: usize, resolution: u64) -> ProtocolParams {
    ProtocolParams::new(ratio(1, 2), n, int(100), 100, ratio(1, resolution as i64))
}

/// Launcher holds the largest share; the rest is split as evenly as the grid allows.
pub fn skewed_powers(n: usize, resolution: u64) -> PowerDistribution {
    let launcher = resolution / 3;
    let rest = resolution - launcher;
    let mut units = vec![rest / (n as u64 - 1); n - 1];
    units[0] += rest % (n as u64 - 1);
    units.insert(0, launcher);
    PowerDistribution::from_units(units, resolution).expect("valid grid point")
}

pub fn game(n: usize, resolution: u64) -> GameSpec {
    GameSpec::new(skewed_powers(n, resolution), params(n, resolution), NodeId(0), OrderDistribution::UniformExact)
}

pub fn chain(n: usize, horizon: u64) -> (ChainConfig, AttackRegime) {
    let powers = skewed_powers(n, 20);
    let coalition = (0..n / 2 + 1).map(NodeId).collect();
    (ChainConfig::new(powers, params(n, 20), horizon, 7), AttackRegime::attack(coalition, horizon / 4))
}

pub fn uniform_multi(n: usize) -> MultiContractSpec {
    let powers = PowerDistribution::equal(n).expect("n >= 1");
    // t above 1/2 so two disjoint coalitions cannot both close
    let params = ProtocolParams::new(ratio(3, 5), n, int(100), 100, ratio(1, powers.resolution() as i64));
    MultiContractSpec::new(
        powers,
        params,
        vec![NodeId(0), NodeId(1)],
        JoinModel::UniformRandom { seed: 7, trials: 10_000 },
    )
}
