//! Dispatch from a scenario to the core library, and report assembly.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use ratcensor_core::chain::{self, AttackRegime, ChainConfig};
use ratcensor_core::countermeasures::{
    attack_profitability_under_reward, check_unprofitability_condition, estimate_eta, read_history_csv,
    resolve_multi_contract, verify_multi_contract_ne, win_probability, EtaEstimate, JoinModel, MultiContractSpec,
    MultiNeReport, ProfitabilityReport, UnprofitabilityReport, WinProbabilities, WinnerReport,
};
use ratcensor_core::cta::{run_contract, sample_order, Action, OutcomeRecord, ShuffleSource};
use ratcensor_core::game::{
    self, expected_utilities, verify_ne_subgame, verify_spe, GameSpec, OrderDistribution, SpeReport, StrategyProfile,
    VerificationReport, EXACT_RESPONDER_CAP,
};
use ratcensor_core::model::{power_grid, validate_scenario, NodeId, PowerDistribution, RewardLedger};
use ratcensor_core::rational::format_rational;

use crate::error::{CliError, CliResult};
use crate::scenario::{Experiment, HistorySource, LauncherChoice, OrderMode, OutputFormat, PowerSource, Scenario};

pub const VERSION: &str = concat!("ratcensor ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub scenario: String,
    pub experiment: String,
    pub seed: u64,
    pub trials: u64,
    pub duration_ms: u64,
    pub payload: Value,
}

/// What an experiment produced: the JSON payload, CSV rows, and whether a
/// verifier found a counterexample.
pub struct Outcome {
    pub payload: Value,
    pub csv: Vec<u8>,
    pub failure: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SimulatePayload {
    /// The contract play that formed the coalition, when none was given.
    pub contract: Option<OutcomeRecord>,
    pub regime: AttackRegime,
    pub excluded: usize,
    pub ledger: RewardLedger,
    pub average_utility: Vec<f64>,
    pub expected_utility: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyNePayload {
    pub report: VerificationReport,
    pub utilities: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct MultiPayload {
    pub resolution: WinnerReport,
    pub win_probability: Option<WinProbabilities>,
    pub equilibrium: Option<MultiNeReport>,
    pub no_winner_payoff: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RewardPayload {
    pub condition: UnprofitabilityReport,
    pub profitability: ProfitabilityReport,
    /// The condition holds for every coalition size the attack can reach.
    pub condition_covers_reachable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub powers: String,
    pub launcher: usize,
    pub holds: bool,
    pub witnesses: usize,
    pub launcher_margin: Option<String>,
    pub utilities: String,
}

#[derive(Debug, Serialize)]
pub struct SweepPayload {
    pub experiment: String,
    pub scenarios: usize,
    pub failures: usize,
    pub rows: Vec<SweepRow>,
}

pub fn run_scenario(scenario: &Scenario) -> CliResult<(RunReport, Outcome)> {
    let start = Instant::now();
    log::info!("running {} ({})", scenario.name, scenario.experiment);
    let outcome = match scenario.experiment {
        Experiment::Simulate => simulate(scenario)?,
        Experiment::VerifyNe => verify_ne(scenario)?,
        Experiment::VerifySpe => verify_spe_run(scenario)?,
        Experiment::MultiContract => multi_contract(scenario)?,
        Experiment::RewardCm => reward_cm(scenario)?,
        Experiment::EstimateEta => eta(scenario)?,
    };
    Ok((report(scenario, scenario.experiment.name(), start, &outcome), outcome))
}

fn report(scenario: &Scenario, experiment: &str, start: Instant, outcome: &Outcome) -> RunReport {
    RunReport {
        version: VERSION,
        scenario: scenario.name.clone(),
        experiment: experiment.to_string(),
        seed: scenario.seed,
        trials: scenario.trials,
        duration_ms: start.elapsed().as_millis() as u64,
        payload: outcome.payload.clone(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn csv_rows<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Runtime(e.into()))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(anyhow::anyhow!("{e}")))
}

fn checked_powers(scenario: &Scenario) -> CliResult<&PowerDistribution> {
    let powers = scenario.listed_powers()?;
    validate_scenario(powers, &scenario.params).into_result()?;
    Ok(powers)
}

fn game_spec(scenario: &Scenario, powers: &PowerDistribution, launcher: NodeId) -> GameSpec {
    let order = match scenario.order {
        OrderMode::Exact => OrderDistribution::UniformExact,
        OrderMode::Sampled => OrderDistribution::UniformSampled {
            trials: scenario.trials,
            seed: scenario.seed,
        },
    };
    GameSpec::new(powers.clone(), scenario.params.clone(), launcher, order)
        .with_payoff_rule(scenario.payoff_rule)
        .with_reward(scenario.reward.clone())
}

fn simulate(scenario: &Scenario) -> CliResult<Outcome> {
    let powers = checked_powers(scenario)?;
    let n = powers.len();
    let launcher = scenario.single_launcher()?;
    let mut config = ChainConfig::new(powers.clone(), scenario.params.clone(), scenario.horizon, scenario.seed);
    config.reward = scenario.reward.clone();

    let (contract, regime) = match (&scenario.coalition, scenario.attack) {
        (_, false) => (None, AttackRegime::honest()),
        (Some(c), true) => (None, AttackRegime::attack(c.clone(), scenario.trigger)),
        (None, true) => {
            // everyone joins truthfully, in a seeded random order
            let actions: Vec<Action> = powers.nodes().map(|v| Action::Declare(powers.unit(v))).collect();
            let responders: Vec<NodeId> = powers.nodes().filter(|&v| v != launcher).collect();
            let mut source = ShuffleSource::new(scenario.seed);
            let order = sample_order(&responders, &mut source);
            let record = run_contract(
                powers,
                &scenario.params,
                launcher,
                powers.unit(launcher),
                &actions,
                &order,
                Some(scenario.seed),
            )?;
            let regime = if record.success {
                AttackRegime::attack(record.coalition.clone(), scenario.trigger)
            } else {
                AttackRegime::honest()
            };
            (Some(record), regime)
        }
    };
    let excluded = scenario.excluded.unwrap_or(if regime.active { n - regime.coalition.len() } else { 0 });
    let ledger = chain::simulate_horizon(&config, &regime, excluded)?;
    let expected = chain::expected_ledger(&config, &regime)?;
    let mut csv = Vec::new();
    chain::write_ledger_csv(&ledger, powers, &mut csv)?;
    let payload = SimulatePayload {
        contract,
        regime,
        excluded,
        average_utility: ledger.average_utility()?,
        ledger,
        expected_utility: expected.iter().map(format_rational).collect(),
    };
    Ok(Outcome {
        payload: to_value(&payload),
        csv,
        failure: None,
    })
}

fn verification_row(report: &VerificationReport) -> CliResult<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        scenario: &'a str,
        holds: bool,
        witnesses: usize,
        profiles_evaluated: u64,
        plays_resolved: u64,
    }
    csv_rows(&[Row {
        scenario: &report.scenario,
        holds: report.holds,
        witnesses: report.witnesses.len(),
        profiles_evaluated: report.enumeration_stats.profiles_evaluated,
        plays_resolved: report.enumeration_stats.plays_resolved,
    }])
}

fn verify_ne(scenario: &Scenario) -> CliResult<Outcome> {
    let powers = checked_powers(scenario)?;
    let spec = game_spec(scenario, powers, scenario.single_launcher()?);
    let report = verify_ne_subgame(&spec)?;
    let utilities = expected_utilities(&spec, &StrategyProfile::truthful(&spec))?;
    let utilities = match utilities.exact {
        Some(exact) => exact.iter().map(format_rational).collect(),
        None => utilities.values.iter().map(|v| v.to_string()).collect(),
    };
    let failure = (!report.holds).then(|| format!("{} profitable deviations", report.witnesses.len()));
    Ok(Outcome {
        csv: verification_row(&report)?,
        payload: to_value(&VerifyNePayload { report, utilities }),
        failure,
    })
}

fn verify_spe_run(scenario: &Scenario) -> CliResult<Outcome> {
    let powers = checked_powers(scenario)?;
    let spec = game_spec(scenario, powers, scenario.single_launcher()?);
    let report: SpeReport = verify_spe(&spec)?;
    let failure = (!report.holds).then(|| {
        format!(
            "{} responder and {} launcher deviations pay more",
            report.subgame.witnesses.len(),
            report.launcher_witnesses.len()
        )
    });
    #[derive(Serialize)]
    struct Row<'a> {
        scenario: &'a str,
        holds: bool,
        responder_witnesses: usize,
        launcher_witnesses: usize,
        launcher_attack_utility: String,
        launcher_honest_utility: String,
    }
    let csv = csv_rows(&[Row {
        scenario: &report.subgame.scenario,
        holds: report.holds,
        responder_witnesses: report.subgame.witnesses.len(),
        launcher_witnesses: report.launcher_witnesses.len(),
        launcher_attack_utility: format_rational(&report.launcher_attack_utility),
        launcher_honest_utility: format_rational(&report.launcher_honest_utility),
    }])?;
    Ok(Outcome {
        payload: to_value(&report),
        csv,
        failure,
    })
}

fn multi_contract(scenario: &Scenario) -> CliResult<Outcome> {
    let powers = checked_powers(scenario)?;
    let mut spec = MultiContractSpec::new(
        powers.clone(),
        scenario.params.clone(),
        scenario.launchers.clone(),
        scenario.join.clone(),
    );
    spec.reward = scenario.reward.clone();
    spec.launchers_may_join = scenario.launchers_may_join;
    let resolution = resolve_multi_contract(&spec)?;
    let win = match spec.join_model {
        JoinModel::UniformRandom { .. } => Some(win_probability(&spec)?),
        _ => None,
    };
    let equilibrium = match spec.join_model {
        JoinModel::AllJoinCoalition { .. } => Some(verify_multi_contract_ne(&spec, scenario.seed)?),
        _ => None,
    };
    let failure = equilibrium
        .as_ref()
        .filter(|e| !e.holds)
        .map(|e| format!("{} profitable deviations", e.witnesses.len()));

    #[derive(Serialize)]
    struct Row {
        contract: usize,
        launcher: usize,
        power: String,
        members: usize,
        winner: bool,
        win_probability: Option<String>,
    }
    let rows: Vec<Row> = (0..spec.k())
        .map(|c| Row {
            contract: c + 1,
            launcher: spec.launchers[c].0 + 1,
            power: format_rational(&resolution.coalition_powers[c]),
            members: resolution.coalitions[c].len(),
            winner: resolution.winner == Some(c + 1),
            win_probability: win.as_ref().map(|w| format_rational(&w.per_contract[c])),
        })
        .collect();
    let payload = MultiPayload {
        resolution,
        win_probability: win,
        equilibrium,
        no_winner_payoff: "honest share v_i * f(n) for every node",
    };
    Ok(Outcome {
        payload: to_value(&payload),
        csv: csv_rows(&rows)?,
        failure,
    })
}

fn reward_cm(scenario: &Scenario) -> CliResult<Outcome> {
    let powers = checked_powers(scenario)?;
    let spec = game_spec(scenario, powers, scenario.single_launcher()?);
    let condition = check_unprofitability_condition(&scenario.reward, &scenario.params, powers.len())?;
    let profitability = attack_profitability_under_reward(&scenario.reward, &spec)?;
    let covers = condition.satisfied_for_all(&profitability.reachable_sizes);
    let failure = (covers && profitability.any_profitable())
        .then(|| "condition holds but some member still profits".to_string());

    #[derive(Serialize)]
    struct Row {
        coalition: String,
        node: usize,
        attack_utility: String,
        honest_utility: String,
        attack_profitable: bool,
    }
    let rows: Vec<Row> = profitability
        .rows
        .iter()
        .map(|r| Row {
            coalition: r.coalition.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "),
            node: r.node.0 + 1,
            attack_utility: format_rational(&r.attack_utility),
            honest_utility: format_rational(&r.honest_utility),
            attack_profitable: r.attack_profitable,
        })
        .collect();
    Ok(Outcome {
        csv: csv_rows(&rows)?,
        payload: to_value(&RewardPayload {
            condition,
            profitability,
            condition_covers_reachable: covers,
        }),
        failure,
    })
}

fn eta(scenario: &Scenario) -> CliResult<Outcome> {
    let history = match &scenario.history {
        None => return Err(CliError::Parse("estimate-eta needs history or history_csv".into())),
        Some(HistorySource::Inline(h)) => h.clone(),
        Some(HistorySource::Csv { path, column }) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
            read_history_csv(file, column.as_deref()).map_err(|e| CliError::Parse(e.to_string()))?
        }
    };
    let estimate: EtaEstimate = estimate_eta(scenario.latency, &history, scenario.z)?;
    Ok(Outcome {
        payload: to_value(&estimate),
        csv: csv_rows(&[estimate])?,
        failure: None,
    })
}

/// Runs the scenario's verifier on every grid point.
pub fn sweep(scenario: &Scenario) -> CliResult<(RunReport, Outcome)> {
    let start = Instant::now();
    let PowerSource::Grid { n } = scenario.powers else {
        return Err(CliError::Parse("sweep needs grid_n and epsilon".into()));
    };
    let spe = match scenario.experiment {
        Experiment::VerifyNe => false,
        Experiment::VerifySpe => true,
        other => return Err(CliError::Parse(format!("sweep runs verify-ne or verify-spe, not {other}"))),
    };
    if n == 0 || n - 1 > EXACT_RESPONDER_CAP {
        return Err(CliError::Validation(format!(
            "grid_n = {n}: exact enumeration handles at most {} nodes",
            EXACT_RESPONDER_CAP + 1
        )));
    }
    let grid: Vec<PowerDistribution> = power_grid(n, &scenario.params)?.collect();
    if grid.is_empty() {
        return Err(CliError::Validation(format!(
            "grid n = {n}, epsilon = {}, t = {} has no runnable scenario",
            format_rational(&scenario.params.epsilon),
            scenario.describe_threshold()
        )));
    }
    let mut cases = Vec::new();
    for powers in &grid {
        match scenario.launcher {
            LauncherChoice::All => cases.extend(powers.nodes().map(|l| (powers, l))),
            LauncherChoice::Node(l) if l.0 < n => cases.push((powers, l)),
            LauncherChoice::Node(l) => return Err(CliError::Validation(format!("launcher {l} outside grid of {n}"))),
        }
    }
    let rows: Vec<SweepRow> = cases
        .par_iter()
        .enumerate()
        .map(|(index, &(powers, launcher))| -> CliResult<SweepRow> {
            let spec = game_spec(scenario, powers, launcher);
            let truthful = StrategyProfile::truthful(&spec);
            let utilities = game::expected_utilities(&spec, &truthful)?
                .exact
                .map(|u| u.iter().map(format_rational).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            let (holds, witnesses, margin) = if spe {
                let r = verify_spe(&spec)?;
                (
                    r.holds,
                    r.subgame.witnesses.len() + r.launcher_witnesses.len(),
                    Some(format_rational(&r.margin)),
                )
            } else {
                let r = verify_ne_subgame(&spec)?;
                (r.holds, r.witnesses.len(), None)
            };
            Ok(SweepRow {
                index,
                powers: powers.to_string(),
                launcher: launcher.0 + 1,
                holds,
                witnesses,
                launcher_margin: margin,
                utilities,
            })
        })
        .collect::<CliResult<_>>()?;
    let failures = rows.iter().filter(|r| !r.holds).count();
    let payload = SweepPayload {
        experiment: scenario.experiment.name().to_string(),
        scenarios: rows.len(),
        failures,
        rows,
    };
    let outcome = Outcome {
        csv: csv_rows(&payload.rows)?,
        payload: to_value(&payload),
        failure: (failures > 0).then(|| format!("{failures} grid scenarios fail")),
    };
    Ok((report(scenario, "sweep", start, &outcome), outcome))
}

/// Writes the report (JSON) or the payload rows (CSV).
pub fn write_output<W: Write>(out: &mut W, format: OutputFormat, report: &RunReport, outcome: &Outcome) -> CliResult<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report).map_err(|e| CliError::Runtime(e.into()))?;
            writeln!(out)?;
        }
        OutputFormat::Csv => out.write_all(&outcome.csv)?,
    }
    Ok(())
}
