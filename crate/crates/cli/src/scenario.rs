//! Scenario files: one `key = value` pair per line, `#` starts a comment.
//!
//! ```text
//! name = ne_n3
//! experiment = verify-ne
//! powers = 0.4, 0.35, 0.25
//! t = 0.5
//! ```
//!
//! Unknown and repeated keys are errors. See the README for every key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use ratcensor_core::countermeasures::{JoinModel, MultiAction, RewardFunction};
use ratcensor_core::game::PayoffRule;
use ratcensor_core::model::{NodeId, PowerDistribution, ProtocolParams, TerminationPolicy};
use ratcensor_core::rational::{common_resolution, format_rational, int, parse_rational, ratio};
use ratcensor_core::Rational;

use crate::error::{CliError, CliResult};

pub const KNOWN_KEYS: &[&str] = &[
    "name",
    "experiment",
    "powers",
    "grid_n",
    "t",
    "eta",
    "alpha",
    "timeout",
    "epsilon",
    "policy",
    "launcher",
    "seed",
    "trials",
    "format",
    "order",
    "payoff_rule",
    "reward",
    "horizon",
    "trigger",
    "regime",
    "coalition",
    "excluded",
    "launchers",
    "join",
    "launchers_may_join",
    "latency",
    "history",
    "history_csv",
    "history_column",
    "z",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    VerifyNe,
    VerifySpe,
    MultiContract,
    RewardCm,
    EstimateEta,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Simulate,
        Experiment::VerifyNe,
        Experiment::VerifySpe,
        Experiment::MultiContract,
        Experiment::RewardCm,
        Experiment::EstimateEta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::VerifyNe => "verify-ne",
            Experiment::VerifySpe => "verify-spe",
            Experiment::MultiContract => "multi-contract",
            Experiment::RewardCm => "reward-cm",
            Experiment::EstimateEta => "estimate-eta",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(format!("unknown format {s:?} (json or csv)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OrderMode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LauncherChoice {
    Node(NodeId),
    /// Sweeps only: every node takes a turn.
    All,
}

/// Where the powers come from.
#[derive(Clone, Debug, PartialEq)]
pub enum PowerSource {
    Listed(PowerDistribution),
    Grid { n: usize },
    /// Only the eta estimator runs without powers.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HistorySource {
    Inline(Vec<u64>),
    Csv { path: PathBuf, column: Option<String> },
}

/// A parsed scenario. Values are checked for syntax here and for
/// consistency when an experiment runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub powers: PowerSource,
    pub params: ProtocolParams,
    pub eta_given: bool,
    pub launcher: LauncherChoice,
    pub seed: u64,
    pub trials: u64,
    pub format: OutputFormat,
    pub order: OrderMode,
    pub payoff_rule: PayoffRule,
    pub reward: RewardFunction,
    pub horizon: u64,
    pub trigger: u64,
    pub attack: bool,
    pub coalition: Option<Vec<NodeId>>,
    pub excluded: Option<usize>,
    pub launchers: Vec<NodeId>,
    pub join: JoinModel,
    pub launchers_may_join: bool,
    pub latency: usize,
    pub history: Option<HistorySource>,
    pub z: f64,
}

/// Splits the text into key/value pairs.
pub fn parse_pairs(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Parse(format!("line {}: expected key = value", lineno + 1)));
        };
        insert_pair(&mut pairs, key.trim(), value.trim(), &format!("line {}", lineno + 1))?;
    }
    Ok(pairs)
}

fn insert_pair(pairs: &mut BTreeMap<String, String>, key: &str, value: &str, at: &str) -> CliResult<()> {
    if !KNOWN_KEYS.contains(&key) {
        return Err(CliError::Parse(format!("{at}: unknown key {key:?}")));
    }
    if pairs.insert(key.to_string(), value.to_string()).is_some() {
        return Err(CliError::Parse(format!("{at}: key {key:?} given twice")));
    }
    Ok(())
}

/// Applies `key=value` overrides on top of the file's pairs.
pub fn apply_overrides(pairs: &mut BTreeMap<String, String>, overrides: &[String]) -> CliResult<()> {
    for o in overrides {
        let Some((key, value)) = o.split_once('=') else {
            return Err(CliError::Parse(format!("override {o:?}: expected key=value")));
        };
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Parse(format!("override: unknown key {key:?}")));
        }
        pairs.insert(key.to_string(), value.trim().to_string());
    }
    Ok(())
}

struct Reader<'a> {
    pairs: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Parse(format!("{key} = {v:?}: {e}"))))
            .transpose()
    }

    fn rational(&self, key: &str) -> CliResult<Option<Rational>> {
        self.raw(key)
            .map(|v| parse_rational(v).map_err(|e| CliError::Parse(format!("{key}: {e}"))))
            .transpose()
    }

    fn list<T>(&self, key: &str, item: impl Fn(&str) -> Option<T>) -> CliResult<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|s| item(s.trim()).ok_or_else(|| CliError::Parse(format!("{key}: bad item {:?}", s.trim()))))
            .collect::<CliResult<Vec<T>>>()
            .map(Some)
    }

    fn flag(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            None | Some("false") | Some("no") => Ok(false),
            Some("true") | Some("yes") => Ok(true),
            Some(v) => Err(CliError::Parse(format!("{key} = {v:?}: expected true or false"))),
        }
    }
}

/// 1-based node number as written in scenario files.
fn node_number(s: &str) -> Option<NodeId> {
    let s = s.strip_prefix('x').unwrap_or(s);
    match s.parse::<usize>() {
        Ok(0) | Err(_) => None,
        Ok(i) => Some(NodeId(i - 1)),
    }
}

pub fn parse_reward(text: &str) -> CliResult<RewardFunction> {
    let bad = |m: String| CliError::Parse(format!("reward {text:?}: {m}"));
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    let number = |s: &str| parse_rational(s).map_err(|e| bad(e.to_string()));
    match kind.trim() {
        "constant" => Ok(RewardFunction::constant(if arg.trim().is_empty() { int(1) } else { number(arg)? })),
        "linear" => Ok(RewardFunction::linear(number(arg)?)),
        "custom" => Ok(RewardFunction::custom(arg.split(',').map(number).collect::<CliResult<_>>()?)),
        other => Err(bad(format!("unknown kind {other:?} (constant, linear, custom)"))),
    }
}

fn parse_join(text: &str) -> CliResult<JoinModel> {
    let bad = || CliError::Parse(format!("join {text:?}: expected all:J, uniform, join-all or explicit:a,b,.."));
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    match kind.trim() {
        "all" => Ok(JoinModel::AllJoinCoalition {
            contract: arg.trim().parse().map_err(|_| bad())?,
        }),
        // seed and trials are filled in from the scenario
        "uniform" => Ok(JoinModel::UniformRandom { seed: 0, trials: 0 }),
        "join-all" => Ok(JoinModel::JoinAll),
        "explicit" => {
            let actions = arg
                .split(',')
                .map(|a| match a.trim() {
                    "-" | "0" | "none" => Some(MultiAction::Abstain),
                    c => c.parse().ok().map(MultiAction::Join),
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(bad)?;
            Ok(JoinModel::ExplicitProfile { actions })
        }
        _ => Err(bad()),
    }
}

impl Scenario {
    pub fn from_pairs(pairs: &BTreeMap<String, String>, base_dir: &Path) -> CliResult<Self> {
        let r = Reader { pairs };
        let experiment: Experiment = r
            .parse("experiment")?
            .ok_or_else(|| CliError::Parse("missing key \"experiment\"".into()))?;

        let listed = r.list("powers", |s| parse_rational(s).ok())?;
        let grid_n: Option<usize> = r.parse("grid_n")?;
        let epsilon = r.rational("epsilon")?;

        let (powers, epsilon) = match (listed, grid_n) {
            (Some(_), Some(_)) => return Err(CliError::Parse("give either powers or grid_n, not both".into())),
            (Some(values), None) => {
                let resolution = match &epsilon {
                    Some(e) => epsilon_resolution(e)?,
                    None => common_resolution(&values)
                        .ok_or_else(|| CliError::Parse("powers need a common denominator below 2^64".into()))?,
                };
                let dist = PowerDistribution::from_fractions(&values, resolution)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                (PowerSource::Listed(dist), ratio(1, resolution as i64))
            }
            (None, Some(n)) => {
                let eps = epsilon.ok_or_else(|| CliError::Parse("grid_n needs epsilon".into()))?;
                (PowerSource::Grid { n }, eps)
            }
            (None, None) => (PowerSource::None, epsilon.unwrap_or_else(|| int(1))),
        };
        let n = match &powers {
            PowerSource::Listed(p) => p.len(),
            PowerSource::Grid { n } => *n,
            PowerSource::None => 1,
        };

        let eta: Option<usize> = r.parse("eta")?;
        let policy = match r.raw("policy") {
            None | Some("power-only") => TerminationPolicy::PowerOnly,
            Some("power-and-visibility") => TerminationPolicy::PowerAndVisibility,
            Some(v) => return Err(CliError::Parse(format!("policy = {v:?}: power-only or power-and-visibility"))),
        };
        let threshold = match (r.rational("t")?, experiment) {
            (Some(t), _) => t,
            (None, Experiment::EstimateEta) => ratio(1, 2),
            (None, _) => return Err(CliError::Parse("missing key \"t\"".into())),
        };
        let params = ProtocolParams::new(
            threshold,
            eta.unwrap_or(n),
            r.rational("alpha")?.unwrap_or_else(|| int(100)),
            r.parse("timeout")?.unwrap_or(1_000),
            epsilon,
        )
        .with_policy(policy);

        let launcher = match r.raw("launcher") {
            None => LauncherChoice::Node(NodeId(0)),
            Some("all") => LauncherChoice::All,
            Some(v) => LauncherChoice::Node(
                node_number(v).ok_or_else(|| CliError::Parse(format!("launcher = {v:?}: 1-based node number")))?,
            ),
        };
        let order = match r.raw("order") {
            None | Some("exact") => OrderMode::Exact,
            Some("sampled") => OrderMode::Sampled,
            Some(v) => return Err(CliError::Parse(format!("order = {v:?}: exact or sampled"))),
        };
        let payoff_rule = match r.raw("payoff_rule") {
            None | Some("true-power") => PayoffRule::TruePowerShare,
            Some("declared-power") => PayoffRule::DeclaredPowerShare,
            Some(v) => return Err(CliError::Parse(format!("payoff_rule = {v:?}: true-power or declared-power"))),
        };
        let regime = match r.raw("regime") {
            None | Some("attack") => true,
            Some("honest") => false,
            Some(v) => return Err(CliError::Parse(format!("regime = {v:?}: attack or honest"))),
        };

        let seed = r.parse("seed")?.unwrap_or(0);
        let trials = r.parse("trials")?.unwrap_or(100_000);
        let launchers = match (r.list("launchers", node_number)?, &powers) {
            (Some(l), _) => l,
            (None, _) => vec![NodeId(0), NodeId(1)],
        };
        let mut join = r.raw("join").map(parse_join).transpose()?.unwrap_or(JoinModel::AllJoinCoalition { contract: 1 });
        if let JoinModel::UniformRandom { seed: s, trials: t } = &mut join {
            *s = seed;
            *t = trials;
        }
        let history = match (r.list("history", |s| s.parse::<u64>().ok())?, r.raw("history_csv")) {
            (Some(_), Some(_)) => return Err(CliError::Parse("give either history or history_csv".into())),
            (Some(h), None) => Some(HistorySource::Inline(h)),
            (None, Some(path)) => Some(HistorySource::Csv {
                path: base_dir.join(path),
                column: r.raw("history_column").map(str::to_string),
            }),
            (None, None) => None,
        };

        Ok(Scenario {
            name: r.raw("name").unwrap_or("unnamed").to_string(),
            experiment,
            powers,
            params,
            eta_given: eta.is_some(),
            launcher,
            seed,
            trials,
            format: r.parse("format")?.unwrap_or_default(),
            order,
            payoff_rule,
            reward: r.raw("reward").map(parse_reward).transpose()?.unwrap_or_default(),
            horizon: r.parse("horizon")?.unwrap_or(10_000),
            trigger: r.parse("trigger")?.unwrap_or(0),
            attack: regime,
            coalition: r.list("coalition", node_number)?,
            excluded: r.parse("excluded")?,
            launchers,
            join,
            launchers_may_join: r.flag("launchers_may_join")?,
            latency: r.parse("latency")?.unwrap_or(1),
            history,
            z: r.parse("z")?.unwrap_or(ratcensor_core::countermeasures::DEFAULT_Z),
        })
    }

    /// Reads `path` and applies `overrides`.
    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut pairs = parse_pairs(&text)?;
        apply_overrides(&mut pairs, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::from_pairs(&pairs, base)
    }

    pub fn listed_powers(&self) -> CliResult<&PowerDistribution> {
        match &self.powers {
            PowerSource::Listed(p) => Ok(p),
            PowerSource::Grid { .. } => Err(CliError::Parse(format!("{} needs powers, not grid_n", self.experiment))),
            PowerSource::None => Err(CliError::Parse(format!("{} needs powers", self.experiment))),
        }
    }

    pub fn single_launcher(&self) -> CliResult<NodeId> {
        match self.launcher {
            LauncherChoice::Node(n) => Ok(n),
            LauncherChoice::All => Err(CliError::Parse("launcher = all is only for sweeps".into())),
        }
    }

    pub fn describe_threshold(&self) -> String {
        format_rational(&self.params.threshold)
    }
}

fn epsilon_resolution(e: &Rational) -> CliResult<u64> {
    ProtocolParams::new(ratio(1, 2), 1, int(2), 1, e.clone())
        .resolution()
        .map_err(|err| CliError::Validation(err.to_string()))
}
