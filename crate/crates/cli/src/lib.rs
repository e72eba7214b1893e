//! Scenario-file runner for the `ratcensor` binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 parse error, 3 scenario not
//! runnable, 4 a verifier found a profitable deviation.

pub mod error;
pub mod run;
pub mod scenario;
pub mod schema;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub use error::{CliError, CliResult};
pub use run::{run_scenario, sweep, RunReport, VERSION};
pub use scenario::{Experiment, OutputFormat, Scenario};

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct GlobalOptions {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
}

#[derive(Clone, Debug)]
pub enum Command {
    /// Run whatever the scenario's `experiment` key says.
    Run(PathBuf),
    /// Run the scenario as this experiment regardless of its key.
    As(Experiment, PathBuf),
    Sweep(PathBuf),
    Tree(PathBuf),
    Schema,
}

fn load(path: &Path, forced: Option<Experiment>, opts: &GlobalOptions) -> CliResult<Scenario> {
    let mut overrides = opts.overrides.clone();
    if let Some(e) = forced {
        overrides.push(format!("experiment={e}"));
    }
    if let Some(s) = opts.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(t) = opts.trials {
        overrides.push(format!("trials={t}"));
    }
    let mut scenario = Scenario::load(path, &overrides)?;
    if let Some(f) = opts.format {
        scenario.format = f;
    }
    Ok(scenario)
}

fn open_out(opts: &GlobalOptions) -> CliResult<Box<dyn Write>> {
    Ok(match &opts.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Runs one command, writing its output. A failed verification still writes
/// the report before returning the error.
pub fn execute(command: &Command, opts: &GlobalOptions) -> CliResult<()> {
    let (scenario, result) = match command {
        Command::Schema => {
            let mut out = open_out(opts)?;
            serde_json::to_writer_pretty(&mut out, &schema::report_schema()).map_err(|e| CliError::Runtime(e.into()))?;
            writeln!(out)?;
            out.flush()?;
            return Ok(());
        }
        Command::Tree(path) => {
            let scenario = load(path, None, opts)?;
            let powers = scenario.listed_powers()?;
            let spec = ratcensor_core::GameSpec::new(
                powers.clone(),
                scenario.params.clone(),
                scenario.single_launcher()?,
                ratcensor_core::OrderDistribution::UniformExact,
            )
            .with_payoff_rule(scenario.payoff_rule)
            .with_reward(scenario.reward.clone());
            let dot = ratcensor_core::game::render_game_tree(&spec)?;
            let mut out = open_out(opts)?;
            out.write_all(dot.as_bytes())?;
            out.flush()?;
            return Ok(());
        }
        Command::Run(path) => {
            let s = load(path, None, opts)?;
            let r = run_scenario(&s)?;
            (s, r)
        }
        Command::As(kind, path) => {
            let s = load(path, Some(*kind), opts)?;
            let r = run_scenario(&s)?;
            (s, r)
        }
        Command::Sweep(path) => {
            let s = load(path, None, opts)?;
            let r = sweep(&s)?;
            (s, r)
        }
    };
    let (report, outcome) = result;
    let mut out = open_out(opts)?;
    run::write_output(&mut out, scenario.format, &report, &outcome)?;
    out.flush()?;
    match outcome.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}
