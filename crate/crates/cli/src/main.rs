use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ratcensor_cli::{execute, Command, Experiment, GlobalOptions, OutputFormat};

#[derive(Parser, Debug)]
#[command(name = "ratcensor", version, about = "Rational censorship attack simulator and equilibrium verifier")]
struct Cli {
    /// Overrides the scenario's seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the scenario's Monte Carlo trial count
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// json (default) or csv
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value, applied after the scenario file (repeatable)
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Run the experiment named in the scenario file
    Run { scenario: PathBuf },
    /// Simulate the chain under the contract's coalition
    Simulate { scenario: PathBuf },
    /// Check truthful joining is an equilibrium after launch
    VerifyNe { scenario: PathBuf },
    /// Also check the launcher's decision to attack
    VerifySpe { scenario: PathBuf },
    /// Resolve competing contracts
    MultiContract { scenario: PathBuf },
    /// Evaluate a participation-dependent reward function
    RewardCm { scenario: PathBuf },
    /// Estimate the detectability threshold from activity history
    EstimateEta { scenario: PathBuf },
    /// Verify every scenario of a power grid; one row per grid point
    Sweep { scenario: PathBuf },
    /// Print the game tree as Graphviz DOT (at most 4 nodes)
    Tree { scenario: PathBuf },
    /// Print the JSON Schema of all reports
    Schema,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let opts = GlobalOptions {
        seed: cli.seed,
        trials: cli.trials,
        format: cli.format,
        out: cli.out,
        overrides: cli.overrides,
    };
    let command = match cli.command {
        Sub::Run { scenario } => Command::Run(scenario),
        Sub::Simulate { scenario } => Command::As(Experiment::Simulate, scenario),
        Sub::VerifyNe { scenario } => Command::As(Experiment::VerifyNe, scenario),
        Sub::VerifySpe { scenario } => Command::As(Experiment::VerifySpe, scenario),
        Sub::MultiContract { scenario } => Command::As(Experiment::MultiContract, scenario),
        Sub::RewardCm { scenario } => Command::As(Experiment::RewardCm, scenario),
        Sub::EstimateEta { scenario } => Command::As(Experiment::EstimateEta, scenario),
        Sub::Sweep { scenario } => Command::Sweep(scenario),
        Sub::Tree { scenario } => Command::Tree(scenario),
        Sub::Schema => Command::Schema,
    };
    match execute(&command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
