//! Defences against the attack: participation-dependent rewards, competing
//! contracts, and choosing the detectability threshold.

mod eta;
mod multi;
mod reward;

pub use eta::{estimate_eta, read_history_csv, EtaEstimate, DEFAULT_Z};
pub use multi::{
    multi_utilities, resolve_assignment, resolve_multi_contract, verify_multi_contract_ne, win_probability,
    Assignment, JoinModel, MultiAction, MultiContractSpec, MultiNeReport, MultiWitness, WinProbabilities,
    WinnerReport, EXACT_ASSIGNMENT_CAP,
};
pub use reward::{
    attack_profitability_under_reward, check_unprofitability_condition, ProfitabilityReport, ProfitabilityRow,
    RewardFunction, UnprofitabilityReport,
};
