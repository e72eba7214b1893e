use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn ratcensor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratcensor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    scenarios().join(name).to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_scenario(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn verify_ne_holds_on_three_nodes() {
    let out = ratcensor(&["run", &scenario("ne_n3.scenario")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["payload"]["report"]["holds"], true);
    assert_eq!(report["payload"]["utilities"][0], "112/195");
    assert!(report["version"].as_str().unwrap().starts_with("ratcensor "));
}

#[test]
fn low_threshold_is_a_validation_error() {
    let out = ratcensor(&["run", &scenario("bad_threshold.scenario")]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "validation");
    assert!(err["message"].as_str().unwrap().contains("t below 1/2"));
}

#[test]
fn doctored_payoffs_fail_verification_with_witnesses() {
    let out = ratcensor(&["run", &scenario("negative_control.scenario")]);
    assert_eq!(out.status.code(), Some(4));
    let report = json(&out);
    let witnesses = report["payload"]["report"]["witnesses"].as_array().unwrap();
    assert!(!witnesses.is_empty());
    assert!(witnesses.iter().any(|w| w["class"] == "over_declare"));
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_scenario(&dir, "u.scenario", "experiment = verify-ne\npowers = 0.5, 0.5\nt = 0.5\ncolour = red\n");
    assert_eq!(ratcensor(&["run", &unknown]).status.code(), Some(2));
    let garbled = write_scenario(&dir, "g.scenario", "experiment verify-ne\n");
    assert_eq!(ratcensor(&["run", &garbled]).status.code(), Some(2));
    let ok = scenario("ne_n3.scenario");
    assert_eq!(ratcensor(&["run", &ok, "--override", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(ratcensor(&["run", &ok, "--format", "xml"]).status.code(), Some(2));
    assert_eq!(ratcensor(&["run", "/no/such/file.scenario"]).status.code(), Some(2));
}

#[test]
fn override_can_break_a_scenario() {
    let out = ratcensor(&["run", &scenario("ne_n3.scenario"), "--override", "t=0.4"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn same_seed_same_payload() {
    let path = scenario("simulate_n5.scenario");
    let a = json(&ratcensor(&["run", &path]));
    let b = json(&ratcensor(&["run", &path]));
    assert_eq!(
        serde_json::to_string(&a["payload"]).unwrap(),
        serde_json::to_string(&b["payload"]).unwrap()
    );
    let c = json(&ratcensor(&["run", &path, "--seed", "8"]));
    assert_ne!(a["payload"]["ledger"], c["payload"]["ledger"]);
    assert_eq!(c["seed"], 8);

    let csv_a = ratcensor(&["run", &path, "--format", "csv"]).stdout;
    let csv_b = ratcensor(&["run", &path, "--format", "csv"]).stdout;
    assert_eq!(csv_a, csv_b);
    let header = String::from_utf8(csv_a).unwrap();
    assert!(header.starts_with("node_id,true_power,total_reward,total_cost,avg_utility"));
}

#[test]
fn every_example_is_deterministic() {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("scenario") {
            continue;
        }
        let p = path.to_string_lossy();
        let cmd = if p.contains("sweep") { "sweep" } else { "run" };
        let a = ratcensor(&[cmd, &p]);
        let b = ratcensor(&[cmd, &p]);
        assert_eq!(a.status.code(), b.status.code(), "{p}");
        if a.stdout.is_empty() {
            continue;
        }
        assert_eq!(json(&a)["payload"], json(&b)["payload"], "{p}");
    }
}

#[test]
fn reports_validate_against_schema() {
    let schema_out = ratcensor(&["schema"]);
    assert_eq!(schema_out.status.code(), Some(0));
    let schema = json(&schema_out);
    for def in ["OutcomeRecord", "RewardLedger", "WinnerReport"] {
        assert!(schema["$defs"].get(def).is_some(), "{def}");
    }
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");

    let mut checked = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("scenario") {
            continue;
        }
        let p = path.to_string_lossy();
        let cmd = if p.contains("sweep") { "sweep" } else { "run" };
        let out = ratcensor(&[cmd, &p]);
        if out.stdout.is_empty() {
            continue;
        }
        let report = json(&out);
        let errors: Vec<String> = validator.iter_errors(&report).map(|e| format!("{e} at {}", e.instance_path)).collect();
        assert!(errors.is_empty(), "{p}: {errors:?}");
        assert!(report["version"].is_string(), "{p}");
        checked += 1;
    }
    // the sweep payload has its own shape; also check the spe-sweep variant
    let dir = tempfile::tempdir().unwrap();
    let spe = write_scenario(
        &dir,
        "s.scenario",
        "experiment = verify-spe\ngrid_n = 3\nepsilon = 0.25\nt = 0.5\n",
    );
    assert!(validator.is_valid(&json(&ratcensor(&["sweep", &spe]))));
    assert!(checked >= 9);

    let mut bogus = json(&ratcensor(&["run", &scenario("eta.scenario")]));
    bogus["payload"]["eta"] = Value::from(0);
    assert!(!validator.is_valid(&bogus));
}

#[test]
fn sweep_three_nodes_all_hold() {
    let out = ratcensor(&["sweep", &scenario("sweep_n3.scenario"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[3] == "true"));
    // deterministic row order
    let indices: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(indices, (0..rows.len()).collect::<Vec<_>>());
}

#[test]
fn sweep_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let single = write_scenario(&dir, "one.scenario", "experiment = verify-ne\ngrid_n = 2\nepsilon = 0.5\nt = 0.5\n");
    let out = ratcensor(&["sweep", &single]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["payload"]["rows"].as_array().unwrap().len(), 1);

    let empty = write_scenario(&dir, "empty.scenario", "experiment = verify-ne\ngrid_n = 2\nepsilon = 1\nt = 0.5\n");
    let out = ratcensor(&["sweep", &empty]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());

    let huge = write_scenario(&dir, "huge.scenario", "experiment = verify-ne\ngrid_n = 10\nepsilon = 0.1\nt = 0.5\n");
    assert_eq!(ratcensor(&["sweep", &huge]).status.code(), Some(3));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = ratcensor(&["run", &scenario("spe_n4.scenario"), "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(report["payload"]["holds"], true);
}

#[test]
fn subcommand_forces_experiment() {
    let out = ratcensor(&["verify-spe", &scenario("ne_n3.scenario")]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["experiment"], "verify-spe");
    assert_eq!(report["payload"]["launcher_honest_utility"], "2/5");
}

#[test]
fn multi_contract_examples() {
    let report = json(&ratcensor(&["run", &scenario("uniform_n4.scenario")]));
    let p = &report["payload"]["win_probability"];
    assert_eq!(p["per_contract"], serde_json::json!(["1/4", "1/4"]));
    assert_eq!(p["no_winner"], "1/2");
    let report = json(&ratcensor(&["run", &scenario("multi_n5.scenario")]));
    assert_eq!(report["payload"]["equilibrium"]["holds"], true);
    assert_eq!(report["payload"]["resolution"]["winner"], 1);
}

#[test]
fn reward_countermeasure_examples() {
    let q = json(&ratcensor(&["run", &scenario("reward_quadratic.scenario")]));
    let rows = q["payload"]["profitability"]["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["attack_profitable"] == false));
    assert!(rows.iter().all(|r| r["attack_utility"] == "3/50"));
    let l = json(&ratcensor(&["run", &scenario("reward_linear.scenario")]));
    let rows = l["payload"]["profitability"]["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["attack_utility"] == r["honest_utility"]));
}

#[test]
fn eta_from_csv_and_inline() {
    let report = json(&ratcensor(&["run", &scenario("eta.scenario")]));
    assert_eq!(report["payload"]["eta"], 5);
    let out = ratcensor(&[
        "estimate-eta",
        &scenario("eta.scenario"),
        "--override",
        "z=0",
        "--format",
        "csv",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "eta_latency,eta_variance,eta\n2,0,2\n");

    let dir = tempfile::tempdir().unwrap();
    let short = write_scenario(&dir, "short.scenario", "experiment = estimate-eta\nhistory = 4\n");
    assert_eq!(ratcensor(&["run", &short]).status.code(), Some(3));
}

#[test]
fn tree_renders_small_games() {
    let out = ratcensor(&["tree", &scenario("ne_n3.scenario"), "--override", "epsilon=0.25", "--override", "powers=0.5,0.25,0.25"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph game {"));
    assert_eq!(dot.matches("shape=box").count(), 62);
    let big = ratcensor(&["tree", &scenario("multi_n5.scenario")]);
    assert_eq!(big.status.code(), Some(3));
}
