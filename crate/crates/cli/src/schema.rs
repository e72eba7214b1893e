//! JSON Schema for every report the runner emits.
//!
//! Node ids in reports are 0-based integers; exact numbers are strings such
//! as `"7/20"`.

use serde_json::{json, Value};

fn obj(props: Value, required: &[&str]) -> Value {
    json!({
        "type": "object",
        "properties": props,
        "required": required,
        "additionalProperties": false
    })
}

fn r(name: &str) -> Value {
    json!({ "$ref": format!("#/$defs/{name}") })
}

fn array(items: Value) -> Value {
    json!({ "type": "array", "items": items })
}

fn nullable(inner: Value) -> Value {
    json!({ "anyOf": [inner, { "type": "null" }] })
}

pub fn report_schema() -> Value {
    let count = json!({ "type": "integer", "minimum": 0 });
    let exact = json!({ "type": "string", "pattern": "^-?[0-9]+(/[0-9]+)?$" });
    let number = json!({ "type": "number" });
    let boolean = json!({ "type": "boolean" });
    let string = json!({ "type": "string" });

    let defs = json!({
        "Exact": exact,
        "NodeId": count,
        "Action": {
            "oneOf": [
                { "const": "abstain" },
                obj(json!({ "declare": count }), &["declare"])
            ]
        },
        "ContractStatus": { "enum": ["open", "succeeded", "aborted"] },
        "OutcomeRecord": obj(json!({
            "success": boolean,
            "contract_status": r("ContractStatus"),
            "coalition": array(r("NodeId")),
            "excluded": array(r("NodeId")),
            "coalition_true_power": r("Exact"),
            "order": array(r("NodeId")),
            "seed": nullable(count.clone())
        }), &["success", "contract_status", "coalition", "excluded", "coalition_true_power", "order", "seed"]),
        "AttackRegime": obj(json!({
            "active": boolean,
            "coalition": array(r("NodeId")),
            "trigger_block": count
        }), &["active", "coalition", "trigger_block"]),
        "RewardLedger": obj(json!({
            "rewards": array(number.clone()),
            "costs": array(number.clone()),
            "blocks": count
        }), &["rewards", "costs", "blocks"]),
        "RewardFunction": {
            "oneOf": [
                obj(json!({ "kind": { "const": "constant" }, "value": r("Exact") }), &["kind", "value"]),
                obj(json!({ "kind": { "const": "linear" }, "slope": r("Exact") }), &["kind", "slope"]),
                obj(json!({ "kind": { "const": "custom" }, "table": array(r("Exact")) }), &["kind", "table"])
            ]
        },
        "PlayerMove": {
            "oneOf": [
                obj(json!({ "move": { "const": "attack" }, "declared_units": count }), &["move", "declared_units"]),
                obj(json!({ "move": { "const": "no_attack" } }), &["move"]),
                obj(json!({ "move": { "const": "respond" }, "action": r("Action") }), &["move", "action"])
            ]
        },
        "DeviationWitness": obj(json!({
            "node": r("NodeId"),
            "original": r("PlayerMove"),
            "deviation": r("PlayerMove"),
            "class": nullable(json!({ "enum": ["abstain", "under_declare", "truthful", "over_declare"] })),
            "before": r("Exact"),
            "after": r("Exact"),
            "gain": number
        }), &["node", "original", "deviation", "class", "before", "after", "gain"]),
        "VerificationReport": obj(json!({
            "scenario": string,
            "holds": boolean,
            "witnesses": array(r("DeviationWitness")),
            "enumeration_stats": obj(json!({
                "profiles_evaluated": count,
                "plays_resolved": count
            }), &["profiles_evaluated", "plays_resolved"])
        }), &["scenario", "holds", "witnesses", "enumeration_stats"]),
        "SpeReport": obj(json!({
            "subgame": r("VerificationReport"),
            "launcher_attack_utility": r("Exact"),
            "launcher_honest_utility": r("Exact"),
            "margin": r("Exact"),
            "launcher_witnesses": array(r("DeviationWitness")),
            "holds": boolean
        }), &["subgame", "launcher_attack_utility", "launcher_honest_utility", "margin", "launcher_witnesses", "holds"]),
        "WinnerReport": obj(json!({
            "winner": nullable(count.clone()),
            "coalition_powers": array(r("Exact")),
            "coalitions": array(array(r("NodeId"))),
            "no_winner": boolean,
            "at_threshold": array(count.clone())
        }), &["winner", "coalition_powers", "coalitions", "no_winner", "at_threshold"]),
        "WinProbabilities": obj(json!({
            "per_contract": array(r("Exact")),
            "no_winner": r("Exact"),
            "exact": boolean,
            "samples": count
        }), &["per_contract", "no_winner", "exact", "samples"]),
        "MultiAction": {
            "oneOf": [
                { "enum": ["abstain", "join_all"] },
                obj(json!({ "join": count }), &["join"])
            ]
        },
        "MultiNeReport": obj(json!({
            "holds": boolean,
            "assumptions_hold": boolean,
            "witnesses": array(obj(json!({
                "node": r("NodeId"),
                "deviation": r("MultiAction"),
                "before": r("Exact"),
                "after": r("Exact")
            }), &["node", "deviation", "before", "after"])),
            "max_other_contract_payoff": r("Exact"),
            "mixed_samples": count,
            "mixed_violations": count,
            "deviations_checked": count,
            "notes": array(string.clone())
        }), &["holds", "assumptions_hold", "witnesses", "max_other_contract_payoff", "mixed_samples",
              "mixed_violations", "deviations_checked", "notes"]),
        "EtaEstimate": obj(json!({
            "eta_latency": count,
            "eta_variance": count,
            "eta": { "type": "integer", "minimum": 1 }
        }), &["eta_latency", "eta_variance", "eta"]),
        "SimulatePayload": obj(json!({
            "contract": nullable(r("OutcomeRecord")),
            "regime": r("AttackRegime"),
            "excluded": count,
            "ledger": r("RewardLedger"),
            "average_utility": array(number.clone()),
            "expected_utility": array(r("Exact"))
        }), &["contract", "regime", "excluded", "ledger", "average_utility", "expected_utility"]),
        "VerifyNePayload": obj(json!({
            "report": r("VerificationReport"),
            "utilities": array(string.clone())
        }), &["report", "utilities"]),
        "MultiPayload": obj(json!({
            "resolution": r("WinnerReport"),
            "win_probability": nullable(r("WinProbabilities")),
            "equilibrium": nullable(r("MultiNeReport")),
            "no_winner_payoff": string
        }), &["resolution", "win_probability", "equilibrium", "no_winner_payoff"]),
        "RewardPayload": obj(json!({
            "condition": obj(json!({
                "satisfied_for": array(count.clone()),
                "violated_for": array(count.clone())
            }), &["satisfied_for", "violated_for"]),
            "profitability": obj(json!({
                "reward": r("RewardFunction"),
                "reachable_sizes": array(count.clone()),
                "rows": array(obj(json!({
                    "coalition": array(r("NodeId")),
                    "node": r("NodeId"),
                    "attack_utility": r("Exact"),
                    "honest_utility": r("Exact"),
                    "attack_profitable": boolean
                }), &["coalition", "node", "attack_utility", "honest_utility", "attack_profitable"]))
            }), &["reward", "reachable_sizes", "rows"]),
            "condition_covers_reachable": boolean
        }), &["condition", "profitability", "condition_covers_reachable"]),
        "SweepPayload": obj(json!({
            "experiment": { "enum": ["verify-ne", "verify-spe"] },
            "scenarios": count,
            "failures": count,
            "rows": array(obj(json!({
                "index": count,
                "powers": string,
                "launcher": { "type": "integer", "minimum": 1 },
                "holds": boolean,
                "witnesses": count,
                "launcher_margin": nullable(r("Exact")),
                "utilities": string
            }), &["index", "powers", "launcher", "holds", "witnesses", "launcher_margin", "utilities"]))
        }), &["experiment", "scenarios", "failures", "rows"])
    });

    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "RunReport",
        "type": "object",
        "properties": {
            "version": { "type": "string", "pattern": "^ratcensor " },
            "scenario": string,
            "experiment": {
                "enum": ["simulate", "verify-ne", "verify-spe", "multi-contract", "reward-cm", "estimate-eta", "sweep"]
            },
            "seed": count,
            "trials": count,
            "duration_ms": count,
            "payload": {
                "oneOf": [
                    r("SimulatePayload"),
                    r("VerifyNePayload"),
                    r("SpeReport"),
                    r("MultiPayload"),
                    r("RewardPayload"),
                    r("EtaEstimate"),
                    r("SweepPayload")
                ]
            }
        },
        "required": ["version", "scenario", "experiment", "seed", "trials", "duration_ms", "payload"],
        "additionalProperties": false,
        "$defs": defs
    })
}
