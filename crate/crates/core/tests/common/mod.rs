//! Small hand-built systems shared by the integration tests.
#![allow(dead_code)]

pub mod random;

use dispatch_core::model::{parse_case, PowerSystem};
use serde_json::json;

pub fn system(value: serde_json::Value) -> PowerSystem {
    parse_case(&value.to_string()).unwrap()
}

/// One bus, one CCU (0..100 MW, linear cost 10) and one 10 MW VRG, load 50.
pub fn single_bus(delta: f64) -> PowerSystem {
    system(json!({
        "buses": ["1"],
        "slack_bus": "1",
        "lines": [],
        "units": [{"id": "G", "bus": "1", "class": "CCU", "p_min": 0, "p_max": 100,
                   "ramp": 100, "delta": delta, "p_current": 45,
                   "cost": {"constant": 0, "segments": [[100, 10]]}}],
        "vrg": [{"id": "W", "bus": "1", "capacity": 10}],
        "loads": {"1": 50}
    }))
}

/// Three-bus triangle with two VRGs and a tight line into the load bus.
pub fn triangle(cap: f64, delta: f64) -> PowerSystem {
    system(json!({
        "buses": ["1", "2", "3"],
        "slack_bus": "1",
        "lines": [
            {"id": "L12", "from": "1", "to": "2", "reactance": 0.1, "capacity": 200},
            {"id": "L23", "from": "2", "to": "3", "reactance": 0.1, "capacity": cap},
            {"id": "L13", "from": "1", "to": "3", "reactance": 0.1, "capacity": 200}
        ],
        "units": [
            {"id": "G1", "bus": "1", "class": "CCU", "p_min": 0, "p_max": 150,
             "ramp": 150, "delta": delta, "p_current": 60,
             "cost": {"constant": 0, "segments": [[80, 10], [150, 14]]}},
            {"id": "G2", "bus": "2", "class": "NCCU", "p_min": 10, "p_max": 60,
             "ramp": 50, "delta": 0, "p_current": 30,
             "cost": {"constant": 50, "segments": [[60, 20]]}}
        ],
        "vrg": [
            {"id": "W1", "bus": "2", "capacity": 40},
            {"id": "W2", "bus": "3", "capacity": 40}
        ],
        "loads": {"3": 90, "2": 20}
    }))
}
