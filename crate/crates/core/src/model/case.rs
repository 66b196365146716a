//! JSON case files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ControlClass, ConventionalUnit, CostCurve, Line, PowerSystem, VrgUnit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub buses: Vec<String>,
    pub slack_bus: String,
    /// Per-unit base; optional, defaults to 100 MVA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_mva: Option<f64>,
    pub lines: Vec<CaseLine>,
    pub units: Vec<CaseUnit>,
    pub vrg: Vec<CaseVrg>,
    pub loads: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseLine {
    pub id: String,
    pub from: String,
    pub to: String,
    pub reactance: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseUnit {
    pub id: String,
    pub bus: String,
    pub class: ControlClass,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp: f64,
    pub delta: f64,
    pub p_current: f64,
    pub cost: CostSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub constant: f64,
    pub segments: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseVrg {
    pub id: String,
    pub bus: String,
    pub capacity: f64,
}

pub fn load_case(path: impl AsRef<Path>) -> Result<PowerSystem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_case(&text)
}

pub fn parse_case(text: &str) -> Result<PowerSystem> {
    let case: CaseFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    PowerSystem::from_case(&case)
}

impl PowerSystem {
    pub fn from_case(case: &CaseFile) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, b) in case.buses.iter().enumerate() {
            if index.insert(b.clone(), i).is_some() {
                return Err(Error::invariant(format!("bus {b}"), "declared twice"));
            }
        }
        let bus = |id: &str, what: &str| -> Result<usize> {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Topology(format!("{what} references undeclared bus {id}")))
        };
        let slack = bus(&case.slack_bus, "slack_bus")?;
        let lines = case
            .lines
            .iter()
            .map(|l| {
                Ok(Line {
                    id: l.id.clone(),
                    from: bus(&l.from, &format!("line {}", l.id))?,
                    to: bus(&l.to, &format!("line {}", l.id))?,
                    reactance: l.reactance,
                    capacity: l.capacity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let units = case
            .units
            .iter()
            .map(|u| {
                Ok(ConventionalUnit {
                    id: u.id.clone(),
                    bus: bus(&u.bus, &format!("unit {}", u.id))?,
                    class: u.class,
                    p_min: u.p_min,
                    p_max: u.p_max,
                    ramp: u.ramp,
                    delta: u.delta,
                    p_current: u.p_current,
                    cost: CostCurve::new(
                        u.p_min,
                        u.cost.constant,
                        u.cost.segments.iter().map(|s| (s[0], s[1])).collect(),
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let vrgs = case
            .vrg
            .iter()
            .map(|v| {
                Ok(VrgUnit {
                    id: v.id.clone(),
                    bus: bus(&v.bus, &format!("vrg {}", v.id))?,
                    capacity: v.capacity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut loads = vec![0.0; case.buses.len()];
        for (b, &d) in &case.loads {
            loads[bus(b, "load")?] += d;
        }
        let system = PowerSystem {
            buses: case.buses.clone(),
            slack,
            base_mva: case.base_mva.unwrap_or(100.0),
            lines,
            units,
            vrgs,
            loads,
        };
        system.validate()?;
        Ok(system)
    }

    pub fn to_case(&self) -> CaseFile {
        let name = |i: usize| self.buses[i].clone();
        CaseFile {
            buses: self.buses.clone(),
            slack_bus: name(self.slack),
            base_mva: Some(self.base_mva),
            lines: self
                .lines
                .iter()
                .map(|l| CaseLine {
                    id: l.id.clone(),
                    from: name(l.from),
                    to: name(l.to),
                    reactance: l.reactance,
                    capacity: l.capacity,
                })
                .collect(),
            units: self
                .units
                .iter()
                .map(|u| CaseUnit {
                    id: u.id.clone(),
                    bus: name(u.bus),
                    class: u.class,
                    p_min: u.p_min,
                    p_max: u.p_max,
                    ramp: u.ramp,
                    delta: u.delta,
                    p_current: u.p_current,
                    cost: CostSpec {
                        constant: u.cost.constant,
                        segments: u.cost.segments.iter().map(|&(b, m)| [b, m]).collect(),
                    },
                })
                .collect(),
            vrg: self
                .vrgs
                .iter()
                .map(|v| CaseVrg {
                    id: v.id.clone(),
                    bus: name(v.bus),
                    capacity: v.capacity,
                })
                .collect(),
            loads: self
                .loads
                .iter()
                .enumerate()
                .filter(|(_, d)| **d != 0.0)
                .map(|(i, &d)| (name(i), d))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "buses": ["1", "2"],
        "slack_bus": "1",
        "lines": [{"id": "L1", "from": "1", "to": "2", "reactance": 0.1, "capacity": 100}],
        "units": [{"id": "G1", "bus": "1", "class": "CCU", "p_min": 0, "p_max": 100,
                   "ramp": 50, "delta": 20, "p_current": 40,
                   "cost": {"constant": 0, "segments": [[100, 10]]}}],
        "vrg": [{"id": "W1", "bus": "2", "capacity": 30}],
        "loads": {"2": 50}
    }"#;

    #[test]
    fn parses_minimal_case() {
        let s = parse_case(TWO_BUS).unwrap();
        assert_eq!(s.num_buses(), 2);
        assert_eq!(s.lines.len(), 1);
        assert_eq!(s.loads, vec![0.0, 50.0]);
        assert_eq!(s.units[0].cost.evaluate(30.0), 300.0);
        let back = PowerSystem::from_case(&s.to_case()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_key_is_schema_error() {
        let text = TWO_BUS.replacen("\"slack_bus\"", "\"colour\": 1, \"slack_bus\"", 1);
        assert!(matches!(parse_case(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_field_is_schema_error() {
        let text = TWO_BUS.replace("\"reactance\": 0.1, ", "");
        assert!(matches!(parse_case(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn dangling_bus_names_the_bus() {
        let text = TWO_BUS.replace("\"to\": \"2\"", "\"to\": \"99\"");
        match parse_case(&text) {
            Err(Error::Topology(msg)) => assert!(msg.contains("99"), "{msg}"),
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn disconnected_graph_rejected() {
        let text = TWO_BUS.replace("[\"1\", \"2\"]", "[\"1\", \"2\", \"3\"]");
        match parse_case(&text) {
            Err(Error::Topology(msg)) => assert!(msg.contains("bus 3"), "{msg}"),
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_name_entity() {
        let text = TWO_BUS.replace("\"p_current\": 40", "\"p_current\": 140");
        match parse_case(&text) {
            Err(Error::Invariant { entity, .. }) => assert_eq!(entity, "unit G1"),
            other => panic!("expected invariant error, got {other:?}"),
        }
        let text = TWO_BUS.replace("\"reactance\": 0.1", "\"reactance\": -0.1");
        match parse_case(&text) {
            Err(Error::Invariant { entity, .. }) => assert_eq!(entity, "line L1"),
            other => panic!("expected invariant error, got {other:?}"),
        }
        let text = TWO_BUS.replace("{\"2\": 50}", "{\"2\": -5}");
        assert!(matches!(parse_case(&text), Err(Error::Invariant { .. })));
        let text = TWO_BUS.replace("\"to\": \"2\"", "\"to\": \"1\"");
        assert!(parse_case(&text).is_err());
    }
}
