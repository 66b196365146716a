//! Power system data model: buses, lines, conventional and renewable units.

mod case;
mod ptdf;

pub use case::{load_case, parse_case, CaseFile, CaseLine, CaseUnit, CaseVrg, CostSpec};
pub use ptdf::{compute_shift_factors, line_flows, ShiftFactorMatrix, BALANCE_TOL};

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlClass {
    /// Corrective control unit: re-dispatches within +-delta after uncertainty realizes.
    #[serde(rename = "CCU")]
    Ccu,
    /// Non-corrective control unit: follows its base point.
    #[serde(rename = "NCCU")]
    Nccu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
    pub capacity: f64,
}

/// Convex piecewise-linear cost over `[start, breakpoints.last()]`.
///
/// `C(p) = constant + sum of marginal * (covered part of each segment)`, so the
/// constant is the cost at `start` (the unit's minimum output).
#[derive(Debug, Clone, PartialEq)]
pub struct CostCurve {
    pub start: f64,
    pub constant: f64,
    /// `(end breakpoint MW, marginal cost $/MWh)`; segment k spans
    /// `[previous breakpoint or start, breakpoint]`.
    pub segments: Vec<(f64, f64)>,
}

impl CostCurve {
    pub fn new(start: f64, constant: f64, segments: Vec<(f64, f64)>) -> Self {
        Self {
            start,
            constant,
            segments,
        }
    }

    /// Linear cost `marginal * p` over `[p_min, p_max]`.
    pub fn linear(p_min: f64, p_max: f64, marginal: f64) -> Self {
        Self::new(p_min, marginal * p_min, vec![(p_max, marginal)])
    }

    /// Segment lengths in order.
    pub fn lengths(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut prev = self.start;
        self.segments.iter().map(move |&(b, mc)| {
            let len = b - prev;
            prev = b;
            (len, mc)
        })
    }

    pub fn evaluate(&self, p: f64) -> f64 {
        let mut remaining = (p - self.start).max(0.0);
        let mut cost = self.constant;
        for (len, mc) in self.lengths() {
            let take = remaining.min(len);
            cost += take * mc;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
        cost
    }

    pub fn max_marginal(&self) -> f64 {
        self.segments.iter().map(|s| s.1).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            start: self.start,
            constant: self.constant * factor,
            segments: self
                .segments
                .iter()
                .map(|&(b, m)| (b, m * factor))
                .collect(),
        }
    }

    fn validate(&self, unit: &str, p_max: f64) -> Result<()> {
        let bad = |reason: String| Error::invariant(format!("cost curve of unit {unit}"), reason);
        if self.segments.is_empty() {
            if p_max > self.start {
                return Err(bad("no segments".into()));
            }
            return Ok(());
        }
        let mut prev_b = self.start;
        let mut prev_mc = f64::NEG_INFINITY;
        for &(b, mc) in &self.segments {
            if b <= prev_b {
                return Err(bad(format!("breakpoint {b} not above {prev_b}")));
            }
            if mc < prev_mc {
                return Err(bad(format!(
                    "marginal cost {mc} below previous {prev_mc} (non-convex)"
                )));
            }
            prev_b = b;
            prev_mc = mc;
        }
        if (prev_b - p_max).abs() > 1e-9 * (1.0 + p_max.abs()) {
            return Err(bad(format!(
                "last breakpoint {prev_b} differs from p_max {p_max}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConventionalUnit {
    pub id: String,
    pub bus: usize,
    pub class: ControlClass,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp: f64,
    /// Maximum corrective adjustment; only meaningful for CCUs.
    pub delta: f64,
    pub cost: CostCurve,
    pub p_current: f64,
}

impl ConventionalUnit {
    pub fn is_ccu(&self) -> bool {
        self.class == ControlClass::Ccu
    }

    /// Base-point bounds after intersecting the output range with the ramp window.
    pub fn base_bounds(&self, p_current: f64) -> (f64, f64) {
        (
            self.p_min.max(p_current - self.ramp),
            self.p_max.min(p_current + self.ramp),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VrgUnit {
    pub id: String,
    pub bus: usize,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystem {
    pub buses: Vec<String>,
    pub slack: usize,
    pub base_mva: f64,
    pub lines: Vec<Line>,
    pub units: Vec<ConventionalUnit>,
    pub vrgs: Vec<VrgUnit>,
    /// Real power demand per bus, MW.
    pub loads: Vec<f64>,
}

impl PowerSystem {
    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b == id)
    }

    pub fn total_load(&self) -> f64 {
        self.loads.iter().sum()
    }

    pub fn vrg_capacities(&self) -> Vec<f64> {
        self.vrgs.iter().map(|v| v.capacity).collect()
    }

    pub fn ccus(&self) -> impl Iterator<Item = (usize, &ConventionalUnit)> {
        self.units.iter().enumerate().filter(|(_, u)| u.is_ccu())
    }

    pub fn nccus(&self) -> impl Iterator<Item = (usize, &ConventionalUnit)> {
        self.units.iter().enumerate().filter(|(_, u)| !u.is_ccu())
    }

    pub fn current_outputs(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.p_current).collect()
    }

    pub fn max_marginal_cost(&self) -> f64 {
        self.units
            .iter()
            .map(|u| u.cost.max_marginal())
            .fold(0.0, f64::max)
    }

    /// Copy with `p_current` replaced; values are clamped into `[p_min, p_max]`.
    pub fn with_current_outputs(&self, outputs: &[f64]) -> Self {
        let mut next = self.clone();
        for (u, &p) in next.units.iter_mut().zip(outputs) {
            u.p_current = p.clamp(u.p_min, u.p_max);
        }
        next
    }

    /// Checks every structural invariant; called by all constructors.
    pub fn validate(&self) -> Result<()> {
        let nb = self.buses.len();
        if nb == 0 {
            return Err(Error::Schema("case declares no buses".into()));
        }
        let mut seen = BTreeMap::new();
        for (i, b) in self.buses.iter().enumerate() {
            if seen.insert(b.as_str(), i).is_some() {
                return Err(Error::invariant(format!("bus {b}"), "declared twice"));
            }
        }
        unique_ids("line", self.lines.iter().map(|l| l.id.as_str()))?;
        unique_ids("unit", self.units.iter().map(|u| u.id.as_str()))?;
        unique_ids("vrg", self.vrgs.iter().map(|v| v.id.as_str()))?;
        if self.slack >= nb {
            return Err(Error::Topology(format!(
                "slack index {} out of range",
                self.slack
            )));
        }
        if !(self.base_mva > 0.0) {
            return Err(Error::invariant("case", "base_mva must be positive"));
        }
        if self.loads.len() != nb {
            return Err(Error::Dimension {
                expected: nb,
                got: self.loads.len(),
                context: "per-bus loads".into(),
            });
        }
        for (b, &d) in self.buses.iter().zip(&self.loads) {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::invariant(
                    format!("load at bus {b}"),
                    format!("{d} MW is negative"),
                ));
            }
        }
        for l in &self.lines {
            let ent = || format!("line {}", l.id);
            if l.from >= nb || l.to >= nb {
                return Err(Error::Topology(format!(
                    "line {} references an undeclared bus",
                    l.id
                )));
            }
            if l.from == l.to {
                return Err(Error::invariant(ent(), "from and to bus coincide"));
            }
            if !(l.reactance > 0.0) {
                return Err(Error::invariant(
                    ent(),
                    format!("reactance {} must be positive", l.reactance),
                ));
            }
            if !(l.capacity > 0.0) {
                return Err(Error::invariant(
                    ent(),
                    format!("capacity {} must be positive", l.capacity),
                ));
            }
        }
        for u in &self.units {
            let ent = || format!("unit {}", u.id);
            if u.bus >= nb {
                return Err(Error::Topology(format!(
                    "unit {} references an undeclared bus",
                    u.id
                )));
            }
            if !(u.p_min <= u.p_max) {
                return Err(Error::invariant(
                    ent(),
                    format!("p_min {} > p_max {}", u.p_min, u.p_max),
                ));
            }
            if !(u.ramp >= 0.0) {
                return Err(Error::invariant(ent(), "ramp must be nonnegative"));
            }
            if !(u.delta >= 0.0) {
                return Err(Error::invariant(ent(), "delta must be nonnegative"));
            }
            if !(u.p_min <= u.p_current && u.p_current <= u.p_max) {
                return Err(Error::invariant(
                    ent(),
                    format!(
                        "p_current {} outside [{}, {}]",
                        u.p_current, u.p_min, u.p_max
                    ),
                ));
            }
            if (u.cost.start - u.p_min).abs() > 1e-12 {
                return Err(Error::invariant(ent(), "cost curve must start at p_min"));
            }
            u.cost.validate(&u.id, u.p_max)?;
        }
        for v in &self.vrgs {
            if v.bus >= nb {
                return Err(Error::Topology(format!(
                    "vrg {} references an undeclared bus",
                    v.id
                )));
            }
            if !(v.capacity > 0.0) {
                return Err(Error::invariant(
                    format!("vrg {}", v.id),
                    "capacity must be positive",
                ));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let nb = self.buses.len();
        let mut adj = vec![Vec::new(); nb];
        for l in &self.lines {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut seen = vec![false; nb];
        let mut queue = VecDeque::from([self.slack]);
        seen[self.slack] = true;
        while let Some(b) = queue.pop_front() {
            for &nbr in &adj[b] {
                if !seen[nbr] {
                    seen[nbr] = true;
                    queue.push_back(nbr);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!(
                "bus {} is not connected to the slack bus {}",
                self.buses[i], self.buses[self.slack]
            )));
        }
        Ok(())
    }
}

fn unique_ids<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::invariant(
                format!("{kind} {id}"),
                "id declared twice",
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_cost_evaluation() {
        let c = CostCurve::new(10.0, 100.0, vec![(20.0, 5.0), (40.0, 8.0)]);
        assert_eq!(c.evaluate(10.0), 100.0);
        assert_eq!(c.evaluate(15.0), 125.0);
        assert_eq!(c.evaluate(20.0), 150.0);
        assert_eq!(c.evaluate(30.0), 230.0);
        assert_eq!(c.evaluate(40.0), 310.0);
        assert_eq!(c.max_marginal(), 8.0);
    }

    #[test]
    fn linear_cost_helper() {
        let c = CostCurve::linear(0.0, 100.0, 10.0);
        assert_eq!(c.evaluate(30.0), 300.0);
    }

    #[test]
    fn non_convex_curve_rejected() {
        let c = CostCurve::new(0.0, 0.0, vec![(10.0, 5.0), (20.0, 4.0)]);
        assert!(c.validate("g", 20.0).is_err());
        let c = CostCurve::new(0.0, 0.0, vec![(10.0, 5.0), (10.0, 6.0)]);
        assert!(c.validate("g", 10.0).is_err());
        let c = CostCurve::new(0.0, 0.0, vec![(10.0, 5.0)]);
        assert!(c.validate("g", 20.0).is_err());
    }
}
