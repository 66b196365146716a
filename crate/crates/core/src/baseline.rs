//! Comparison method: economic dispatch on the forecast, then DNE limits that
//! maximize the LMP-weighted range with the dispatch held fixed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PowerSystem, ShiftFactorMatrix};
use crate::network::{add_base_case, add_cost, corrective_recourse, Term};
use crate::robust::{run_ccg, CcgOptions, CcgTrace, TwoStageProblem};
use crate::solver::{solve_lp, LinearProgram, MixedIntegerProgram, ObjectiveSense, Sense, Status};

/// Smallest LMP weight used in the range objective, $/MWh.
pub const LMP_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdDecision {
    pub obp: Vec<f64>,
    pub vrg_dispatch: Vec<f64>,
    pub total_cost: f64,
    /// Per bus, $/MWh.
    pub lmp: Vec<f64>,
}

/// Least-cost dispatch at the forecast, with VRG output curtailable at zero cost.
pub fn solve_ed(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    forecast: &[f64],
) -> Result<EdDecision> {
    let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
    let base = add_base_case(&mut lp, system, sf, forecast)?;
    for (i, u) in system.units.iter().enumerate() {
        add_cost(&mut lp, u, base.pb[i], 1.0, "ed");
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(Error::Infeasible(
                "economic dispatch: load cannot be served within unit and line limits".into(),
            ))
        }
        status => {
            return Err(Error::Solver {
                status,
                context: "economic dispatch".into(),
            })
        }
    }
    // rows in build order: balance, then (up, down) per line
    let lambda = sol.duals[0];
    let mu: Vec<f64> = (0..system.lines.len())
        .map(|l| sol.duals[1 + 2 * l] + sol.duals[2 + 2 * l])
        .collect();
    let lmp = (0..system.num_buses())
        .map(|n| {
            lambda
                + mu.iter()
                    .enumerate()
                    .map(|(l, m)| m * sf.get(l, n))
                    .sum::<f64>()
        })
        .collect();
    Ok(EdDecision {
        obp: base.pb.iter().map(|v| sol.values[v.0]).collect(),
        vrg_dispatch: base.w.iter().map(|v| sol.values[v.0]).collect(),
        total_cost: sol.objective,
        lmp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdneDecision {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub weighted_width: f64,
    /// Weights actually used, per VRG unit.
    pub weights: Vec<f64>,
    /// Set when no robust range exists at the fixed dispatch and the limits
    /// collapsed to the ED VRG dispatch.
    pub fallback: bool,
    pub ccg_iterations: usize,
    #[serde(skip)]
    pub trace: CcgTrace,
}

impl OdneDecision {
    /// JSON record `{obp, lmp, lower, upper, weighted_width}`.
    pub fn to_json(&self, ed: &EdDecision) -> serde_json::Value {
        serde_json::json!({
            "obp": ed.obp,
            "lmp": ed.lmp,
            "lower": self.lower,
            "upper": self.upper,
            "weighted_width": self.weighted_width,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OdneConfig {
    pub epsilon: f64,
    pub max_ccg_iter: usize,
    pub enumerate_subproblem: bool,
}

impl Default for OdneConfig {
    fn default() -> Self {
        Self {
            epsilon: crate::robust::DEFAULT_EPSILON,
            max_ccg_iter: 64,
            enumerate_subproblem: false,
        }
    }
}

/// Problem solved by [`solve_odne`]: variables `l_j, u_j` (in that order per unit).
pub fn build_odne(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    ed: &EdDecision,
) -> (TwoStageProblem, Vec<f64>) {
    let mut lp = LinearProgram::new(ObjectiveSense::Maximize);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let weights: Vec<f64> = system
        .vrgs
        .iter()
        .map(|v| ed.lmp[v.bus].max(LMP_FLOOR))
        .collect();
    for (j, v) in system.vrgs.iter().enumerate() {
        let l = lp.add_var(format!("l_{}", v.id), 0.0, v.capacity);
        let u = lp.add_var(format!("u_{}", v.id), 0.0, v.capacity);
        lp.add_constraint(
            format!("order_{}", v.id),
            vec![(l, 1.0), (u, -1.0)],
            Sense::Le,
            0.0,
        );
        lp.set_objective(l, -weights[j]);
        lp.set_objective(u, weights[j]);
        lower.push(Term::Var(l));
        upper.push(Term::Var(u));
    }
    let pb: Vec<Term> = ed.obp.iter().map(|&p| Term::Fixed(p)).collect();
    let recourse = corrective_recourse(system, sf, &pb, &lower, &upper);
    (
        TwoStageProblem {
            first_stage: MixedIntegerProgram::new(lp),
            recourse,
        },
        weights,
    )
}

pub fn solve_odne(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    ed: &EdDecision,
    config: &OdneConfig,
) -> Result<OdneDecision> {
    let (problem, weights) = build_odne(system, sf, ed);
    let opts = CcgOptions {
        epsilon: config.epsilon,
        max_iter: config.max_ccg_iter,
        enumerate: config.enumerate_subproblem,
        ..CcgOptions::default()
    };
    match run_ccg(&problem, &opts) {
        Ok(res) => {
            let x = &res.solution.values;
            let n = system.vrgs.len();
            let lower: Vec<f64> = (0..n).map(|j| x[2 * j]).collect();
            let upper: Vec<f64> = (0..n).map(|j| x[2 * j + 1]).collect();
            Ok(OdneDecision {
                weighted_width: (0..n).map(|j| weights[j] * (upper[j] - lower[j])).sum(),
                lower,
                upper,
                weights,
                fallback: false,
                ccg_iterations: res.trace.iterations.len(),
                trace: res.trace,
            })
        }
        Err(Error::Solver {
            status: Status::Infeasible,
            ..
        }) => Ok(OdneDecision {
            lower: ed.vrg_dispatch.clone(),
            upper: ed.vrg_dispatch.clone(),
            weighted_width: 0.0,
            weights,
            fallback: true,
            ccg_iterations: 0,
            trace: CcgTrace::default(),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_shift_factors, parse_case};

    #[test]
    fn single_marginal_unit_sets_price() {
        let s = parse_case(
            r#"{"buses": ["1", "2"], "slack_bus": "1",
                "lines": [{"id": "L", "from": "1", "to": "2", "reactance": 0.1, "capacity": 100}],
                "units": [{"id": "G", "bus": "1", "class": "CCU", "p_min": 0, "p_max": 100,
                           "ramp": 100, "delta": 100, "p_current": 50,
                           "cost": {"constant": 0, "segments": [[100, 10]]}}],
                "vrg": [{"id": "W", "bus": "2", "capacity": 30}],
                "loads": {"2": 50}}"#,
        )
        .unwrap();
        let sf = compute_shift_factors(&s).unwrap();
        let ed = solve_ed(&s, &sf, &[0.0]).unwrap();
        assert!((ed.obp[0] - 50.0).abs() < 1e-9);
        for p in &ed.lmp {
            assert!((p - 10.0).abs() < 1e-9);
        }
        let od = solve_odne(&s, &sf, &ed, &OdneConfig::default()).unwrap();
        assert!(!od.fallback);
        assert!(od.lower[0].abs() < 1e-9 && (od.upper[0] - 30.0).abs() < 1e-9);
    }
}
