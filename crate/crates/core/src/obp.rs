//! Operating base points with fixed DNE limits, and the corrective-dispatch
//! cost evaluator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PowerSystem, ShiftFactorMatrix};
use crate::network::{add_base_case, add_cost, corrective_recourse, scenario_of, BaseCase, Term};
use crate::robust::{run_ccg, CcgOptions, CcgTrace, TwoStageProblem};
use crate::sampling::SampleSet;
use crate::solver::{solve_lp, LinearProgram, MixedIntegerProgram, ObjectiveSense, Status, VarId};

/// How the corrective stage handles a realization it cannot accommodate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PenaltyMode {
    /// Report infeasibility.
    Strict,
    /// Balance and line rows get slack priced at this many $/MWh.
    Penalty(f64),
}

impl PenaltyMode {
    /// Ten times the largest marginal cost in the system.
    pub fn default_for(system: &PowerSystem) -> Self {
        PenaltyMode::Penalty(10.0 * system.max_marginal_cost().max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectiveDispatch {
    /// Output of each CCU, in unit order.
    pub outputs: Vec<f64>,
    /// Production cost in $/h (slack penalties excluded).
    pub cost: f64,
    pub slack_used: f64,
}

/// Least-cost CCU re-dispatch at realized VRG output with base points fixed.
/// Returns `Error::Infeasible` in strict mode when no re-dispatch exists.
pub fn corrective_cost(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    base_obp: &[f64],
    realized_vrg: &[f64],
    mode: PenaltyMode,
) -> Result<CorrectiveDispatch> {
    if base_obp.len() != system.units.len() || realized_vrg.len() != system.vrgs.len() {
        return Err(Error::Dimension {
            expected: system.units.len() + system.vrgs.len(),
            got: base_obp.len() + realized_vrg.len(),
            context: "base points and realized VRG output".into(),
        });
    }
    let pb: Vec<Term> = base_obp.iter().map(|&p| Term::Fixed(p)).collect();
    let w: Vec<Term> = realized_vrg.iter().map(|&p| Term::Fixed(p)).collect();
    let rec = corrective_recourse(system, sf, &pb, &w, &w);
    let ccus: Vec<usize> = system.ccus().map(|(i, _)| i).collect();
    let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
    let ys: Vec<VarId> = rec
        .vars
        .iter()
        .map(|y| lp.add_var(y.name.clone(), y.lower, y.upper))
        .collect();
    for (k, &i) in ccus.iter().enumerate() {
        add_cost(&mut lp, &system.units[i], ys[k], 1.0, "c");
    }
    let production = lp.num_vars();
    let mut slacks = Vec::new();
    // lower == upper, so no row depends on the scenario
    for row in &rec.rows {
        let rhs = row.rhs.eval(&[]);
        let mut coeffs: Vec<(VarId, f64)> = row.y.iter().map(|&(k, a)| (ys[k], a)).collect();
        if let PenaltyMode::Penalty(price) = mode {
            if !row.name.starts_with("adj") {
                let up = lp.add_var(format!("su_{}", row.name), 0.0, f64::INFINITY);
                let dn = lp.add_var(format!("sd_{}", row.name), 0.0, f64::INFINITY);
                lp.set_objective(up, price);
                lp.set_objective(dn, price);
                coeffs.push((up, 1.0));
                coeffs.push((dn, -1.0));
                slacks.push(up);
                slacks.push(dn);
            }
        }
        lp.add_constraint(row.name.clone(), coeffs, row.sense, rhs);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(Error::Infeasible(
                "realized VRG output cannot be accommodated by corrective dispatch".into(),
            ))
        }
        status => {
            return Err(Error::Solver {
                status,
                context: "corrective dispatch".into(),
            })
        }
    }
    let slack_used: f64 = slacks.iter().map(|s| sol.values[s.0]).sum();
    // production cost: CCU curves plus the fixed NCCU term
    let mut cost = lp.objective_constant
        + (0..production)
            .map(|j| lp.objective[j] * sol.values[j])
            .sum::<f64>();
    for (i, u) in system.nccus() {
        cost += u.cost.evaluate(base_obp[i]);
    }
    Ok(CorrectiveDispatch {
        outputs: ys.iter().map(|y| sol.values[y.0]).collect(),
        cost,
        slack_used,
    })
}

#[derive(Debug, Clone)]
pub struct ObpLayout {
    pub base: BaseCase,
    /// Per sample, CCU corrective variables.
    pub corrective: Vec<Vec<VarId>>,
    /// Per sample, realized VRG output clamped into the limits.
    pub realized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ObpProblem {
    pub problem: TwoStageProblem,
    pub layout: ObpLayout,
}

fn check_limits(system: &PowerSystem, lower: &[f64], upper: &[f64]) -> Result<()> {
    let n = system.vrgs.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: lower.len().min(upper.len()),
            context: "DNE limits".into(),
        });
    }
    for (j, v) in system.vrgs.iter().enumerate() {
        let (l, u) = (lower[j], upper[j]);
        if !(l >= -1e-9 && l <= u + 1e-9 && u <= v.capacity + 1e-9) {
            return Err(Error::invariant(
                format!("DNE limits of {}", v.id),
                format!("need 0 <= l <= u <= {}, got [{l}, {u}]", v.capacity),
            ));
        }
    }
    Ok(())
}

/// Sample-average cost model. Each sample's realization is clamped into
/// `[lower, upper]` so its corrective block is a point of the robust box.
pub fn build_obp2(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    samples: &SampleSet,
    forecast: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<ObpProblem> {
    check_limits(system, lower, upper)?;
    if samples.is_empty() {
        return Err(Error::invariant("OBP sample set", "no samples"));
    }
    let lower: Vec<f64> = lower.iter().map(|&l| l.max(0.0)).collect();
    let upper: Vec<f64> = upper.iter().zip(&lower).map(|(&u, &l)| u.max(l)).collect();
    let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
    let base = add_base_case(&mut lp, system, sf, forecast)?;
    for (i, u) in system.nccus() {
        add_cost(&mut lp, u, base.pb[i], 1.0, "B");
    }
    let pb: Vec<Term> = base.pb.iter().map(|&v| Term::Var(v)).collect();
    let lt: Vec<Term> = lower.iter().map(|&x| Term::Fixed(x)).collect();
    let ut: Vec<Term> = upper.iter().map(|&x| Term::Fixed(x)).collect();
    let recourse = corrective_recourse(system, sf, &pb, &lt, &ut);
    let weight = 1.0 / samples.len() as f64;
    let ccus: Vec<usize> = system.ccus().map(|(i, _)| i).collect();
    let mut corrective = Vec::new();
    let mut realized = Vec::new();
    for k in 0..samples.len() {
        let r: Vec<f64> = samples
            .realized(k)
            .iter()
            .zip(lower.iter().zip(&upper))
            .map(|(&x, (&l, &u))| x.clamp(l, u))
            .collect();
        let v = scenario_of(&r, &lower, &upper);
        let ys = recourse.instantiate(&mut lp, &v, &format!("k{k}"));
        for (q, &i) in ccus.iter().enumerate() {
            add_cost(&mut lp, &system.units[i], ys[q], weight, &format!("k{k}"));
        }
        corrective.push(ys);
        realized.push(r);
    }
    Ok(ObpProblem {
        problem: TwoStageProblem {
            first_stage: MixedIntegerProgram::new(lp),
            recourse,
        },
        layout: ObpLayout {
            base,
            corrective,
            realized,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObpDecision {
    pub base_obp: Vec<f64>,
    pub base_vrg: Vec<f64>,
    /// Per sample, CCU outputs in unit order of the CCUs.
    pub corrective: Vec<Vec<f64>>,
    pub expected_cost: f64,
    pub per_sample_costs: Vec<f64>,
    pub ccg_iterations: usize,
    #[serde(skip)]
    pub trace: CcgTrace,
}

impl ObpDecision {
    /// JSON record `{base_obp, base_vrg, expected_cost, per_sample_costs, ccg_iterations}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "base_obp": self.base_obp,
            "base_vrg": self.base_vrg,
            "expected_cost": self.expected_cost,
            "per_sample_costs": self.per_sample_costs,
            "ccg_iterations": self.ccg_iterations,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ObpConfig {
    pub epsilon: f64,
    pub max_ccg_iter: usize,
    pub enumerate_subproblem: bool,
}

impl Default for ObpConfig {
    fn default() -> Self {
        Self {
            epsilon: crate::robust::DEFAULT_EPSILON,
            max_ccg_iter: 64,
            enumerate_subproblem: false,
        }
    }
}

/// Relative agreement required between the optimizer's objective and the
/// per-sample re-evaluation.
pub const COST_CONSISTENCY_TOL: f64 = 1e-6;

pub fn solve_obp(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    samples: &SampleSet,
    forecast: &[f64],
    lower: &[f64],
    upper: &[f64],
    config: &ObpConfig,
) -> Result<ObpDecision> {
    let op = build_obp2(system, sf, samples, forecast, lower, upper)?;
    let opts = CcgOptions {
        epsilon: config.epsilon,
        max_iter: config.max_ccg_iter,
        enumerate: config.enumerate_subproblem,
        ..CcgOptions::default()
    };
    let res = match run_ccg(&op.problem, &opts) {
        Err(Error::Solver {
            status: Status::Infeasible,
            ..
        }) => {
            return Err(Error::Infeasible(
                "no base point is robust within the given DNE limits".into(),
            ))
        }
        other => other?,
    };
    let x = &res.solution.values;
    let base_obp: Vec<f64> = op.layout.base.pb.iter().map(|v| x[v.0]).collect();
    let mut per_sample_costs = Vec::new();
    let mut corrective = Vec::new();
    for r in &op.layout.realized {
        let c = corrective_cost(system, sf, &base_obp, r, PenaltyMode::Strict)?;
        per_sample_costs.push(c.cost);
        corrective.push(c.outputs);
    }
    let expected_cost = per_sample_costs.iter().sum::<f64>() / per_sample_costs.len() as f64;
    let objective = res.solution.objective;
    if (expected_cost - objective).abs() > COST_CONSISTENCY_TOL * (1.0 + objective.abs()) {
        return Err(Error::Problem(format!(
            "expected cost {expected_cost} disagrees with the optimizer objective {objective}"
        )));
    }
    Ok(ObpDecision {
        base_obp,
        base_vrg: op.layout.base.w.iter().map(|v| x[v.0]).collect(),
        corrective,
        expected_cost,
        per_sample_costs,
        ccg_iterations: res.trace.iterations.len(),
        trace: res.trace,
    })
}
