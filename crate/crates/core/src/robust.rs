//! Two-stage robust feasibility over the unit box: recourse templates, the
//! worst-case slack subproblem and column-and-constraint generation.
//!
//! A first-stage MILP over `x` is paired with recourse rows that, for a
//! scenario `v` in `[0, 1]^n`, read
//!
//! ```text
//! G_r y  (<=, =, >=)  c_r + a_r.x + sum_j v_j (c_rj + a_rj.x)
//! ```
//!
//! with fresh recourse variables `y` in fixed bounds.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{
    solve_lp, solve_milp_with, Heuristic, LinearProgram, MilpOptions, MixedIntegerProgram,
    ObjectiveSense, Sense, Solution, Status, VarId,
};

/// `constant + sum coeff * x`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, a)| a * x[v.0]).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|t| t.1 == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecourseVar {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecourseRow {
    pub name: String,
    /// `(recourse variable index, coefficient)`.
    pub y: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: AffineExpr,
    /// `(uncertainty index j, multiplier of v_j)`.
    pub rhs_v: Vec<(usize, AffineExpr)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Recourse {
    pub dim: usize,
    pub vars: Vec<RecourseVar>,
    pub rows: Vec<RecourseRow>,
}

#[derive(Debug, Clone)]
pub struct TwoStageProblem {
    pub first_stage: MixedIntegerProgram,
    pub recourse: Recourse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub theta: f64,
    pub worst: Scenario,
}

/// Largest uncertainty dimension accepted by [`enumerate_subproblem`].
pub const ENUMERATION_LIMIT: usize = 12;

/// Default worst-case slack tolerance, MW.
pub const DEFAULT_EPSILON: f64 = 1e-4;

impl Recourse {
    pub fn validate(&self, num_first_stage: usize) -> Result<()> {
        for v in &self.vars {
            if !(v.lower <= v.upper) {
                return Err(Error::Problem(format!(
                    "recourse variable {} has empty bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        let check = |e: &AffineExpr, row: &str| -> Result<()> {
            if !e.constant.is_finite() {
                return Err(Error::Problem(format!(
                    "recourse row {row}: non-finite constant"
                )));
            }
            for (v, a) in &e.terms {
                if v.0 >= num_first_stage || !a.is_finite() {
                    return Err(Error::Problem(format!(
                        "recourse row {row}: bad first-stage term {v:?}"
                    )));
                }
            }
            Ok(())
        };
        for r in &self.rows {
            for &(k, a) in &r.y {
                if k >= self.vars.len() || !a.is_finite() {
                    return Err(Error::Problem(format!(
                        "recourse row {}: bad y term",
                        r.name
                    )));
                }
            }
            check(&r.rhs, &r.name)?;
            for (j, e) in &r.rhs_v {
                if *j >= self.dim {
                    return Err(Error::Problem(format!(
                        "recourse row {}: uncertainty index {j} >= {}",
                        r.name, self.dim
                    )));
                }
                check(e, &r.name)?;
            }
        }
        Ok(())
    }

    /// Adds the recourse block for scenario `v` to `mip`, returning the new
    /// recourse variables.
    pub fn instantiate(&self, lp: &mut LinearProgram, v: &[f64], tag: &str) -> Vec<VarId> {
        let ys: Vec<VarId> = self
            .vars
            .iter()
            .map(|y| lp.add_var(format!("{}[{tag}]", y.name), y.lower, y.upper))
            .collect();
        for r in &self.rows {
            let mut coeffs: Vec<(VarId, f64)> = r.y.iter().map(|&(k, a)| (ys[k], a)).collect();
            let mut rhs = r.rhs.constant;
            coeffs.extend(r.rhs.terms.iter().map(|&(x, a)| (x, -a)));
            for (j, e) in &r.rhs_v {
                let vj = v[*j];
                if vj == 0.0 {
                    continue;
                }
                rhs += vj * e.constant;
                coeffs.extend(e.terms.iter().map(|&(x, a)| (x, -a * vj)));
            }
            lp.add_constraint(format!("{}[{tag}]", r.name), coeffs, r.sense, rhs);
        }
        ys
    }

    /// Right-hand sides at fixed `x`: constants and per-row `v` multipliers.
    fn rhs_at(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
        let g0 = self.rows.iter().map(|r| r.rhs.eval(x)).collect();
        let g1 = self
            .rows
            .iter()
            .map(|r| {
                let mut acc: Vec<(usize, f64)> = Vec::new();
                for (j, e) in &r.rhs_v {
                    let val = e.eval(x);
                    match acc.iter_mut().find(|(k, _)| k == j) {
                        Some(slot) => slot.1 += val,
                        None => acc.push((*j, val)),
                    }
                }
                acc.retain(|(_, c)| *c != 0.0);
                acc
            })
            .collect();
        (g0, g1)
    }

    /// Slacked feasibility LP at fixed `x` and scenario `v`.
    pub fn slack_lp(&self, x: &[f64], v: &[f64]) -> LinearProgram {
        let (g0, g1) = self.rhs_at(x);
        let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
        let ys: Vec<VarId> = self
            .vars
            .iter()
            .map(|y| lp.add_var(y.name.clone(), y.lower, y.upper))
            .collect();
        for (i, r) in self.rows.iter().enumerate() {
            let h = g0[i] + g1[i].iter().map(|&(j, c)| c * v[j]).sum::<f64>();
            let mut coeffs: Vec<(VarId, f64)> = r.y.iter().map(|&(k, a)| (ys[k], a)).collect();
            match r.sense {
                Sense::Le => {
                    let s = lp.add_var(format!("s_{}", r.name), 0.0, f64::INFINITY);
                    lp.set_objective(s, 1.0);
                    coeffs.push((s, -1.0));
                }
                Sense::Ge => {
                    let s = lp.add_var(format!("s_{}", r.name), 0.0, f64::INFINITY);
                    lp.set_objective(s, 1.0);
                    coeffs.push((s, 1.0));
                }
                Sense::Eq => {
                    let sp = lp.add_var(format!("sp_{}", r.name), 0.0, f64::INFINITY);
                    let sn = lp.add_var(format!("sn_{}", r.name), 0.0, f64::INFINITY);
                    lp.set_objective(sp, 1.0);
                    lp.set_objective(sn, 1.0);
                    coeffs.push((sp, 1.0));
                    coeffs.push((sn, -1.0));
                }
            }
            lp.add_constraint(r.name.clone(), coeffs, r.sense, h);
        }
        lp
    }
}

/// Worst-case total slack over the vertices of the box, computed from the
/// dual of the slacked recourse LP as one MILP in `(mu, rho, v, q = mu * v)`.
pub fn solve_subproblem(recourse: &Recourse, x: &[f64]) -> Result<SubproblemResult> {
    let n = recourse.dim;
    let (g0, g1) = recourse.rhs_at(x);
    let mut mip = MixedIntegerProgram::new(LinearProgram::new(ObjectiveSense::Maximize));
    let v: Vec<VarId> = (0..n).map(|j| mip.add_binary(format!("v{j}"))).collect();
    // stationarity rows: sum_r mu_r sigma_r G_r,k - rho+_k + rho-_k = 0
    let mut station: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); recourse.vars.len()];
    for (i, r) in recourse.rows.iter().enumerate() {
        let sides: &[f64] = match r.sense {
            Sense::Le => &[1.0],
            Sense::Ge => &[-1.0],
            Sense::Eq => &[1.0, -1.0],
        };
        for &sigma in sides {
            let mu = mip.lp.add_var(format!("mu_{}_{}", r.name, sigma), 0.0, 1.0);
            mip.lp.add_objective(mu, -sigma * g0[i]);
            for &(k, a) in &r.y {
                station[k].push((mu, sigma * a));
            }
            for &(j, c) in &g1[i] {
                let q = mip
                    .lp
                    .add_var(format!("q_{}_{}_{j}", r.name, sigma), 0.0, 1.0);
                mip.lp.add_objective(q, -sigma * c);
                // exact McCormick envelope for mu in [0,1], v binary
                mip.lp
                    .add_constraint("mc_mu", vec![(q, 1.0), (mu, -1.0)], Sense::Le, 0.0);
                mip.lp
                    .add_constraint("mc_v", vec![(q, 1.0), (v[j], -1.0)], Sense::Le, 0.0);
                mip.lp.add_constraint(
                    "mc_lo",
                    vec![(q, 1.0), (mu, -1.0), (v[j], -1.0)],
                    Sense::Ge,
                    -1.0,
                );
            }
        }
    }
    for (k, y) in recourse.vars.iter().enumerate() {
        let mut row = std::mem::take(&mut station[k]);
        if y.lower.is_finite() {
            let rp = mip
                .lp
                .add_var(format!("rho_lo_{}", y.name), 0.0, f64::INFINITY);
            mip.lp.add_objective(rp, y.lower);
            row.push((rp, -1.0));
        }
        if y.upper.is_finite() {
            let rn = mip
                .lp
                .add_var(format!("rho_up_{}", y.name), 0.0, f64::INFINITY);
            mip.lp.add_objective(rn, -y.upper);
            row.push((rn, 1.0));
        }
        mip.lp
            .add_constraint(format!("dual_{}", y.name), row, Sense::Eq, 0.0);
    }
    let opts = MilpOptions {
        gap_tol: 1e-10,
        ..MilpOptions::default()
    };
    let sol = solve_milp_with(&mip, &opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::Unbounded => {
            return Err(Error::Problem(
                "subproblem dual unbounded: recourse rows are malformed".into(),
            ))
        }
        status => {
            return Err(Error::Solver {
                status,
                context: "robust feasibility subproblem".into(),
            })
        }
    }
    Ok(SubproblemResult {
        theta: sol.objective.max(0.0),
        worst: Scenario {
            v: v.iter().map(|&j| sol.values[j.0].round()).collect(),
        },
    })
}

/// Worst-case slack by solving the recourse LP at every vertex of the box.
pub fn enumerate_subproblem(recourse: &Recourse, x: &[f64]) -> Result<SubproblemResult> {
    let n = recourse.dim;
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut best: Option<SubproblemResult> = None;
    for mask in 0u32..(1u32 << n) {
        let v: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
        let theta = vertex_slack(recourse, x, &v)?;
        if best.as_ref().is_none_or(|b| theta > b.theta + 1e-12) {
            best = Some(SubproblemResult {
                theta,
                worst: Scenario { v },
            });
        }
    }
    Ok(best.expect("at least one vertex"))
}

/// Minimum total slack of the recourse rows at a single scenario.
pub fn vertex_slack(recourse: &Recourse, x: &[f64], v: &[f64]) -> Result<f64> {
    let lp = recourse.slack_lp(x, v);
    solve_lp(&lp)?
        .require_optimal("recourse slack LP")
        .map(|s| s.objective.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcgIteration {
    pub iter: usize,
    pub master_obj: f64,
    pub theta: f64,
    /// Scenario appended after this iteration, if any.
    pub scenario: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CcgTrace {
    pub iterations: Vec<CcgIteration>,
    pub terminal_theta: f64,
    pub converged: bool,
}

impl CcgTrace {
    /// One JSON object per line: `{iter, master_obj, theta, scenario}`.
    pub fn write_json_lines(&self, mut out: impl Write) -> std::io::Result<()> {
        for it in &self.iterations {
            serde_json::to_writer(&mut out, it)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub struct CcgOptions<'a> {
    pub epsilon: f64,
    pub max_iter: usize,
    pub gap_tol: f64,
    /// Scenario blocks present in the master from the start.
    pub initial_scenarios: Vec<Scenario>,
    pub heuristic: Option<&'a Heuristic<'a>>,
    /// Branching priority for first-stage variables (recourse columns get 0).
    pub priority: Option<Vec<i32>>,
    /// Certify with vertex enumeration instead of the dual MILP.
    pub enumerate: bool,
    /// Give up with a `BoundExceeded` solver error once a master optimum is
    /// proven worse than this; masters only get worse as blocks are added.
    pub objective_limit: Option<f64>,
}

impl Default for CcgOptions<'_> {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            max_iter: 64,
            gap_tol: crate::solver::DEFAULT_GAP,
            initial_scenarios: Vec::new(),
            heuristic: None,
            priority: None,
            enumerate: false,
            objective_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CcgResult {
    /// Master solution restricted to first-stage variables.
    pub solution: Solution,
    pub scenarios: Vec<Scenario>,
    pub trace: CcgTrace,
}

fn add_scenario(mip: &mut MixedIntegerProgram, recourse: &Recourse, sc: &Scenario, k: usize) {
    recourse.instantiate(&mut mip.lp, &sc.v, &format!("s{k}"));
}

/// First-stage problem with one recourse block per scenario, as the C&CG
/// master sees it.
pub fn master_problem(problem: &TwoStageProblem, scenarios: &[Scenario]) -> MixedIntegerProgram {
    let mut master = problem.first_stage.clone();
    for (k, sc) in scenarios.iter().enumerate() {
        add_scenario(&mut master, &problem.recourse, sc, k);
    }
    master
}

/// Column-and-constraint generation. A master that turns infeasible is
/// reported as `Error::Solver { status: Infeasible, .. }`.
pub fn run_ccg(problem: &TwoStageProblem, opts: &CcgOptions<'_>) -> Result<CcgResult> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::Problem("epsilon must be positive".into()));
    }
    let nx = problem.first_stage.lp.num_vars();
    problem.recourse.validate(nx)?;
    let mut master = problem.first_stage.clone();
    let mut scenarios: Vec<Scenario> = Vec::new();
    for sc in &opts.initial_scenarios {
        if !scenarios.contains(sc) {
            add_scenario(&mut master, &problem.recourse, sc, scenarios.len());
            scenarios.push(sc.clone());
        }
    }
    let mut trace = CcgTrace::default();
    let mut hint: Option<Vec<f64>> = None;
    for iter in 1..=opts.max_iter {
        let priority = opts.priority.as_ref().map(|p| {
            let mut full = p.clone();
            full.resize(master.lp.num_vars(), 0);
            full
        });
        let milp_opts = MilpOptions {
            gap_tol: opts.gap_tol,
            hint: hint.take().map(|mut h: Vec<f64>| {
                h.resize(master.lp.num_vars(), 0.0);
                h
            }),
            heuristic: opts.heuristic,
            priority,
            objective_limit: opts.objective_limit,
            ..MilpOptions::default()
        };
        let sol = if master.integral.is_empty() {
            solve_lp(&master.lp)?
        } else {
            solve_milp_with(&master, &milp_opts)?
        };
        if sol.status != Status::Optimal {
            return Err(Error::Solver {
                status: sol.status,
                context: format!("C&CG master at iteration {iter}"),
            });
        }
        let x = &sol.values[..nx];
        let sp = if opts.enumerate {
            enumerate_subproblem(&problem.recourse, x)?
        } else {
            solve_subproblem(&problem.recourse, x)?
        };
        let done = sp.theta < opts.epsilon;
        trace.iterations.push(CcgIteration {
            iter,
            master_obj: sol.objective,
            theta: sp.theta,
            scenario: (!done).then(|| sp.worst.v.clone()),
        });
        trace.terminal_theta = sp.theta;
        if done {
            trace.converged = true;
            let mut first = sol;
            first.values.truncate(nx);
            return Ok(CcgResult {
                solution: first,
                scenarios,
                trace,
            });
        }
        if scenarios.contains(&sp.worst) {
            return Err(Error::Problem(format!(
                "scenario {:?} violated although its block is in the master (theta {:.3e})",
                sp.worst.v, sp.theta
            )));
        }
        add_scenario(&mut master, &problem.recourse, &sp.worst, scenarios.len());
        scenarios.push(sp.worst);
        // first-stage values stay a useful incumbent only for integer parts
        hint = Some(sol.values);
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        theta: trace.terminal_theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One recourse y in [0, 5] that must equal x + 3 v.
    fn one_dim(ylim: f64) -> (LinearProgram, Recourse) {
        let mut lp = LinearProgram::new(ObjectiveSense::Maximize);
        let x = lp.add_var("x", 0.0, 10.0);
        lp.set_objective(x, 1.0);
        let rec = Recourse {
            dim: 1,
            vars: vec![RecourseVar {
                name: "y".into(),
                lower: 0.0,
                upper: ylim,
            }],
            rows: vec![RecourseRow {
                name: "bal".into(),
                y: vec![(0, 1.0)],
                sense: Sense::Eq,
                rhs: AffineExpr {
                    constant: 0.0,
                    terms: vec![(x, 1.0)],
                },
                rhs_v: vec![(0, AffineExpr::constant(3.0))],
            }],
        };
        (lp, rec)
    }

    #[test]
    fn margin_at_upper_vertex() {
        let (_, rec) = one_dim(5.0);
        // x = 4: v = 1 needs y = 7 > 5, slack 2
        let e = enumerate_subproblem(&rec, &[4.0]).unwrap();
        assert!((e.theta - 2.0).abs() < 1e-9);
        assert_eq!(e.worst.v, vec![1.0]);
        let d = solve_subproblem(&rec, &[4.0]).unwrap();
        assert!((d.theta - 2.0).abs() < 1e-9);
        assert_eq!(d.worst.v, vec![1.0]);
        let ok = solve_subproblem(&rec, &[1.0]).unwrap();
        assert!(ok.theta.abs() < 1e-9);
    }

    #[test]
    fn ccg_adds_the_upper_vertex() {
        let (lp, rec) = one_dim(5.0);
        let problem = TwoStageProblem {
            first_stage: MixedIntegerProgram::new(lp),
            recourse: rec,
        };
        let res = run_ccg(&problem, &CcgOptions::default()).unwrap();
        assert!(res.trace.converged);
        assert_eq!(res.trace.iterations.len(), 2);
        assert_eq!(res.scenarios, vec![Scenario { v: vec![1.0] }]);
        assert!((res.solution.values[0] - 2.0).abs() < 1e-9);
        let mut buf = Vec::new();
        res.trace.write_json_lines(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"scenario\":[1.0]"));
    }

    #[test]
    fn already_robust_converges_immediately() {
        let (mut lp, rec) = one_dim(50.0);
        lp.set_bounds(VarId(0), 0.0, 1.0);
        let problem = TwoStageProblem {
            first_stage: MixedIntegerProgram::new(lp),
            recourse: rec,
        };
        let res = run_ccg(&problem, &CcgOptions::default()).unwrap();
        assert_eq!(res.trace.iterations.len(), 1);
        assert_eq!(res.trace.terminal_theta, 0.0);
    }

    #[test]
    fn zero_dimensional_box() {
        let rec = Recourse {
            dim: 0,
            vars: vec![RecourseVar {
                name: "y".into(),
                lower: 0.0,
                upper: 1.0,
            }],
            rows: vec![RecourseRow {
                name: "r".into(),
                y: vec![(0, 1.0)],
                sense: Sense::Ge,
                rhs: AffineExpr::constant(3.0),
                rhs_v: vec![],
            }],
        };
        let e = enumerate_subproblem(&rec, &[]).unwrap();
        assert!((e.theta - 2.0).abs() < 1e-9);
        let d = solve_subproblem(&rec, &[]).unwrap();
        assert!((d.theta - 2.0).abs() < 1e-9);
    }

    #[test]
    fn enumeration_refuses_large_boxes() {
        let rec = Recourse {
            dim: 13,
            ..Recourse::default()
        };
        assert!(matches!(
            enumerate_subproblem(&rec, &[]),
            Err(Error::TooLarge { .. })
        ));
    }
}
