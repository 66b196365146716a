//! Embedded LP / MILP backend.
//!
//! Problems are stated in a small algebraic form ([`LinearProgram`],
//! [`MixedIntegerProgram`]) and solved by a dense bounded-variable simplex
//! ([`solve_lp`]) and a best-bound branch-and-bound on top of it
//! ([`solve_milp`]). [`brute_force_milp`] enumerates binary assignments and
//! exists as an exact oracle for small instances.
//!
//! Setting `DISPATCH_LP_DUMP=<dir>` writes every problem handed to the
//! backend to `<dir>` in CPLEX-LP text form.

mod brute;
mod linalg;
mod lp_format;
mod milp;
mod simplex;

pub use brute::{brute_force_milp, BRUTE_FORCE_LIMIT};
pub use linalg::{invert, solve_dense};
pub use lp_format::{dump_if_requested, to_lp_string, write_lp};
pub use milp::{solve_milp, solve_milp_with, Heuristic, MilpOptions};
pub use simplex::{solve_lp, solve_lp_with, LpOptions};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Integrality tolerance.
pub const INT_TOL: f64 = 1e-6;
/// Default relative MILP gap.
pub const DEFAULT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted.
    IterationLimit,
    /// Branch-and-bound node budget exhausted. `values` hold the incumbent, if any.
    NodeLimit,
    /// The optimum is worse than the caller's objective limit.
    BoundExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program `min/max c'x + c0` subject to sparse rows and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub sense: ObjectiveSense,
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new(ObjectiveSense::Minimize)
    }
}

impl LinearProgram {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(0.0);
        VarId(self.vars.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        RowId(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Objective value of `values` in the problem's own sense.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Largest violation of any row or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for row in &self.constraints {
            let lhs: f64 = row.coeffs.iter().map(|(j, a)| a * values[j.0]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.vars.len() {
            return Err(Error::Problem(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.vars.len()
            )));
        }
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::Problem(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::Problem(format!(
                    "variable {} has an empty domain",
                    v.name
                )));
            }
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() {
                return Err(Error::Problem(format!(
                    "row {} has rhs {}",
                    row.name, row.rhs
                )));
            }
            for (j, a) in &row.coeffs {
                if j.0 >= self.vars.len() {
                    return Err(Error::Problem(format!(
                        "row {} references undeclared variable #{}",
                        row.name, j.0
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::Problem(format!(
                        "row {} has coefficient {}",
                        row.name, a
                    )));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Problem(
                "objective has a non-finite coefficient".into(),
            ));
        }
        Ok(())
    }
}

/// A linear program in which some variables are restricted to {0, 1}.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub integral: BTreeSet<VarId>,
}

impl MixedIntegerProgram {
    pub fn new(lp: LinearProgram) -> Self {
        Self {
            lp,
            integral: BTreeSet::new(),
        }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        let id = self.lp.add_var(name, 0.0, 1.0);
        self.integral.insert(id);
        id
    }

    pub fn validate(&self) -> Result<()> {
        self.lp.validate()?;
        for id in &self.integral {
            let v =
                self.lp.vars.get(id.0).ok_or_else(|| {
                    Error::Problem(format!("integral variable #{} undeclared", id.0))
                })?;
            if v.lower < 0.0 || v.upper > 1.0 {
                return Err(Error::Problem(format!(
                    "binary {} has bounds [{}, {}] outside [0, 1]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub values: Vec<f64>,
    /// Objective in the problem's own sense, including the constant term.
    pub objective: f64,
    /// Sensitivity of the objective to each row's right-hand side (LP only).
    pub duals: Vec<f64>,
    /// Reduced cost of each variable, same sign convention as `duals` (LP only).
    pub bound_duals: Vec<f64>,
}

impl Solution {
    pub(crate) fn with_status(status: Status) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            bound_duals: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, id: VarId) -> f64 {
        self.values[id.0]
    }

    /// Turns a non-optimal status into an error carrying `context`.
    pub fn require_optimal(self, context: &str) -> Result<Self> {
        if self.status == Status::Optimal {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                context: context.to_string(),
            })
        }
    }

    /// Dual objective `b'y + sum_j d_j x_j` over nonbasic bound terms; equals the
    /// primal objective at an optimal LP solution.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let rows: f64 = lp
            .constraints
            .iter()
            .zip(&self.duals)
            .map(|(r, y)| r.rhs * y)
            .sum();
        let bounds: f64 = self
            .bound_duals
            .iter()
            .zip(&self.values)
            .map(|(d, x)| if d.abs() > 0.0 { d * x } else { 0.0 })
            .sum();
        lp.objective_constant + rows + bounds
    }
}
