//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes are re-solved on a single shared simplex tableau: a node only differs
//! from any other by the bounds of integral variables, and reduced costs do not
//! depend on bounds, so the previous basis is always dual feasible after
//! re-seating nonbasic variables. Search alternates depth-first dives with
//! best-bound selection; branching picks the most fractional variable among
//! those of highest priority.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::{LpOptions, Simplex};
use super::{MixedIntegerProgram, ObjectiveSense, Solution, Status, DEFAULT_GAP, INT_TOL};
use crate::error::{Error, Result};

/// Maps an LP-relaxation point to a candidate full assignment; only the
/// integral coordinates are used, continuous ones are re-optimized.
pub type Heuristic<'a> = dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a;

#[derive(Clone)]
pub struct MilpOptions<'a> {
    /// Relative optimality gap; 0 means exact up to 1e-9 absolute.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub lp: LpOptions,
    /// Starting point whose integral part is tried before the search.
    pub hint: Option<Vec<f64>>,
    pub heuristic: Option<&'a Heuristic<'a>>,
    /// Per-variable branching priority (higher first); defaults to 0.
    pub priority: Option<Vec<i32>>,
    /// How often (in nodes) the heuristic runs after the root.
    pub heuristic_every: usize,
    /// Stop with [`Status::BoundExceeded`] once the optimum is proven to be
    /// worse than this value.
    pub objective_limit: Option<f64>,
}

impl Default for MilpOptions<'_> {
    fn default() -> Self {
        Self {
            gap_tol: DEFAULT_GAP,
            node_limit: 500_000,
            lp: LpOptions::default(),
            hint: None,
            heuristic: None,
            priority: None,
            heuristic_every: 25,
            objective_limit: None,
        }
    }
}

pub fn solve_milp(mip: &MixedIntegerProgram, gap_tol: f64) -> Result<Solution> {
    solve_milp_with(
        mip,
        &MilpOptions {
            gap_tol,
            ..Default::default()
        },
    )
}

#[derive(Debug)]
struct Node {
    bound: f64,
    id: usize,
    fixings: Vec<(u32, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound, then oldest id, is "greatest"
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'p> {
    mip: &'p MixedIntegerProgram,
    sx: Simplex,
    ints: Vec<usize>,
    root_bounds: Vec<(f64, f64)>,
    priority: Vec<i32>,
    sign: f64,
    incumbent: Option<(f64, Vec<f64>)>,
    lp_opts: LpOptions,
}

enum NodeResult {
    Pruned,
    Unbounded,
    Integral,
    Branch { var: u32, value: f64, obj: f64 },
}

impl<'p> Search<'p> {
    fn apply(&mut self, fixings: &[(u32, bool)]) {
        for (k, &j) in self.ints.iter().enumerate() {
            let (lo, up) = self.root_bounds[k];
            self.sx.set_bounds(j, lo, up);
        }
        for &(k, v) in fixings {
            let j = self.ints[k as usize];
            let x = if v { 1.0 } else { 0.0 };
            self.sx.set_bounds(j, x, x);
        }
    }

    fn internal_obj(&self) -> f64 {
        self.sign * self.sx.objective()
    }

    fn cutoff(&self, gap: f64) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((inc, _)) => inc - (gap * inc.abs().max(1.0)).max(1e-9),
        }
    }

    fn lp_solve(&mut self) -> Status {
        let st = self.sx.solve();
        if st == Status::IterationLimit {
            // retry from a fresh slack basis with the same bounds
            let bounds: Vec<(f64, f64)> = (0..self.sx.num_struct())
                .map(|j| self.sx.bounds(j))
                .collect();
            self.sx = Simplex::new(&self.mip.lp, &self.lp_opts);
            for (j, (lo, up)) in bounds.into_iter().enumerate() {
                self.sx.set_bounds(j, lo, up);
            }
            return self.sx.solve();
        }
        st
    }

    /// Fixes every integral variable to the rounded `candidate` and re-solves.
    fn try_candidate(&mut self, candidate: &[f64]) -> bool {
        if candidate.len() != self.sx.num_struct() {
            return false;
        }
        for (k, &j) in self.ints.iter().enumerate() {
            let x = candidate[j].round();
            let (lo, up) = self.root_bounds[k];
            if x < lo - INT_TOL || x > up + INT_TOL {
                return false;
            }
            self.sx.set_bounds(j, x, x);
        }
        if self.lp_solve() != Status::Optimal {
            return false;
        }
        let obj = self.internal_obj();
        let better = match &self.incumbent {
            None => true,
            Some((inc, _)) => obj < inc - 1e-12,
        };
        if better {
            let mut values = self.sx.primal_values();
            for &j in &self.ints {
                values[j] = values[j].round();
            }
            self.incumbent = Some((obj, values));
        }
        better
    }

    fn evaluate(&mut self, fixings: &[(u32, bool)], gap: f64) -> Result<NodeResult> {
        self.apply(fixings);
        match self.lp_solve() {
            Status::Optimal => {}
            Status::Infeasible => return Ok(NodeResult::Pruned),
            Status::Unbounded => return Ok(NodeResult::Unbounded),
            _ => return Ok(NodeResult::Pruned),
        }
        let obj = self.internal_obj();
        if obj >= self.cutoff(gap) {
            return Ok(NodeResult::Pruned);
        }
        let mut pick: Option<(i32, f64, u32, f64)> = None;
        for (k, &j) in self.ints.iter().enumerate() {
            let x = self.sx.value(j);
            let frac = x - x.floor();
            if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
                continue;
            }
            let pr = self.priority[j];
            let score = (frac - 0.5).abs();
            let better = match pick {
                None => true,
                Some((bp, bs, _, _)) => pr > bp || (pr == bp && score < bs - 1e-12),
            };
            if better {
                pick = Some((pr, score, k as u32, x));
            }
        }
        match pick {
            None => {
                let values = self.sx.primal_values();
                self.try_candidate(&values);
                Ok(NodeResult::Integral)
            }
            Some((_, _, var, value)) => Ok(NodeResult::Branch { var, value, obj }),
        }
    }
}

pub fn solve_milp_with(mip: &MixedIntegerProgram, opts: &MilpOptions<'_>) -> Result<Solution> {
    mip.validate()?;
    super::dump_if_requested(&mip.lp, Some(&mip.integral), "milp");
    let lp = &mip.lp;
    let sign = if lp.sense == ObjectiveSense::Maximize {
        -1.0
    } else {
        1.0
    };
    let ints: Vec<usize> = mip.integral.iter().map(|v| v.0).collect();
    let root_bounds = ints
        .iter()
        .map(|&j| (lp.vars[j].lower.ceil(), lp.vars[j].upper.floor()))
        .collect::<Vec<_>>();
    if root_bounds.iter().any(|(lo, up)| lo > up) {
        return Ok(Solution::with_status(Status::Infeasible));
    }
    let priority = match &opts.priority {
        Some(p) if p.len() == lp.num_vars() => p.clone(),
        Some(_) => return Err(Error::Problem("priority vector length mismatch".into())),
        None => vec![0; lp.num_vars()],
    };
    let mut search = Search {
        mip,
        sx: Simplex::new(lp, &opts.lp),
        ints,
        root_bounds,
        priority,
        sign,
        incumbent: None,
        lp_opts: opts.lp,
    };
    let gap = opts.gap_tol.max(0.0);
    let limit = opts.objective_limit.map(|v| sign * v);

    if let Some(hint) = &opts.hint {
        search.try_candidate(hint);
    }

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut current: Option<Node> = Some(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
    });

    loop {
        let node = match current.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if node.bound >= search.cutoff(gap) {
            continue;
        }
        if let Some(limit) = limit {
            let open = heap.peek().map_or(node.bound, |b| b.bound.min(node.bound));
            let best = search.incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
            if open.min(best) > limit {
                return Ok(Solution::with_status(Status::BoundExceeded));
            }
        }
        if nodes >= opts.node_limit {
            return Ok(finish(&search, Status::NodeLimit));
        }
        nodes += 1;
        let result = search.evaluate(&node.fixings, gap)?;
        if let NodeResult::Unbounded = result {
            return Ok(Solution::with_status(Status::Unbounded));
        }
        if nodes == 1 && search.sx.num_struct() > 0 {
            // the root relaxation decides infeasibility/unboundedness outright
            if let NodeResult::Pruned = result {
                if search.incumbent.is_none() {
                    search.apply(&[]);
                    let st = search.lp_solve();
                    if st != Status::Optimal {
                        return Ok(Solution::with_status(st));
                    }
                }
            }
        }
        if let NodeResult::Branch { var, value, obj } = result {
            if let Some(h) = opts.heuristic {
                if nodes == 1 || nodes.is_multiple_of(opts.heuristic_every.max(1)) {
                    let point = search.sx.primal_values();
                    if let Some(cand) = h(&point) {
                        search.try_candidate(&cand);
                    }
                }
            }
            if obj >= search.cutoff(gap) {
                continue;
            }
            let up_first = value - value.floor() >= 0.5;
            let mut near = node.fixings.clone();
            near.push((var, up_first));
            let mut far = node.fixings;
            far.push((var, !up_first));
            heap.push(Node {
                bound: obj,
                id: next_id,
                fixings: far,
            });
            next_id += 1;
            // keep diving until an incumbent exists, then only while the
            // child stays competitive with the best open node
            let dive = search.incumbent.is_none()
                || heap.peek().is_none_or(|best| obj <= best.bound + 1e-9);
            let child = Node {
                bound: obj,
                id: next_id,
                fixings: near,
            };
            next_id += 1;
            if dive {
                current = Some(child);
            } else {
                heap.push(child);
            }
        }
    }
    Ok(finish(&search, Status::Optimal))
}

fn finish(search: &Search<'_>, status: Status) -> Solution {
    match &search.incumbent {
        Some((_, values)) => Solution {
            status,
            objective: search.mip.lp.evaluate(values),
            values: values.clone(),
            duals: Vec::new(),
            bound_duals: Vec::new(),
        },
        None if status == Status::Optimal => Solution::with_status(Status::Infeasible),
        None => Solution::with_status(status),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{brute_force_milp, solve_lp, LinearProgram, Sense};

    fn knapsack() -> MixedIntegerProgram {
        let mut mip = MixedIntegerProgram::new(LinearProgram::new(ObjectiveSense::Maximize));
        let w = [5.0, 4.0, 6.0, 3.0];
        let v = [10.0, 40.0, 30.0, 50.0];
        let xs: Vec<_> = (0..4).map(|i| mip.add_binary(format!("x{i}"))).collect();
        for (i, x) in xs.iter().enumerate() {
            mip.lp.set_objective(*x, v[i]);
        }
        mip.lp.add_constraint(
            "cap",
            xs.iter().zip(w).map(|(x, w)| (*x, w)).collect(),
            Sense::Le,
            10.0,
        );
        mip
    }

    #[test]
    fn knapsack_optimum() {
        let s = solve_milp(&knapsack(), 0.0).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 90.0).abs() < 1e-9);
    }

    #[test]
    fn objective_limit_cuts_off_worse_optima() {
        let opts = |limit| MilpOptions {
            objective_limit: Some(limit),
            ..MilpOptions::default()
        };
        let s = solve_milp_with(&knapsack(), &opts(100.0)).unwrap();
        assert_eq!(s.status, Status::BoundExceeded);
        let s = solve_milp_with(&knapsack(), &opts(80.0)).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 90.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_binaries_reduce_to_lp() {
        let mut mip = knapsack();
        for j in 0..4 {
            mip.lp.set_bounds(crate::solver::VarId(j), 1.0, 1.0);
        }
        mip.lp.constraints[0].rhs = 100.0;
        let s = solve_milp(&mip, 1e-6).unwrap();
        let lp = solve_lp(&mip.lp).unwrap();
        assert!((s.objective - lp.objective).abs() < 1e-9);
    }

    #[test]
    fn conflicting_fixings_are_infeasible() {
        let mut mip = MixedIntegerProgram::new(LinearProgram::default());
        let a = mip.add_binary("a");
        let b = mip.add_binary("b");
        mip.lp.set_bounds(a, 1.0, 1.0);
        mip.lp.set_bounds(b, 1.0, 1.0);
        mip.lp
            .add_constraint("one", vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        assert_eq!(solve_milp(&mip, 1e-6).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn agrees_with_enumeration() {
        let mip = knapsack();
        let a = solve_milp(&mip, 0.0).unwrap();
        let b = brute_force_milp(&mip).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
    }
}
