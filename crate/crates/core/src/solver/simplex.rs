//! Dense bounded-variable simplex on an explicit tableau.
//!
//! Every row `a_i x (sense) b_i` becomes `a_i x + s_i = b_i` with the slack
//! bounds encoding the sense (`<=`: s >= 0, `>=`: s <= 0, `=`: s = 0). The
//! tableau `B^-1 [A | I]` is kept explicitly together with the basic values
//! and the reduced costs. Primal simplex (composite phase 1 / phase 2, Harris
//! ratio test, Bland fallback on stalling) solves from scratch; dual simplex
//! re-optimizes after bound changes, which is what branch-and-bound needs.

use super::{linalg, LinearProgram, ObjectiveSense, Sense, Solution, Status, FEAS_TOL};
use crate::error::Result;

const PIV_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const STALL_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, Default)]
pub struct LpOptions {
    /// Pivot budget per solve; `None` scales with problem size.
    pub pivot_limit: Option<usize>,
}

/// Solves `lp` with default options.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<Solution> {
    lp.validate()?;
    super::dump_if_requested(lp, None, "lp");
    let mut sx = Simplex::new(lp, opts);
    let status = sx.solve();
    Ok(sx.solution(status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    Lower,
    Upper,
    /// Free nonbasic variable parked at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

pub(crate) struct Simplex {
    m: usize,
    n_struct: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    maximize: bool,
    obj_constant: f64,

    t: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,

    pivots: usize,
    pivot_limit: usize,
    since_reinvert: usize,
    reinvert_every: usize,
    scratch: Vec<usize>,
}

impl Simplex {
    pub(crate) fn new(lp: &LinearProgram, opts: &LpOptions) -> Self {
        let m = lp.constraints.len();
        let n_struct = lp.vars.len();
        let n = n_struct + m;
        let mut cols = vec![Vec::new(); n_struct];
        for (i, row) in lp.constraints.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j.0].push((i, a));
                }
            }
        }
        // merge duplicate entries of a row within a column
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(i, a) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += a,
                    _ => merged.push((i, a)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            *col = merged;
        }
        let maximize = lp.sense == ObjectiveSense::Maximize;
        let mut cost = vec![0.0; n];
        for (j, c) in lp.objective.iter().enumerate() {
            cost[j] = if maximize { -c } else { *c };
        }
        let mut lo = vec![0.0; n];
        let mut up = vec![0.0; n];
        for (j, v) in lp.vars.iter().enumerate() {
            lo[j] = v.lower;
            up[j] = v.upper;
        }
        let mut b = vec![0.0; m];
        for (i, row) in lp.constraints.iter().enumerate() {
            b[i] = row.rhs;
            let (l, u) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo[n_struct + i] = l;
            up[n_struct + i] = u;
        }
        let pivot_limit = opts
            .pivot_limit
            .unwrap_or_else(|| 20_000usize.max(40 * (m + n)));
        let mut sx = Self {
            m,
            n_struct,
            n,
            cols,
            b,
            cost,
            lo,
            up,
            maximize,
            obj_constant: lp.objective_constant,
            t: vec![0.0; m * n],
            beta: vec![0.0; m],
            d: vec![0.0; n],
            basis: (n_struct..n).collect(),
            state: vec![VarState::Lower; n],
            pivots: 0,
            pivot_limit,
            since_reinvert: 0,
            reinvert_every: 100usize.max(m),
            scratch: Vec::with_capacity(n),
        };
        sx.slack_start();
        sx
    }

    fn slack_start(&mut self) {
        let (m, n) = (self.m, self.n);
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                self.t[i * n + j] = a;
            }
        }
        for i in 0..m {
            self.t[i * n + self.n_struct + i] = 1.0;
            self.basis[i] = self.n_struct + i;
        }
        for j in 0..self.n_struct {
            self.state[j] = self.default_nonbasic(j);
        }
        for i in 0..m {
            self.state[self.n_struct + i] = VarState::Basic(i);
        }
        self.d.copy_from_slice(&self.cost);
        self.compute_beta();
        self.since_reinvert = 0;
    }

    fn default_nonbasic(&self, j: usize) -> VarState {
        if self.lo[j].is_finite() {
            VarState::Lower
        } else if self.up[j].is_finite() {
            VarState::Upper
        } else {
            VarState::Zero
        }
    }

    #[inline]
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Lower => self.lo[j],
            VarState::Upper => self.up[j],
            VarState::Zero => 0.0,
            VarState::Basic(r) => self.beta[r],
        }
    }

    pub(crate) fn value(&self, j: usize) -> f64 {
        self.nonbasic_value(j)
    }

    pub(crate) fn num_struct(&self) -> usize {
        self.n_struct
    }

    pub(crate) fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.up[j])
    }

    /// beta = B^-1 b - sum_{j nonbasic} T[:, j] x_j
    fn compute_beta(&mut self) {
        let (m, n) = (self.m, self.n);
        for i in 0..m {
            let row = &self.t[i * n..(i + 1) * n];
            let mut v = 0.0;
            for (k, bk) in self.b.iter().enumerate() {
                let s = row[self.n_struct + k];
                if s != 0.0 {
                    v += s * bk;
                }
            }
            for j in 0..n {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let x = match self.state[j] {
                    VarState::Lower => self.lo[j],
                    VarState::Upper => self.up[j],
                    _ => 0.0,
                };
                if x != 0.0 && row[j] != 0.0 {
                    v -= row[j] * x;
                }
            }
            self.beta[i] = v;
        }
    }

    fn compute_d(&mut self) {
        let n = self.n;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * n..(i + 1) * n];
            for (dj, tij) in self.d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Rebuilds the tableau from the original data for the current basis.
    fn reinvert(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        self.since_reinvert = 0;
        if m == 0 {
            self.compute_d();
            return true;
        }
        let mut bmat = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n_struct {
                for &(i, a) in &self.cols[j] {
                    bmat[i * m + r] = a;
                }
            } else {
                bmat[(j - self.n_struct) * m + r] = 1.0;
            }
        }
        let binv = match linalg::invert(&bmat, m) {
            Ok(inv) => inv,
            Err(_) => {
                // basis lost numerically; restart from the slack basis
                self.slack_start();
                return false;
            }
        };
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n_struct {
            for &(k, a) in &self.cols[j] {
                for i in 0..m {
                    let v = binv[i * m + k];
                    if v != 0.0 {
                        self.t[i * n + j] += v * a;
                    }
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.t[i * n + self.n_struct + k] = binv[i * m + k];
            }
        }
        for i in 0..m {
            for j in 0..n {
                let v = &mut self.t[i * n + j];
                if v.abs() < DROP_TOL {
                    *v = 0.0;
                }
            }
            let bj = self.basis[i];
            self.t[i * n + bj] = 1.0;
        }
        self.compute_beta();
        self.compute_d();
        true
    }

    fn pivot(&mut self, r: usize, q: usize, leaving_state: VarState) {
        let n = self.n;
        let piv = self.t[r * n + q];
        self.scratch.clear();
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= piv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.scratch.push(k);
                    }
                }
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        let nz = &self.scratch;
        let update = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &k in nz {
                    let v = row[k] - f * prow[k];
                    row[k] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                row[q] = 0.0;
            }
        };
        before.chunks_exact_mut(n).for_each(update);
        after.chunks_exact_mut(n).for_each(update);

        let f = self.d[q];
        if f != 0.0 {
            for &k in nz {
                self.d[k] -= f * prow[k];
            }
        }
        self.d[q] = 0.0;

        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);
        self.state[leaving] = leaving_state;
        self.pivots += 1;
        self.since_reinvert += 1;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.up[j]
    }

    fn primal_infeasibility(&self, i: usize) -> f64 {
        let j = self.basis[i];
        let v = self.beta[i];
        if v < self.lo[j] - FEAS_TOL {
            self.lo[j] - v
        } else if v > self.up[j] + FEAS_TOL {
            v - self.up[j]
        } else {
            0.0
        }
    }

    /// Primal simplex; runs phase 1 while any basic variable is out of bounds.
    fn primal(&mut self) -> Outcome {
        let (m, n) = (self.m, self.n);
        let mut stall = 0usize;
        let mut phase1_cost = vec![0.0; m];
        let mut d1 = vec![0.0; n];
        let mut numerical_retries = 0;
        loop {
            if self.pivots >= self.pivot_limit {
                return Outcome::Limit;
            }
            if self.since_reinvert >= self.reinvert_every {
                self.reinvert();
            }
            let bland = stall > STALL_LIMIT;
            let mut any_infeasible = false;
            for i in 0..m {
                let j = self.basis[i];
                let v = self.beta[i];
                phase1_cost[i] = if v < self.lo[j] - FEAS_TOL {
                    any_infeasible = true;
                    -1.0
                } else if v > self.up[j] + FEAS_TOL {
                    any_infeasible = true;
                    1.0
                } else {
                    0.0
                };
            }
            let dvec: &[f64] = if any_infeasible {
                d1.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..m {
                    let c = phase1_cost[i];
                    if c == 0.0 {
                        continue;
                    }
                    let row = &self.t[i * n..(i + 1) * n];
                    for (dj, tij) in d1.iter_mut().zip(row) {
                        *dj -= c * tij;
                    }
                }
                &d1
            } else {
                &self.d
            };

            // pricing
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..n {
                let dir = match self.state[j] {
                    VarState::Basic(_) => continue,
                    _ if self.is_fixed(j) => continue,
                    VarState::Lower if dvec[j] < -OPT_TOL => 1.0,
                    VarState::Upper if dvec[j] > OPT_TOL => -1.0,
                    VarState::Zero if dvec[j].abs() > OPT_TOL => -dvec[j].signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                let score = dvec[j].abs();
                if score > best {
                    best = score;
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return if any_infeasible {
                    Outcome::Infeasible
                } else {
                    Outcome::Optimal
                };
            };

            match self.primal_ratio(q, dir, bland) {
                Ratio::Unbounded => {
                    if any_infeasible {
                        // phase 1 cannot be unbounded; treat as numerical trouble
                        numerical_retries += 1;
                        if numerical_retries > 3 {
                            return Outcome::Limit;
                        }
                        self.reinvert();
                        continue;
                    }
                    return Outcome::Unbounded;
                }
                Ratio::Flip(step) => {
                    self.apply_step(q, dir * step);
                    self.state[q] = if dir > 0.0 {
                        VarState::Upper
                    } else {
                        VarState::Lower
                    };
                    self.pivots += 1;
                    stall = 0;
                }
                Ratio::Pivot { row, step, leave } => {
                    let xq = self.nonbasic_value(q) + dir * step;
                    self.apply_step(q, dir * step);
                    self.pivot(row, q, leave);
                    self.beta[row] = xq;
                    if step < 1e-12 {
                        stall += 1;
                    } else {
                        stall = 0;
                    }
                }
            }
        }
    }

    fn apply_step(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let n = self.n;
        for i in 0..self.m {
            let a = self.t[i * n + q];
            if a != 0.0 {
                self.beta[i] -= a * delta;
            }
        }
    }

    fn primal_ratio(&self, q: usize, dir: f64, bland: bool) -> Ratio {
        let n = self.n;
        // Harris pass 1: relaxed bound
        let mut relaxed = f64::INFINITY;
        let mut cands: Vec<(usize, f64, f64, VarState)> = Vec::new();
        for i in 0..self.m {
            let alpha = self.t[i * n + q];
            if alpha.abs() <= PIV_TOL {
                continue;
            }
            let rate = -dir * alpha;
            let j = self.basis[i];
            let v = self.beta[i];
            let (lo, up) = (self.lo[j], self.up[j]);
            // infeasible basics moving further away carry no breakpoint
            let (target, leave) = if rate > 0.0 {
                if v > up + FEAS_TOL {
                    continue;
                } else if v < lo - FEAS_TOL {
                    (lo, VarState::Lower)
                } else if up.is_finite() {
                    (up, VarState::Upper)
                } else {
                    continue;
                }
            } else if v < lo - FEAS_TOL {
                continue;
            } else if v > up + FEAS_TOL {
                (up, VarState::Upper)
            } else if lo.is_finite() {
                (lo, VarState::Lower)
            } else {
                continue;
            };
            let exact = ((target - v) / rate).max(0.0);
            let tol_target = if rate > 0.0 {
                target + FEAS_TOL
            } else {
                target - FEAS_TOL
            };
            let loose = ((tol_target - v) / rate).max(0.0);
            relaxed = relaxed.min(loose);
            cands.push((i, exact, alpha.abs(), leave));
        }
        let flip = if dir > 0.0 {
            self.up[q] - self.nonbasic_value(q)
        } else {
            self.nonbasic_value(q) - self.lo[q]
        };
        if cands.is_empty() {
            return if flip.is_finite() {
                Ratio::Flip(flip)
            } else {
                Ratio::Unbounded
            };
        }
        if flip.is_finite() && flip <= relaxed {
            let min_exact = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            if flip <= min_exact {
                return Ratio::Flip(flip);
            }
        }
        let chosen = if bland {
            let min_exact = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= min_exact + 1e-12)
                .min_by_key(|c| self.basis[c.0])
                .copied()
        } else {
            cands
                .iter()
                .filter(|c| c.1 <= relaxed)
                .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(b.0.cmp(&a.0)))
                .copied()
        };
        match chosen {
            Some((row, step, _, leave)) => Ratio::Pivot { row, step, leave },
            None => Ratio::Unbounded,
        }
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self) -> Outcome {
        let n = self.n;
        let mut stall = 0usize;
        loop {
            if self.pivots >= self.pivot_limit {
                return Outcome::Limit;
            }
            if self.since_reinvert >= self.reinvert_every {
                self.reinvert();
            }
            let bland = stall > STALL_LIMIT;
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = 0.0;
            for i in 0..self.m {
                let viol = self.primal_infeasibility(i);
                if viol <= 0.0 {
                    continue;
                }
                if bland {
                    let better = match leave {
                        None => true,
                        Some((r, _)) => self.basis[i] < self.basis[r],
                    };
                    if better {
                        leave = Some((i, viol));
                    }
                } else if viol > worst {
                    worst = viol;
                    leave = Some((i, viol));
                }
            }
            let Some((r, _)) = leave else {
                return Outcome::Optimal;
            };
            let jb = self.basis[r];
            let below = self.beta[r] < self.lo[jb];
            let target = if below { self.lo[jb] } else { self.up[jb] };
            let row = &self.t[r * n..(r + 1) * n];

            let mut best_ratio = f64::INFINITY;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..n {
                let a = row[j];
                if a.abs() <= PIV_TOL || self.is_fixed(j) {
                    continue;
                }
                let dj = self.d[j];
                let ratio = match (self.state[j], below) {
                    (VarState::Basic(_), _) => continue,
                    (VarState::Lower, true) if a < 0.0 => dj.max(0.0) / -a,
                    (VarState::Upper, true) if a > 0.0 => (-dj).max(0.0) / a,
                    (VarState::Lower, false) if a > 0.0 => dj.max(0.0) / a,
                    (VarState::Upper, false) if a < 0.0 => (-dj).max(0.0) / -a,
                    (VarState::Zero, _) => dj.abs() / a.abs(),
                    _ => continue,
                };
                best_ratio = best_ratio.min(ratio + OPT_TOL / a.abs());
                cands.push((j, ratio, a.abs()));
            }
            if cands.is_empty() {
                return Outcome::Infeasible;
            }
            let chosen = if bland {
                let min_r = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|c| c.1 <= min_r + 1e-12)
                    .min_by_key(|c| c.0)
                    .copied()
            } else {
                cands
                    .iter()
                    .filter(|c| c.1 <= best_ratio)
                    .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(b.0.cmp(&a.0)))
                    .copied()
            };
            let (q, ratio, _) = chosen.expect("nonempty candidate list");
            let aq = row[q];
            let delta = (self.beta[r] - target) / aq;
            let xq = self.nonbasic_value(q) + delta;
            self.apply_step(q, delta);
            let leave_state = if below {
                VarState::Lower
            } else {
                VarState::Upper
            };
            self.pivot(r, q, leave_state);
            self.beta[r] = xq;
            if ratio < 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
        }
    }

    /// Moves every nonbasic variable to the bound its reduced cost prefers.
    /// Returns false when some reduced cost points at an infinite bound.
    fn make_dual_feasible(&mut self) -> bool {
        let mut ok = true;
        for j in 0..self.n {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let dj = self.d[j];
            let (lo, up) = (self.lo[j], self.up[j]);
            let st = if lo == up {
                VarState::Lower
            } else if dj > OPT_TOL {
                if lo.is_finite() {
                    VarState::Lower
                } else {
                    ok = false;
                    self.fallback_state(j)
                }
            } else if dj < -OPT_TOL {
                if up.is_finite() {
                    VarState::Upper
                } else {
                    ok = false;
                    self.fallback_state(j)
                }
            } else {
                self.fallback_state(j)
            };
            self.state[j] = st;
        }
        self.compute_beta();
        ok
    }

    fn fallback_state(&self, j: usize) -> VarState {
        match self.state[j] {
            VarState::Lower if self.lo[j].is_finite() => VarState::Lower,
            VarState::Upper if self.up[j].is_finite() => VarState::Upper,
            _ => self.default_nonbasic(j),
        }
    }

    fn to_status(o: Outcome) -> Status {
        match o {
            Outcome::Optimal => Status::Optimal,
            Outcome::Infeasible => Status::Infeasible,
            Outcome::Unbounded => Status::Unbounded,
            Outcome::Limit => Status::IterationLimit,
        }
    }

    /// Solves from the current basis; the caller may have changed bounds.
    pub(crate) fn solve(&mut self) -> Status {
        self.pivots = 0;
        let mut outcome = self.optimize();
        for _ in 0..2 {
            if outcome != Outcome::Optimal || self.residual_ok() {
                break;
            }
            self.reinvert();
            outcome = self.optimize();
        }
        Self::to_status(outcome)
    }

    fn optimize(&mut self) -> Outcome {
        if self.make_dual_feasible() {
            match self.dual() {
                Outcome::Optimal => {}
                other => return other,
            }
        }
        self.primal()
    }

    fn residual_ok(&self) -> bool {
        let x: Vec<f64> = (0..self.n).map(|j| self.value(j)).collect();
        for j in 0..self.n_struct {
            if x[j] < self.lo[j] - 10.0 * FEAS_TOL || x[j] > self.up[j] + 10.0 * FEAS_TOL {
                return false;
            }
        }
        let mut lhs = vec![0.0; self.m];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                lhs[i] += a * x[j];
            }
        }
        for i in 0..self.m {
            let s = x[self.n_struct + i];
            let scale = 1.0 + self.b[i].abs();
            if (lhs[i] + s - self.b[i]).abs() > FEAS_TOL * scale {
                return false;
            }
            let k = self.n_struct + i;
            if s < self.lo[k] - 10.0 * FEAS_TOL * scale || s > self.up[k] + 10.0 * FEAS_TOL * scale
            {
                return false;
            }
        }
        true
    }

    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, up: f64) {
        self.lo[j] = lo;
        self.up[j] = up;
    }

    pub(crate) fn objective(&self) -> f64 {
        let internal: f64 = (0..self.n_struct)
            .map(|j| self.cost[j] * self.value(j))
            .sum();
        let v = if self.maximize { -internal } else { internal };
        v + self.obj_constant
    }

    pub(crate) fn primal_values(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.value(j)).collect()
    }

    pub(crate) fn solution(&self, status: Status) -> Solution {
        if status != Status::Optimal {
            return Solution::with_status(status);
        }
        let sign = if self.maximize { -1.0 } else { 1.0 };
        let duals = (0..self.m)
            .map(|i| sign * -self.d[self.n_struct + i])
            .collect();
        let bound_duals = (0..self.n_struct)
            .map(|j| match self.state[j] {
                VarState::Basic(_) => 0.0,
                _ => sign * self.d[j],
            })
            .collect();
        Solution {
            status,
            values: self.primal_values(),
            objective: self.objective(),
            duals,
            bound_duals,
        }
    }
}

enum Ratio {
    Unbounded,
    Flip(f64),
    Pivot {
        row: usize,
        step: f64,
        leave: VarState,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{ObjectiveSense, Sense, VarId};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-7
    }

    #[test]
    fn max_single_bound_row() {
        let mut lp = LinearProgram::new(ObjectiveSense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        lp.set_objective(x, 1.0);
        lp.add_constraint("cap", vec![(x, 1.0)], Sense::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.objective, 3.0));
        assert!(close(s.duals[0], 1.0));
    }

    #[test]
    fn degenerate_symmetric_min() {
        let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert!(close(a.objective, 2.0));
        assert_eq!(a, b);
        assert!(close(a.duals[0], 1.0));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Infeasible);

        let mut lp = LinearProgram::new(ObjectiveSense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        lp.set_objective(x, 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min |x - 3| written with a free x and an epigraph t
        let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let t = lp.add_var("t", f64::NEG_INFINITY, f64::INFINITY);
        lp.set_objective(t, 1.0);
        lp.add_constraint("a", vec![(t, 1.0), (x, -1.0)], Sense::Ge, -3.0);
        lp.add_constraint("b", vec![(t, 1.0), (x, 1.0)], Sense::Ge, 3.0);
        lp.add_constraint("e", vec![(x, 2.0)], Sense::Eq, 5.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!(close(s.value(x), 2.5));
        assert!(close(s.objective, 0.5));
        assert!(close(s.objective, s.dual_objective(&lp)));
    }

    #[test]
    fn upper_bounded_variables_flip() {
        // max x + y, x,y in [0, 1], x + y <= 5: both at upper bound, row slack
        let mut lp = LinearProgram::new(ObjectiveSense::Maximize);
        let x = lp.add_var("x", 0.0, 1.0);
        let y = lp.add_var("y", 0.0, 1.0);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.objective, 2.0));
        assert!(close(s.duals[0], 0.0));
        assert!(close(s.bound_duals[0], 1.0));
        assert!(close(s.objective, s.dual_objective(&lp)));
    }

    #[test]
    fn duplicate_coefficients_are_merged() {
        let mut lp = LinearProgram::new(ObjectiveSense::Maximize);
        let x = lp.add_var("x", 0.0, f64::INFINITY);
        lp.set_objective(x, 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (VarId(0), 1.0)], Sense::Le, 4.0);
        let s = solve_lp(&lp).unwrap();
        assert!(close(s.value(x), 2.0));
    }

    #[test]
    fn reoptimize_after_bound_change() {
        let mut lp = LinearProgram::new(ObjectiveSense::Minimize);
        let x = lp.add_var("x", 0.0, 10.0);
        let y = lp.add_var("y", 0.0, 10.0);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 2.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Sense::Ge, 4.0);
        let mut sx = Simplex::new(&lp, &LpOptions::default());
        assert_eq!(sx.solve(), Status::Optimal);
        assert!(close(sx.objective(), 4.0));
        sx.set_bounds(x.0, 0.0, 1.0);
        assert_eq!(sx.solve(), Status::Optimal);
        assert!(close(sx.objective(), 7.0));
        sx.set_bounds(y.0, 0.0, 2.0);
        assert_eq!(sx.solve(), Status::Infeasible);
        sx.set_bounds(x.0, 0.0, 10.0);
        sx.set_bounds(y.0, 0.0, 10.0);
        assert_eq!(sx.solve(), Status::Optimal);
        assert!(close(sx.objective(), 4.0));
    }
}
