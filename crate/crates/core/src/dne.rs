//! Dispatchable-range (DNE limit) determination.
//!
//! The master minimizes the number of history samples left outside `[l, u]`
//! subject to base-case dispatch rows; robust feasibility of every point in
//! `[l, u]` is enforced by column-and-constraint generation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PowerSystem, ShiftFactorMatrix};
use crate::network::{add_base_case, corrective_recourse, BaseCase, Term};
use crate::robust::{run_ccg, CcgOptions, CcgTrace, Recourse, Scenario, TwoStageProblem};
use crate::sampling::SampleSet;
use crate::solver::{
    LinearProgram, MixedIntegerProgram, ObjectiveSense, Sense, Solution, Status, VarId,
};

/// Weight of the secondary objective `-sum (u - l)`.
pub const TIE_BREAK_WEIGHT: f64 = 1e-6;

/// Samples whose realized output is within this distance of a limit count as covered.
pub const COVER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Formulation {
    /// Big-M indicator rows.
    BigM,
    /// Sorted-sample extended formulation with budget `K`.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedIndexSequences {
    /// Per unit: samples ordered by realized output, largest first.
    pub gamma: Vec<Vec<usize>>,
    /// Per unit: samples ordered by headroom `W^max - realized`, largest first.
    pub phi: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KBudget {
    pub k: usize,
    pub k_max: usize,
}

impl KBudget {
    pub fn new(k: usize, k_max: usize) -> Result<Self> {
        if k > k_max {
            return Err(Error::KOutOfRange { k, max: k_max });
        }
        Ok(Self { k, k_max })
    }

    /// `ceil(0.2 |S|)`.
    pub fn initial(k_max: usize) -> Self {
        Self {
            k: k_max.div_ceil(5),
            k_max,
        }
    }

    pub fn escalate(self) -> Self {
        Self {
            k: (self.k * 2).max(1).min(self.k_max),
            k_max: self.k_max,
        }
    }
}

/// Variable layout of a DNE master.
#[derive(Debug, Clone)]
pub struct DneLayout {
    pub base: BaseCase,
    pub lower: Vec<VarId>,
    pub upper: Vec<VarId>,
    pub z: Vec<VarId>,
    /// Per unit, `alpha_j^(1..K)` (extended formulation only).
    pub alpha: Vec<Vec<VarId>>,
    pub beta: Vec<Vec<VarId>>,
    pub sequences: Option<SortedIndexSequences>,
    /// Realized outputs per sample and unit.
    pub realized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DneProblem {
    pub problem: TwoStageProblem,
    pub layout: DneLayout,
}

#[derive(Debug, Clone, Serialize)]
pub struct DneDecision {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub base_vrg: Vec<f64>,
    pub base_obp: Vec<f64>,
    pub indicators: Vec<u8>,
    pub coverage_count: usize,
    pub k_used: usize,
    pub ccg_iterations: usize,
    #[serde(skip)]
    pub trace: CcgTrace,
    #[serde(skip)]
    pub master_objective: f64,
    /// Scenario blocks in the final master.
    #[serde(skip)]
    pub scenarios: Vec<Scenario>,
}

impl DneDecision {
    /// JSON record `{lower, upper, base_obp, base_vrg, coverage_count, k_used, ccg_iterations}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lower": self.lower,
            "upper": self.upper,
            "base_obp": self.base_obp,
            "base_vrg": self.base_vrg,
            "coverage_count": self.coverage_count,
            "k_used": self.k_used,
            "ccg_iterations": self.ccg_iterations,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DneConfig {
    pub epsilon: f64,
    pub max_ccg_iter: usize,
    pub gap_tol: f64,
    pub formulation: Formulation,
    /// Starting budget; `None` uses `ceil(0.2 |S|)`.
    pub initial_k: Option<usize>,
    pub use_heuristic: bool,
    /// Certify each master with vertex enumeration instead of the dual MILP.
    pub enumerate_subproblem: bool,
}

impl Default for DneConfig {
    fn default() -> Self {
        Self {
            epsilon: crate::robust::DEFAULT_EPSILON,
            max_ccg_iter: 64,
            gap_tol: 1e-9,
            formulation: Formulation::Extended,
            initial_k: None,
            use_heuristic: true,
            enumerate_subproblem: false,
        }
    }
}

/// Per-unit orderings with ties broken by the smaller sample index.
pub fn sort_sequences(
    samples: &SampleSet,
    forecast: &[f64],
    capacities: &[f64],
) -> SortedIndexSequences {
    let n = forecast.len();
    let mut gamma = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for j in 0..n {
        let r: Vec<f64> = samples.errors.iter().map(|e| forecast[j] + e[j]).collect();
        let mut g: Vec<usize> = (0..r.len()).collect();
        g.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
        let head: Vec<f64> = r.iter().map(|x| capacities[j] - x).collect();
        let mut p: Vec<usize> = (0..r.len()).collect();
        p.sort_by(|&a, &b| head[b].total_cmp(&head[a]).then(a.cmp(&b)));
        gamma.push(g);
        phi.push(p);
    }
    SortedIndexSequences { gamma, phi }
}

fn realized_outputs(
    system: &PowerSystem,
    samples: &SampleSet,
    forecast: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::invariant("DNE sample set", "no samples"));
    }
    let n = system.vrgs.len();
    samples
        .errors
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if e.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: e.len(),
                    context: format!("error vector of sample {k}"),
                });
            }
            Ok((0..n).map(|j| forecast[j] + e[j]).collect())
        })
        .collect()
}

/// Shared part of both formulations: base case, limits, indicators and the
/// recourse template.
fn build_common(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    samples: &SampleSet,
    forecast: &[f64],
) -> Result<(MixedIntegerProgram, DneLayout, Recourse)> {
    let realized = realized_outputs(system, samples, forecast)?;
    let mut mip = MixedIntegerProgram::new(LinearProgram::new(ObjectiveSense::Minimize));
    let base = add_base_case(&mut mip.lp, system, sf, forecast)?;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for v in &system.vrgs {
        let l = mip.lp.add_var(format!("l_{}", v.id), 0.0, v.capacity);
        let u = mip.lp.add_var(format!("u_{}", v.id), 0.0, v.capacity);
        mip.lp.add_constraint(
            format!("order_{}", v.id),
            vec![(l, 1.0), (u, -1.0)],
            Sense::Le,
            0.0,
        );
        mip.lp.set_objective(l, TIE_BREAK_WEIGHT);
        mip.lp.set_objective(u, -TIE_BREAK_WEIGHT);
        lower.push(l);
        upper.push(u);
    }
    let z: Vec<VarId> = (0..samples.len())
        .map(|k| {
            let z = mip.add_binary(format!("z_{k}"));
            mip.lp.set_objective(z, 1.0);
            z
        })
        .collect();
    let pb: Vec<Term> = base.pb.iter().map(|&v| Term::Var(v)).collect();
    let lt: Vec<Term> = lower.iter().map(|&v| Term::Var(v)).collect();
    let ut: Vec<Term> = upper.iter().map(|&v| Term::Var(v)).collect();
    let recourse = corrective_recourse(system, sf, &pb, &lt, &ut);
    let layout = DneLayout {
        base,
        lower,
        upper,
        z,
        alpha: Vec::new(),
        beta: Vec::new(),
        sequences: None,
        realized,
    };
    Ok((mip, layout, recourse))
}

/// Big-M model: `(W^max - r) z - l >= -r` and `r z + u >= r` per sample and unit.
pub fn build_dne2(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    samples: &SampleSet,
    forecast: &[f64],
) -> Result<DneProblem> {
    let (mut mip, layout, recourse) = build_common(system, sf, samples, forecast)?;
    for (k, r) in layout.realized.iter().enumerate() {
        for (j, v) in system.vrgs.iter().enumerate() {
            let m_lo = v.capacity - r[j];
            let m_up = r[j];
            if let Some(&value) = [m_lo, m_up].iter().find(|m| **m < -1e-9) {
                return Err(Error::NegativeBigM {
                    sample: k,
                    unit: j,
                    value,
                });
            }
            mip.lp.add_constraint(
                format!("cov_lo_{}_{k}", v.id),
                vec![(layout.z[k], m_lo.max(0.0)), (layout.lower[j], -1.0)],
                Sense::Ge,
                -r[j],
            );
            mip.lp.add_constraint(
                format!("cov_up_{}_{k}", v.id),
                vec![(layout.z[k], m_up.max(0.0)), (layout.upper[j], 1.0)],
                Sense::Ge,
                r[j],
            );
        }
    }
    Ok(DneProblem {
        problem: TwoStageProblem {
            first_stage: mip,
            recourse,
        },
        layout,
    })
}

/// Extended formulation with per-unit sorted sequences and budget `K`.
///
/// With `alpha_j^(1..t) = 1` the row for `l_j` reads `l_j <= r_(phi_(t+1))`,
/// i.e. the `t` lowest samples are excluded. Past the last sample the
/// telescope ends at `W^max` (for `l`) and `0` (for `u`), so excluding every
/// sample leaves the limits unconstrained.
pub fn build_dne3(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    samples: &SampleSet,
    forecast: &[f64],
    budget: KBudget,
) -> Result<DneProblem> {
    if budget.k_max != samples.len() || budget.k > budget.k_max {
        return Err(Error::KOutOfRange {
            k: budget.k,
            max: samples.len(),
        });
    }
    let (mut mip, mut layout, recourse) = build_common(system, sf, samples, forecast)?;
    let capacities = system.vrg_capacities();
    let seq = sort_sequences(samples, forecast, &capacities);
    let ns = samples.len();
    let k = budget.k;
    for (j, v) in system.vrgs.iter().enumerate() {
        let r = |s: usize| layout.realized[s][j];
        for s in 0..ns {
            let x = r(s);
            if x < -1e-9 || x > capacities[j] + 1e-9 {
                return Err(Error::NegativeBigM {
                    sample: s,
                    unit: j,
                    value: x.min(capacities[j] - x),
                });
            }
        }
        // lower side: phi orders by headroom, i.e. realized output ascending
        let phi = &seq.phi[j];
        let lo_at = |m: usize| if m < ns { r(phi[m]) } else { capacities[j] };
        let alpha: Vec<VarId> = (0..k)
            .map(|m| mip.add_binary(format!("alpha_{}_{m}", v.id)))
            .collect();
        let mut row: Vec<(VarId, f64)> = alpha
            .iter()
            .enumerate()
            .map(|(m, &a)| (a, lo_at(m + 1) - lo_at(m)))
            .collect();
        row.push((layout.lower[j], -1.0));
        mip.lp
            .add_constraint(format!("ext_lo_{}", v.id), row, Sense::Ge, -lo_at(0));
        // upper side: gamma orders realized output descending
        let gamma = &seq.gamma[j];
        let up_at = |m: usize| if m < ns { r(gamma[m]) } else { 0.0 };
        let beta: Vec<VarId> = (0..k)
            .map(|m| mip.add_binary(format!("beta_{}_{m}", v.id)))
            .collect();
        let mut row: Vec<(VarId, f64)> = beta
            .iter()
            .enumerate()
            .map(|(m, &b)| (b, up_at(m) - up_at(m + 1)))
            .collect();
        row.push((layout.upper[j], 1.0));
        mip.lp
            .add_constraint(format!("ext_up_{}", v.id), row, Sense::Ge, up_at(0));
        for m in 0..k {
            if m + 1 < k {
                mip.lp.add_constraint(
                    format!("chain_a_{}_{m}", v.id),
                    vec![(alpha[m], 1.0), (alpha[m + 1], -1.0)],
                    Sense::Ge,
                    0.0,
                );
                mip.lp.add_constraint(
                    format!("chain_b_{}_{m}", v.id),
                    vec![(beta[m], 1.0), (beta[m + 1], -1.0)],
                    Sense::Ge,
                    0.0,
                );
            }
            mip.lp.add_constraint(
                format!("link_a_{}_{m}", v.id),
                vec![(layout.z[phi[m]], 1.0), (alpha[m], -1.0)],
                Sense::Ge,
                0.0,
            );
            mip.lp.add_constraint(
                format!("link_b_{}_{m}", v.id),
                vec![(layout.z[gamma[m]], 1.0), (beta[m], -1.0)],
                Sense::Ge,
                0.0,
            );
        }
        layout.alpha.push(alpha);
        layout.beta.push(beta);
    }
    layout.sequences = Some(seq);
    Ok(DneProblem {
        problem: TwoStageProblem {
            first_stage: mip,
            recourse,
        },
        layout,
    })
}

/// Number of samples inside `[lower, upper]` componentwise.
pub fn count_covered(realized: &[Vec<f64>], lower: &[f64], upper: &[f64]) -> usize {
    realized
        .iter()
        .filter(|r| {
            r.iter()
                .zip(lower.iter().zip(upper))
                .all(|(&x, (&l, &u))| x >= l - COVER_TOL && x <= u + COVER_TOL)
        })
        .count()
}

impl DneLayout {
    /// Integer assignment implied by the limits in `point`: uncovered samples
    /// get `z = 1`, and the sequence binaries mark the excluded prefixes.
    pub fn round_from_limits(&self, point: &[f64]) -> Vec<f64> {
        let mut out = point.to_vec();
        let lower: Vec<f64> = self.lower.iter().map(|v| point[v.0]).collect();
        let upper: Vec<f64> = self.upper.iter().map(|v| point[v.0]).collect();
        for (k, r) in self.realized.iter().enumerate() {
            let inside = r
                .iter()
                .zip(lower.iter().zip(&upper))
                .all(|(&x, (&l, &u))| x >= l - COVER_TOL && x <= u + COVER_TOL);
            out[self.z[k].0] = if inside { 0.0 } else { 1.0 };
        }
        if let Some(seq) = &self.sequences {
            for j in 0..self.lower.len() {
                for (m, a) in self.alpha[j].iter().enumerate() {
                    let x = self.realized[seq.phi[j][m]][j];
                    out[a.0] = if x < lower[j] - COVER_TOL { 1.0 } else { 0.0 };
                }
                for (m, b) in self.beta[j].iter().enumerate() {
                    let x = self.realized[seq.gamma[j][m]][j];
                    out[b.0] = if x > upper[j] + COVER_TOL { 1.0 } else { 0.0 };
                }
            }
        }
        out
    }

    /// Branching priorities: sequence binaries before indicators.
    pub fn priority(&self, num_vars: usize) -> Vec<i32> {
        let mut p = vec![0; num_vars];
        for v in self.alpha.iter().chain(&self.beta).flatten() {
            p[v.0] = 1;
        }
        p
    }

    fn decision(
        &self,
        sol: &Solution,
        res_scenarios: Vec<Scenario>,
        trace: CcgTrace,
        k_used: usize,
    ) -> DneDecision {
        let val = |v: &VarId| sol.values[v.0];
        let lower: Vec<f64> = self.lower.iter().map(val).collect();
        let upper: Vec<f64> = self.upper.iter().map(val).collect();
        let indicators: Vec<u8> = self.z.iter().map(|z| (val(z) > 0.5) as u8).collect();
        let excluded: usize = indicators.iter().map(|&z| z as usize).sum();
        DneDecision {
            coverage_count: self.z.len() - excluded,
            base_vrg: self.base.w.iter().map(val).collect(),
            base_obp: self.base.pb.iter().map(val).collect(),
            lower,
            upper,
            indicators,
            k_used,
            ccg_iterations: trace.iterations.len(),
            master_objective: sol.objective,
            scenarios: res_scenarios,
            trace,
        }
    }
}

fn ccg_options<'a>(
    config: &DneConfig,
    scenarios: &[Scenario],
    heuristic: Option<&'a crate::solver::Heuristic<'a>>,
    priority: Option<Vec<i32>>,
    objective_limit: Option<f64>,
) -> CcgOptions<'a> {
    CcgOptions {
        epsilon: config.epsilon,
        max_iter: config.max_ccg_iter,
        gap_tol: config.gap_tol,
        initial_scenarios: scenarios.to_vec(),
        heuristic,
        priority,
        enumerate: config.enumerate_subproblem,
        objective_limit,
    }
}

/// Robust master solve of one formulation; `Ok(None)` when the master is
/// infeasible or its objective provably exceeds `limit`.
fn solve_once(
    dp: &DneProblem,
    config: &DneConfig,
    scenarios: &mut Vec<Scenario>,
    k_used: usize,
    limit: Option<f64>,
) -> Result<Option<DneDecision>> {
    let layout = &dp.layout;
    let heuristic = |point: &[f64]| Some(layout.round_from_limits(point));
    let h: Option<&crate::solver::Heuristic<'_>> = if config.use_heuristic {
        Some(&heuristic)
    } else {
        None
    };
    let priority = (config.formulation == Formulation::Extended)
        .then(|| layout.priority(dp.problem.first_stage.lp.num_vars()));
    match run_ccg(
        &dp.problem,
        &ccg_options(config, scenarios, h, priority, limit),
    ) {
        Ok(res) => {
            *scenarios = res.scenarios.clone();
            Ok(Some(layout.decision(
                &res.solution,
                res.scenarios,
                res.trace,
                k_used,
            )))
        }
        Err(Error::Solver {
            status: Status::Infeasible | Status::BoundExceeded,
            ..
        }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Solves the DNE problem. With the extended formulation, an infeasible
/// master or an optimum excluding more than `K` samples doubles `K` and
/// re-solves; scenario blocks found so far are kept.
pub fn solve_dne(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    samples: &SampleSet,
    forecast: &[f64],
    config: &DneConfig,
) -> Result<DneDecision> {
    let mut scenarios = Vec::new();
    if config.formulation == Formulation::BigM {
        let dp = build_dne2(system, sf, samples, forecast)?;
        return solve_once(&dp, config, &mut scenarios, samples.len(), None)?.ok_or_else(|| {
            Error::Infeasible("base-case dispatch admits no robust DNE limits".into())
        });
    }
    let ns = samples.len();
    let mut budget = match config.initial_k {
        Some(k) => KBudget::new(k, ns)?,
        None => KBudget::initial(ns),
    };
    loop {
        let dp = build_dne3(system, sf, samples, forecast, budget)?;
        // the objective is at least the number of excluded samples, so a
        // master bound past K + 1/2 already forces escalation
        let limit = (budget.k < ns).then_some(budget.k as f64 + 0.5);
        let outcome = solve_once(&dp, config, &mut scenarios, budget.k, limit)?;
        match outcome {
            Some(d) if ns - d.coverage_count <= budget.k || budget.k == ns => return Ok(d),
            None if budget.k == ns => return Err(Error::Infeasible(
                "base-case dispatch admits no robust DNE limits even with every sample excluded"
                    .into(),
            )),
            _ => budget = budget.escalate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_by_hand() {
        let s = SampleSet::from_errors(vec![5.0], vec![vec![0.2], vec![-0.1], vec![0.5]]);
        let seq = sort_sequences(&s, &[5.0], &[10.0]);
        assert_eq!(seq.gamma[0], vec![2, 0, 1]);
        assert_eq!(seq.phi[0], vec![1, 0, 2]);
        let t = SampleSet::from_errors(vec![5.0], vec![vec![0.3]; 4]);
        let seq = sort_sequences(&t, &[5.0], &[10.0]);
        assert_eq!(seq.gamma[0], vec![0, 1, 2, 3]);
        assert_eq!(seq.phi[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn budget_rules() {
        assert_eq!(KBudget::initial(100).k, 20);
        assert_eq!(KBudget::initial(3).k, 1);
        assert_eq!(KBudget::new(0, 3).unwrap().escalate().k, 1);
        assert_eq!(KBudget::new(2, 3).unwrap().escalate().k, 3);
        assert!(matches!(KBudget::new(4, 3), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn counting() {
        let r = vec![vec![1.0, 2.0], vec![3.0, 0.5]];
        assert_eq!(count_covered(&r, &[0.0, 0.0], &[2.0, 2.0]), 1);
        assert_eq!(count_covered(&r, &[0.0, 0.0], &[3.0, 2.0]), 2);
    }
}
