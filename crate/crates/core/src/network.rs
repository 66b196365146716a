//! Shared constraint builders: base-case dispatch rows, piecewise costs and
//! the corrective-dispatch recourse template.

use crate::error::{Error, Result};
use crate::model::{ConventionalUnit, PowerSystem, ShiftFactorMatrix};
use crate::robust::{AffineExpr, Recourse, RecourseRow, RecourseVar};
use crate::solver::{LinearProgram, Sense, VarId};

/// Coefficients below this magnitude are dropped from network rows.
const SF_EPS: f64 = 1e-12;

/// A quantity that is either a first-stage variable or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Var(VarId),
    Fixed(f64),
}

impl Term {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Term::Var(v) => x[v.0],
            Term::Fixed(c) => c,
        }
    }

    /// Adds `coeff * self` to `expr`.
    fn add_to(&self, expr: &mut AffineExpr, coeff: f64) {
        match *self {
            Term::Var(v) => expr.terms.push((v, coeff)),
            Term::Fixed(c) => expr.constant += coeff * c,
        }
    }
}

/// Variables of the base-case dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCase {
    pub pb: Vec<VarId>,
    pub w: Vec<VarId>,
}

/// Flow on each line caused by the loads alone (`sum_n SF[l][n] D_n`).
pub fn load_flows(system: &PowerSystem, sf: &ShiftFactorMatrix) -> Vec<f64> {
    (0..sf.num_lines())
        .map(|l| sf.apply(l, &system.loads))
        .collect()
}

pub fn check_forecast(system: &PowerSystem, forecast: &[f64]) -> Result<()> {
    if forecast.len() != system.vrgs.len() {
        return Err(Error::Dimension {
            expected: system.vrgs.len(),
            got: forecast.len(),
            context: "VRG forecast".into(),
        });
    }
    for (v, &f) in system.vrgs.iter().zip(forecast) {
        if !(f >= -1e-9 && f <= v.capacity + 1e-9) {
            return Err(Error::invariant(
                format!("forecast of {}", v.id),
                format!("{f} MW outside [0, {}]", v.capacity),
            ));
        }
    }
    Ok(())
}

/// Base-case rows: balance, both sides of every line limit, ramp-limited
/// output ranges and curtailable VRG output `0 <= w <= W^f`.
pub fn add_base_case(
    lp: &mut LinearProgram,
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    forecast: &[f64],
) -> Result<BaseCase> {
    check_forecast(system, forecast)?;
    let pb: Vec<VarId> = system
        .units
        .iter()
        .map(|u| {
            let (lo, hi) = u.base_bounds(u.p_current);
            lp.add_var(format!("pB_{}", u.id), lo, hi)
        })
        .collect();
    let w: Vec<VarId> = system
        .vrgs
        .iter()
        .zip(forecast)
        .map(|(v, &f)| lp.add_var(format!("w_{}", v.id), 0.0, f.clamp(0.0, v.capacity)))
        .collect();
    let mut bal: Vec<(VarId, f64)> = pb.iter().map(|&p| (p, 1.0)).collect();
    bal.extend(w.iter().map(|&x| (x, 1.0)));
    lp.add_constraint("balance", bal, Sense::Eq, system.total_load());
    let lf = load_flows(system, sf);
    for (l, line) in system.lines.iter().enumerate() {
        let mut coeffs = Vec::new();
        for (i, u) in system.units.iter().enumerate() {
            let a = sf.get(l, u.bus);
            if a.abs() > SF_EPS {
                coeffs.push((pb[i], a));
            }
        }
        for (j, v) in system.vrgs.iter().enumerate() {
            let a = sf.get(l, v.bus);
            if a.abs() > SF_EPS {
                coeffs.push((w[j], a));
            }
        }
        lp.add_constraint(
            format!("flow_up_{}", line.id),
            coeffs.clone(),
            Sense::Le,
            line.capacity + lf[l],
        );
        lp.add_constraint(
            format!("flow_dn_{}", line.id),
            coeffs,
            Sense::Ge,
            -line.capacity + lf[l],
        );
    }
    Ok(BaseCase { pb, w })
}

/// Adds `weight * C(p)` to the objective using one variable per cost segment.
/// Convexity makes the cheapest segments fill first, so the encoding is exact.
pub fn add_cost(lp: &mut LinearProgram, unit: &ConventionalUnit, p: VarId, weight: f64, tag: &str) {
    lp.objective_constant += weight * unit.cost.constant;
    let mut link = vec![(p, 1.0)];
    for (k, (len, mc)) in unit.cost.lengths().enumerate() {
        let d = lp.add_var(format!("seg_{}_{k}_{tag}", unit.id), 0.0, len);
        lp.set_objective(d, weight * mc);
        link.push((d, -1.0));
    }
    lp.add_constraint(
        format!("cost_{}_{tag}", unit.id),
        link,
        Sense::Eq,
        unit.cost.start,
    );
}

/// Recourse template for the corrective stage: one variable per CCU in
/// `[p_min, p_max]`, realized VRG output `l + v (u - l)`, balance, both line
/// sides and the `+-delta` adjustment band around the base point.
///
/// Row names start with `bal`, `line` or `adj`.
pub fn corrective_recourse(
    system: &PowerSystem,
    sf: &ShiftFactorMatrix,
    pb: &[Term],
    lower: &[Term],
    upper: &[Term],
) -> Recourse {
    let ccus: Vec<usize> = system.ccus().map(|(i, _)| i).collect();
    let vars = ccus
        .iter()
        .map(|&i| {
            let u = &system.units[i];
            RecourseVar {
                name: format!("pC_{}", u.id),
                lower: u.p_min,
                upper: u.p_max,
            }
        })
        .collect();
    // rhs of a row whose lhs is sum coeff_i * pC_i, moving every other
    // injection (weighted by `weight(bus)`) to the right-hand side
    let rhs_for =
        |weight: &dyn Fn(usize) -> f64, base: f64| -> (AffineExpr, Vec<(usize, AffineExpr)>) {
            let mut rhs = AffineExpr::constant(base);
            for (i, u) in system.nccus() {
                let a = weight(u.bus);
                if a.abs() > SF_EPS {
                    pb[i].add_to(&mut rhs, -a);
                }
            }
            let mut rhs_v = Vec::new();
            for (j, v) in system.vrgs.iter().enumerate() {
                let a = weight(v.bus);
                if a.abs() <= SF_EPS {
                    continue;
                }
                lower[j].add_to(&mut rhs, -a);
                let mut width = AffineExpr::default();
                upper[j].add_to(&mut width, -a);
                lower[j].add_to(&mut width, a);
                if !width.is_zero() {
                    rhs_v.push((j, width));
                }
            }
            (rhs, rhs_v)
        };
    let mut rows = Vec::new();
    let (rhs, rhs_v) = rhs_for(&|_| 1.0, system.total_load());
    rows.push(RecourseRow {
        name: "bal".into(),
        y: (0..ccus.len()).map(|k| (k, 1.0)).collect(),
        sense: Sense::Eq,
        rhs,
        rhs_v,
    });
    let lf = load_flows(system, sf);
    for (l, line) in system.lines.iter().enumerate() {
        let y: Vec<(usize, f64)> = ccus
            .iter()
            .enumerate()
            .map(|(k, &i)| (k, sf.get(l, system.units[i].bus)))
            .filter(|(_, a)| a.abs() > SF_EPS)
            .collect();
        for (sense, cap, side) in [
            (Sense::Le, line.capacity, "up"),
            (Sense::Ge, -line.capacity, "dn"),
        ] {
            let (rhs, rhs_v) = rhs_for(&|bus| sf.get(l, bus), cap + lf[l]);
            rows.push(RecourseRow {
                name: format!("line_{side}_{}", line.id),
                y: y.clone(),
                sense,
                rhs,
                rhs_v,
            });
        }
    }
    for (k, &i) in ccus.iter().enumerate() {
        let u = &system.units[i];
        for (sense, off, side) in [(Sense::Le, u.delta, "up"), (Sense::Ge, -u.delta, "dn")] {
            let mut rhs = AffineExpr::constant(off);
            pb[i].add_to(&mut rhs, 1.0);
            rows.push(RecourseRow {
                name: format!("adj_{side}_{}", u.id),
                y: vec![(k, 1.0)],
                sense,
                rhs,
                rhs_v: Vec::new(),
            });
        }
    }
    Recourse {
        dim: system.vrgs.len(),
        vars,
        rows,
    }
}

/// Scenario coordinates of a realized VRG vector inside `[lower, upper]`
/// (values are clamped into the box first).
pub fn scenario_of(realized: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    realized
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&r, (&l, &u))| {
            if u - l <= 0.0 {
                0.0
            } else {
                ((r.clamp(l, u) - l) / (u - l)).clamp(0.0, 1.0)
            }
        })
        .collect()
}
