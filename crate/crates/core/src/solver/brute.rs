//! Exhaustive enumeration oracle for small binary programs.

use super::simplex::{LpOptions, Simplex};
use super::{MixedIntegerProgram, ObjectiveSense, Solution, Status};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Exact optimum by solving the continuous LP for every binary assignment.
///
/// Assignments are visited in reflected Gray-code order so consecutive LPs
/// differ by one bound; ties keep the first assignment in that order.
pub fn brute_force_milp(mip: &MixedIntegerProgram) -> Result<Solution> {
    mip.validate()?;
    let ints: Vec<usize> = mip.integral.iter().map(|v| v.0).collect();
    if ints.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            size: ints.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let lp = &mip.lp;
    let sign = if lp.sense == ObjectiveSense::Maximize {
        -1.0
    } else {
        1.0
    };
    let mut sx = Simplex::new(lp, &LpOptions::default());
    let bounds: Vec<(f64, f64)> = ints
        .iter()
        .map(|&j| (lp.vars[j].lower, lp.vars[j].upper))
        .collect();
    let mut assign = vec![false; ints.len()];
    for &j in &ints {
        sx.set_bounds(j, 0.0, 0.0);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut saw_unbounded = false;
    let total: u64 = 1 << ints.len();
    for step in 0..total {
        if step > 0 {
            // flip the bit that changes between Gray codes step-1 and step
            let k = step.trailing_zeros() as usize;
            assign[k] = !assign[k];
            let x = if assign[k] { 1.0 } else { 0.0 };
            sx.set_bounds(ints[k], x, x);
        }
        let admissible = assign.iter().zip(&bounds).all(|(&a, &(lo, up))| {
            let x = if a { 1.0 } else { 0.0 };
            x >= lo - 1e-9 && x <= up + 1e-9
        });
        if !admissible {
            continue;
        }
        match sx.solve() {
            Status::Optimal => {
                let obj = sign * sx.objective();
                if best.as_ref().is_none_or(|(b, _)| obj < b - 1e-12) {
                    best = Some((obj, sx.primal_values()));
                }
            }
            Status::Unbounded => saw_unbounded = true,
            Status::Infeasible => {}
            other => {
                return Err(Error::Solver {
                    status: other,
                    context: "brute-force enumeration".into(),
                })
            }
        }
    }
    if saw_unbounded {
        return Ok(Solution::with_status(Status::Unbounded));
    }
    Ok(match best {
        Some((_, mut values)) => {
            for &j in &ints {
                values[j] = values[j].round();
            }
            Solution {
                status: Status::Optimal,
                objective: lp.evaluate(&values),
                values,
                duals: Vec::new(),
                bound_duals: Vec::new(),
            }
        }
        None => Solution::with_status(Status::Infeasible),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_lp, LinearProgram, Sense};

    #[test]
    fn single_binary_rounds_up() {
        let mut mip = MixedIntegerProgram::new(LinearProgram::default());
        let z = mip.add_binary("z");
        mip.lp.set_objective(z, 1.0);
        mip.lp
            .add_constraint("half", vec![(z, 1.0)], Sense::Ge, 0.5);
        let s = brute_force_milp(&mip).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.value(z), 1.0);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn no_binaries_is_plain_lp() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 0.0, 10.0);
        lp.set_objective(x, -2.0);
        lp.add_constraint("c", vec![(x, 1.0)], Sense::Le, 4.0);
        let mip = MixedIntegerProgram::new(lp.clone());
        let a = brute_force_milp(&mip).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_instances() {
        let mut mip = MixedIntegerProgram::new(LinearProgram::default());
        for i in 0..21 {
            mip.add_binary(format!("b{i}"));
        }
        assert!(matches!(
            brute_force_milp(&mip),
            Err(Error::TooLarge { .. })
        ));
    }
}
