//! Random LP and MILP instances.

use dispatch_core::solver::{LinearProgram, MixedIntegerProgram, ObjectiveSense, Sense, VarId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Feasible by construction: every row holds at a random interior point.
pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(if rng.random_bool(0.5) {
        ObjectiveSense::Maximize
    } else {
        ObjectiveSense::Minimize
    });
    let xs: Vec<VarId> = (0..n)
        .map(|j| lp.add_var(format!("x{j}"), 0.0, f64::INFINITY))
        .collect();
    // a known interior point keeps every instance feasible
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    for i in 0..m - 1 {
        let coeffs: Vec<(VarId, f64)> = xs
            .iter()
            .map(|&x| (x, rng.random_range(-1.0..3.0)))
            .collect();
        let at: f64 = coeffs.iter().map(|(x, a)| a * x0[x.0]).sum();
        if i % 3 == 2 {
            lp.add_constraint(
                format!("g{i}"),
                coeffs,
                Sense::Ge,
                at - rng.random_range(0.1..2.0),
            );
        } else {
            lp.add_constraint(
                format!("l{i}"),
                coeffs,
                Sense::Le,
                at + rng.random_range(0.1..2.0),
            );
        }
    }
    let total: f64 = x0.iter().sum();
    lp.add_constraint(
        "box",
        xs.iter().map(|&x| (x, 1.0)).collect(),
        Sense::Le,
        total + 5.0,
    );
    for &x in &xs {
        lp.set_objective(x, rng.random_range(-2.0..2.0));
    }
    lp
}

/// Up to 12 binaries and 3 bounded continuous columns with integer data.
pub fn random_milp(rng: &mut ChaCha8Rng) -> MixedIntegerProgram {
    let nb = rng.random_range(1..=12);
    let nc = rng.random_range(0..4);
    let mut mip = MixedIntegerProgram::new(LinearProgram::new(if rng.random_bool(0.5) {
        ObjectiveSense::Maximize
    } else {
        ObjectiveSense::Minimize
    }));
    let mut vars = Vec::new();
    for j in 0..nb {
        vars.push(mip.add_binary(format!("b{j}")));
    }
    for j in 0..nc {
        vars.push(
            mip.lp
                .add_var(format!("c{j}"), 0.0, rng.random_range(1.0..5.0)),
        );
    }
    let rows = rng.random_range(1..6);
    for i in 0..rows {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.7) {
                coeffs.push((v, rng.random_range(-3i32..6) as f64));
            }
        }
        let rhs = rng.random_range(0i32..10) as f64;
        let sense = if rng.random_bool(0.75) {
            Sense::Le
        } else {
            Sense::Ge
        };
        mip.lp.add_constraint(format!("r{i}"), coeffs, sense, rhs);
    }
    for &v in &vars {
        mip.lp.set_objective(v, rng.random_range(-5i32..6) as f64);
    }
    mip
}
