mod common;

use dispatch_core::baseline::solve_ed;
use dispatch_core::model::{compute_shift_factors, line_flows, parse_case, PowerSystem};
use nalgebra::{DMatrix, DVector};

const SIX_BUS: &str = include_str!("../../../cases/six_bus.json");
const TWENTY_BUS: &str = include_str!("../../../cases/twenty_bus.json");

/// Reduced susceptance matrix (slack row and column removed) and the
/// non-slack bus order it uses.
fn reduced_b(system: &PowerSystem) -> (DMatrix<f64>, Vec<usize>) {
    let n = system.num_buses();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for line in &system.lines {
        let y = 1.0 / line.reactance;
        b[(line.from, line.from)] += y;
        b[(line.to, line.to)] += y;
        b[(line.from, line.to)] -= y;
        b[(line.to, line.from)] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != system.slack).collect();
    let red = DMatrix::from_fn(keep.len(), keep.len(), |r, c| b[(keep[r], keep[c])]);
    (red, keep)
}

fn oracle_shift_factors(system: &PowerSystem) -> Vec<Vec<f64>> {
    let n = system.num_buses();
    let (red, keep) = reduced_b(system);
    let inv = red
        .try_inverse()
        .expect("connected network has a nonsingular reduced B");
    let mut x = DMatrix::<f64>::zeros(n, n);
    for (r, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            x[(i, j)] = inv[(r, c)];
        }
    }
    system
        .lines
        .iter()
        .map(|l| {
            (0..n)
                .map(|k| (x[(l.from, k)] - x[(l.to, k)]) / l.reactance)
                .collect()
        })
        .collect()
}

fn assert_sf_matches(system: &PowerSystem) {
    let sf = compute_shift_factors(system).unwrap();
    let oracle = oracle_shift_factors(system);
    for (l, row) in oracle.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            assert!(
                (sf.get(l, k) - v).abs() < 1e-9,
                "line {l} bus {k}: {} vs {v}",
                sf.get(l, k)
            );
        }
        assert_eq!(sf.get(l, system.slack), 0.0);
    }
}

#[test]
fn shift_factors_match_dense_inversion() {
    assert_sf_matches(&common::triangle(100.0, 10.0));
    assert_sf_matches(&parse_case(SIX_BUS).unwrap());
    assert_sf_matches(&parse_case(TWENTY_BUS).unwrap());
}

#[test]
fn equal_reactance_triangle_splits_two_to_one() {
    let s = common::triangle(100.0, 10.0);
    let sf = compute_shift_factors(&s).unwrap();
    // injection at bus 2 withdrawn at the slack: 2/3 on the direct line
    assert!((sf.get(0, 1) + 2.0 / 3.0).abs() < 1e-12);
    assert!((sf.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn flows_match_direct_angle_solve() {
    for system in [common::triangle(100.0, 10.0), parse_case(SIX_BUS).unwrap()] {
        let n = system.num_buses();
        let sf = compute_shift_factors(&system).unwrap();
        let mut p = vec![0.0; n];
        p[1] = 30.0;
        p[n - 1] = -30.0;
        let flows = line_flows(&sf, &p).unwrap();
        let (red, keep) = reduced_b(&system);
        let rhs = DVector::from_iterator(keep.len(), keep.iter().map(|&i| p[i]));
        let theta_red = red.lu().solve(&rhs).unwrap();
        let mut theta = vec![0.0; n];
        for (r, &i) in keep.iter().enumerate() {
            theta[i] = theta_red[r];
        }
        for (l, line) in system.lines.iter().enumerate() {
            let direct = (theta[line.from] - theta[line.to]) / line.reactance;
            assert!((flows[l] - direct).abs() < 1e-9);
        }
    }
}

#[test]
fn unbalanced_injections_are_rejected() {
    let s = common::triangle(100.0, 10.0);
    let sf = compute_shift_factors(&s).unwrap();
    assert!(line_flows(&sf, &[1.0, 0.0, 0.0]).is_err());
}

#[test]
fn lmps_match_finite_differences() {
    // the 1-2 line binds at moderate wind
    let s = parse_case(SIX_BUS).unwrap();
    let sf = compute_shift_factors(&s).unwrap();
    let forecast = [50.0, 50.0];
    let ed = solve_ed(&s, &sf, &forecast).unwrap();
    let spread = ed.lmp.iter().cloned().fold(f64::MIN, f64::max)
        - ed.lmp.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 1e-3, "expected congestion, LMPs {:?}", ed.lmp);
    for n in 0..s.num_buses() {
        let mut bumped = s.clone();
        bumped.loads[n] += 1.0;
        let again = solve_ed(&bumped, &sf, &forecast).unwrap();
        let delta = again.total_cost - ed.total_cost;
        assert!(
            (delta - ed.lmp[n]).abs() < 1e-4,
            "bus {n}: delta {delta} vs lmp {}",
            ed.lmp[n]
        );
    }
}

#[test]
fn uncongested_lmps_are_flat() {
    let mut s = parse_case(SIX_BUS).unwrap();
    for l in &mut s.lines {
        l.capacity = 1e4;
    }
    let sf = compute_shift_factors(&s).unwrap();
    let ed = solve_ed(&s, &sf, &[50.0, 50.0]).unwrap();
    let max = ed.lmp.iter().cloned().fold(f64::MIN, f64::max);
    let min = ed.lmp.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max - min <= 1e-6);
}
