mod common;

use dispatch_core::baseline::solve_ed;
use dispatch_core::model::{compute_shift_factors, parse_case, PowerSystem};
use dispatch_core::obp::{corrective_cost, solve_obp, ObpConfig, PenaltyMode};
use dispatch_core::sampling::SampleSet;
use serde_json::json;

const SIX_BUS: &str = include_str!("../../../cases/six_bus.json");

/// One bus: an expensive CCU with a 10 MW corrective band, a cheap NCCU,
/// a 40 MW wind unit and 100 MW of load.
fn two_unit_bus() -> PowerSystem {
    common::system(json!({
        "buses": ["1"],
        "slack_bus": "1",
        "lines": [],
        "units": [
            {"id": "C", "bus": "1", "class": "CCU", "p_min": 0, "p_max": 100,
             "ramp": 100, "delta": 10, "p_current": 50,
             "cost": {"constant": 0, "segments": [[100, 20]]}},
            {"id": "N", "bus": "1", "class": "NCCU", "p_min": 0, "p_max": 100,
             "ramp": 100, "delta": 0, "p_current": 50,
             "cost": {"constant": 0, "segments": [[100, 10]]}}
        ],
        "vrg": [{"id": "W", "bus": "1", "capacity": 40}],
        "loads": {"1": 100}
    }))
}

/// Average strict-mode corrective cost over `realized`, or `None` when the
/// base point is not robust over `[lower, upper]` or a sample is infeasible.
fn grid_cost(
    system: &PowerSystem,
    pb: &[f64],
    lower: f64,
    upper: f64,
    realized: &[f64],
) -> Option<f64> {
    let sf = compute_shift_factors(system).unwrap();
    for w in [lower, upper] {
        corrective_cost(system, &sf, pb, &[w], PenaltyMode::Strict).ok()?;
    }
    let mut total = 0.0;
    for &w in realized {
        total += corrective_cost(system, &sf, pb, &[w], PenaltyMode::Strict)
            .ok()?
            .cost;
    }
    Some(total / realized.len() as f64)
}

#[test]
fn grid_search_agrees_with_solver() {
    let s = two_unit_bus();
    let sf = compute_shift_factors(&s).unwrap();
    let samples = SampleSet::from_errors(vec![20.0], vec![vec![-5.0], vec![5.0]]);
    let d = solve_obp(
        &s,
        &sf,
        &samples,
        &[20.0],
        &[10.0],
        &[30.0],
        &ObpConfig::default(),
    )
    .unwrap();
    // the band forces p_C = 80 - p_N; the cheap unit tops out where the
    // 30 MW wind vertex drives the CCU to zero
    assert!((d.base_obp[1] - 70.0).abs() < 1e-6, "{:?}", d.base_obp);
    assert!((d.expected_cost - 900.0).abs() < 1e-6);
    let mut best = f64::INFINITY;
    for c in 0..=100 {
        for n in 0..=100 {
            if let Some(v) = grid_cost(&s, &[c as f64, n as f64], 10.0, 30.0, &[15.0, 25.0]) {
                best = best.min(v);
            }
        }
    }
    assert!(
        (best - d.expected_cost).abs() < 1e-6,
        "grid {best} vs {}",
        d.expected_cost
    );
}

#[test]
fn returned_base_points_are_robust() {
    // corrective feasibility is convex in the realization, so the box
    // vertices certify the whole box
    let s = parse_case(SIX_BUS).unwrap();
    let sf = compute_shift_factors(&s).unwrap();
    let forecast = [40.0, 60.0];
    let samples = SampleSet::from_errors(
        forecast.to_vec(),
        vec![
            vec![-6.0, 4.0],
            vec![3.0, -8.0],
            vec![5.0, 5.0],
            vec![-2.0, -3.0],
        ],
    );
    let (lower, upper) = ([32.0, 50.0], [46.0, 66.0]);
    let d = solve_obp(
        &s,
        &sf,
        &samples,
        &forecast,
        &lower,
        &upper,
        &ObpConfig::default(),
    )
    .unwrap();
    for a in [lower[0], upper[0]] {
        for b in [lower[1], upper[1]] {
            corrective_cost(&s, &sf, &d.base_obp, &[a, b], PenaltyMode::Strict).unwrap();
        }
    }
    let mut avg = 0.0;
    for k in 0..samples.len() {
        let w: Vec<f64> = samples
            .realized(k)
            .iter()
            .zip(lower.iter().zip(&upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect();
        avg += corrective_cost(&s, &sf, &d.base_obp, &w, PenaltyMode::Strict)
            .unwrap()
            .cost;
    }
    avg /= samples.len() as f64;
    assert!(
        (avg - d.expected_cost).abs() < 1e-6 * avg,
        "{avg} vs {}",
        d.expected_cost
    );
}

#[test]
fn zero_width_limits_reduce_to_economic_dispatch() {
    let s = parse_case(SIX_BUS).unwrap();
    let sf = compute_shift_factors(&s).unwrap();
    let forecast = [45.0, 55.0];
    let ed = solve_ed(&s, &sf, &forecast).unwrap();
    let samples = SampleSet::from_errors(forecast.to_vec(), vec![vec![0.0, 0.0]]);
    let d = solve_obp(
        &s,
        &sf,
        &samples,
        &forecast,
        &forecast,
        &forecast,
        &ObpConfig::default(),
    )
    .unwrap();
    assert!((d.expected_cost - ed.total_cost).abs() < 1e-6 * ed.total_cost.abs().max(1.0));
}

#[test]
fn scaling_costs_scales_the_optimum_only() {
    let s = two_unit_bus();
    let mut scaled = s.clone();
    for u in &mut scaled.units {
        u.cost = u.cost.scaled(10.0);
    }
    let samples = SampleSet::from_errors(vec![20.0], vec![vec![-5.0], vec![2.0], vec![5.0]]);
    let solve = |sys: &PowerSystem| {
        let sf = compute_shift_factors(sys).unwrap();
        solve_obp(
            sys,
            &sf,
            &samples,
            &[20.0],
            &[10.0],
            &[30.0],
            &ObpConfig::default(),
        )
        .unwrap()
    };
    let a = solve(&s);
    let b = solve(&scaled);
    assert!((10.0 * a.expected_cost - b.expected_cost).abs() < 1e-6 * b.expected_cost);
    assert!((a.base_obp[1] - b.base_obp[1]).abs() < 1e-6);
}

#[test]
fn duplicating_a_sample_keeps_the_objective() {
    let s = two_unit_bus();
    let sf = compute_shift_factors(&s).unwrap();
    let once = SampleSet::from_errors(vec![20.0], vec![vec![-4.0], vec![4.0]]);
    let twice = SampleSet::from_errors(
        vec![20.0],
        vec![vec![-4.0], vec![-4.0], vec![4.0], vec![4.0]],
    );
    let a = solve_obp(
        &s,
        &sf,
        &once,
        &[20.0],
        &[10.0],
        &[30.0],
        &ObpConfig::default(),
    )
    .unwrap();
    let b = solve_obp(
        &s,
        &sf,
        &twice,
        &[20.0],
        &[10.0],
        &[30.0],
        &ObpConfig::default(),
    )
    .unwrap();
    assert!((a.expected_cost - b.expected_cost).abs() < 1e-6 * a.expected_cost);
}

#[test]
fn corrective_cost_matches_balance_on_the_replica() {
    // one CCU: balance alone fixes its output whenever the point is feasible
    let s = parse_case(SIX_BUS).unwrap();
    let sf = compute_shift_factors(&s).unwrap();
    let g2 = s.units.iter().position(|u| u.id == "G2").unwrap();
    let g1 = s.units.iter().position(|u| u.id == "G1").unwrap();
    let mut checked = 0;
    for pn in [80.0, 110.0, 140.0] {
        for w in [[20.0, 30.0], [50.0, 40.0], [70.0, 65.0]] {
            let pc = s.total_load() - pn - w[0] - w[1];
            let mut pb = vec![0.0; 2];
            pb[g1] = pn;
            pb[g2] = pc.clamp(20.0, 200.0);
            match corrective_cost(&s, &sf, &pb, &w, PenaltyMode::Strict) {
                Ok(c) => {
                    let expected = s.units[g1].cost.evaluate(pn) + s.units[g2].cost.evaluate(pc);
                    assert!((c.cost - expected).abs() < 1e-6, "{} vs {expected}", c.cost);
                    assert!((c.outputs[0] - pc).abs() < 1e-6);
                    checked += 1;
                }
                Err(_) => {
                    // infeasible only if a line limit binds at the forced output
                    let mut inj = vec![0.0; s.num_buses()];
                    inj[s.units[g1].bus] += pn;
                    inj[s.units[g2].bus] += pc;
                    for (v, x) in s.vrgs.iter().zip(w) {
                        inj[v.bus] += x;
                    }
                    for (b, l) in inj.iter_mut().zip(&s.loads) {
                        *b -= l;
                    }
                    let flows = dispatch_core::model::line_flows(&sf, &inj).unwrap();
                    assert!(
                        flows
                            .iter()
                            .zip(&s.lines)
                            .any(|(f, l)| f.abs() > l.capacity - 1e-6)
                            || !(20.0..=200.0).contains(&pc)
                    );
                }
            }
        }
    }
    assert!(checked >= 3);
}

#[test]
fn realized_equal_to_base_needs_no_correction() {
    let s = two_unit_bus();
    let sf = compute_shift_factors(&s).unwrap();
    let c = corrective_cost(&s, &sf, &[60.0, 20.0], &[20.0], PenaltyMode::Strict).unwrap();
    assert!((c.outputs[0] - 60.0).abs() < 1e-9);
    assert!((c.cost - (60.0 * 20.0 + 20.0 * 10.0)).abs() < 1e-9);
}
