use dispatch_core::dne::count_covered;
use dispatch_core::model::CostCurve;
use dispatch_core::sampling::{clip_errors, select_samples, HistoryRecord};
use proptest::prelude::*;

fn history(forecasts: Vec<(f64, f64)>) -> Vec<HistoryRecord> {
    forecasts
        .into_iter()
        .enumerate()
        .map(|(t, (a, b))| HistoryRecord {
            timestamp: t as i64,
            forecast: vec![a, b],
            error: vec![a / 10.0, -b / 10.0],
        })
        .collect()
}

proptest! {
    #[test]
    fn clipping_is_idempotent_and_bounded(
        e in prop::collection::vec(-80.0..80.0f64, 3),
        f in prop::collection::vec(0.0..50.0f64, 3),
    ) {
        let caps = [50.0, 50.0, 50.0];
        let once = clip_errors(&e, &f, &caps);
        let twice = clip_errors(&once, &f, &caps);
        for j in 0..3 {
            prop_assert!((once[j] - twice[j]).abs() < 1e-12);
            let r = f[j] + once[j];
            prop_assert!((-1e-12..=caps[j] + 1e-12).contains(&r));
        }
    }

    #[test]
    fn selection_is_sorted_and_sized(
        fs in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..60),
        up in (0.0..100.0f64, 0.0..100.0f64),
        n in 1usize..80,
    ) {
        let h = history(fs);
        let upcoming = [up.0, up.1];
        let s = select_samples(&h, &upcoming, n).unwrap();
        prop_assert_eq!(s.len(), n.min(h.len()));
        let d = |i: usize| -> f64 {
            h[i].forecast.iter().zip(&upcoming).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        for w in s.indices.windows(2) {
            prop_assert!(d(w[0]) <= d(w[1]));
        }
        // nothing left out is closer than the farthest record taken
        let far = d(*s.indices.last().unwrap());
        for i in 0..h.len() {
            if !s.indices.contains(&i) {
                prop_assert!(d(i) >= far);
            }
        }
    }

    #[test]
    fn widening_limits_never_loses_coverage(
        pts in prop::collection::vec(prop::collection::vec(0.0..40.0f64, 2), 1..30),
        l in prop::collection::vec(0.0..20.0f64, 2),
        w in prop::collection::vec(0.0..20.0f64, 2),
        grow in 0.0..5.0f64,
    ) {
        let u: Vec<f64> = l.iter().zip(&w).map(|(a, b)| a + b).collect();
        let l2: Vec<f64> = l.iter().map(|x| x - grow).collect();
        let u2: Vec<f64> = u.iter().map(|x| x + grow).collect();
        prop_assert!(count_covered(&pts, &l2, &u2) >= count_covered(&pts, &l, &u));
        prop_assert!(count_covered(&pts, &l, &u) <= pts.len());
    }

    #[test]
    fn convex_costs_evaluate_consistently(
        mcs in prop::collection::vec(1.0..40.0f64, 1..4),
        p in 0.0..1.0f64,
        q in 0.0..1.0f64,
        factor in 0.5..20.0f64,
    ) {
        let mut sorted = mcs.clone();
        sorted.sort_by(f64::total_cmp);
        let segments: Vec<(f64, f64)> = sorted.iter().enumerate().map(|(k, m)| (10.0 + 30.0 * (k + 1) as f64, *m)).collect();
        let top = segments.last().unwrap().0;
        let c = CostCurve::new(10.0, 5.0, segments);
        let (a, b) = (10.0 + p * (top - 10.0), 10.0 + q * (top - 10.0));
        // midpoint convexity
        let mid = c.evaluate((a + b) / 2.0);
        prop_assert!(mid <= (c.evaluate(a) + c.evaluate(b)) / 2.0 + 1e-9);
        prop_assert!((c.scaled(factor).evaluate(a) - factor * c.evaluate(a)).abs() < 1e-9 * (1.0 + factor * c.evaluate(a)));
        if a <= b {
            prop_assert!(c.evaluate(a) <= c.evaluate(b) + 1e-12);
        }
    }
}
