use nalgebra::Vector3;
use proptest::prelude::*;

use robicp::evaluation::aggregate_median;
use robicp::icp::StopReason;
use robicp::robust::{
    cost, hard_weights_trimmed, influence, var_trimmed_weights, weight, FilterKind,
};
use robicp::{
    apply_filter, transform_error, BenchmarkRecord, FilterSpec, KdTree, Match, MatchSet,
    RigidTransform, ScaleSpec, ScaleState,
};

fn with_cost() -> impl Strategy<Value = FilterKind> {
    prop::sample::select(
        FilterKind::ALL
            .into_iter()
            .filter(|k| k.has_cost())
            .collect::<Vec<_>>(),
    )
}

fn m_estimator() -> impl Strategy<Value = FilterKind> {
    prop::sample::select(FilterKind::M_ESTIMATORS.to_vec())
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (
        prop::array::uniform3(-1.0f64..1.0),
        0.0f64..3.0,
        prop::array::uniform3(-5.0f64..5.0),
    )
        .prop_filter("axis", |(a, _, _)| Vector3::from(*a).norm() > 1e-3)
        .prop_map(|(a, angle, t)| {
            RigidTransform::from_axis_angle(&Vector3::from(a), angle, Vector3::from(t))
        })
}

fn matches_from(distances: &[f64]) -> MatchSet {
    MatchSet {
        entries: distances
            .iter()
            .enumerate()
            .map(|(i, &d)| Match {
                reading: i,
                reference: i,
                distance: d,
            })
            .collect(),
        knn: 1,
    }
}

proptest! {
    #[test]
    fn costs_are_symmetric_nonnegative_and_nondecreasing(kind in with_cost(), k in 0.01f64..50.0) {
        let mut prev = 0.0;
        for i in 0..100 {
            let e = 100.0 * k * i as f64 / 99.0;
            let c = cost(kind, e, k).unwrap();
            prop_assert_eq!(c, cost(kind, -e, k).unwrap());
            prop_assert!(c >= 0.0);
            prop_assert!(c >= prev - 1e-12 * c.abs());
            prev = c;
        }
    }

    #[test]
    fn weight_times_error_is_influence(kind in with_cost(), k in 0.01f64..50.0) {
        for i in 0..20 {
            let e = k * 10f64.powf(-3.0 + 6.0 * i as f64 / 19.0);
            let psi = influence(kind, e, k).unwrap();
            let we = weight(kind, e, k).unwrap() * e;
            prop_assert!((we - psi).abs() <= 1e-10 * psi.abs().max(1.0), "{kind} e={e}");
        }
    }

    #[test]
    fn influence_matches_cost_derivative(kind in m_estimator(), k in 0.05f64..20.0, r in 0.05f64..20.0) {
        let e = r * k;
        prop_assume!((e - k).abs() > 1e-3 * k && (e * e - k).abs() > 1e-3 * k);
        let h = 1e-6 * e;
        let fd = (cost(kind, e + h, k).unwrap() - cost(kind, e - h, k).unwrap()) / (2.0 * h);
        let psi = influence(kind, e, k).unwrap();
        prop_assert!((fd - psi).abs() <= 1e-4 * psi.abs().max(1e-6), "{kind}: fd {fd} psi {psi}");
    }

    #[test]
    fn trimming_ignores_scale(raw in prop::collection::vec(0u16..5000, 1..200), f in 0.01f64..1.0, c in 0.01f64..100.0) {
        let e: Vec<f64> = raw.iter().map(|&i| i as f64 * 1e-3).collect();
        let scaled: Vec<f64> = e.iter().map(|x| x * c).collect();
        prop_assert_eq!(hard_weights_trimmed(&e, f), hard_weights_trimmed(&scaled, f));
        prop_assert_eq!(hard_weights_trimmed(&e, 0.5), hard_weights_trimmed(&scaled, 0.5));
    }

    #[test]
    fn variable_trim_ignores_scale(raw in prop::collection::vec(0u16..5000, 1..200), p in -10i32..10, lambda in 0.8f64..5.0) {
        let e: Vec<f64> = raw.iter().map(|&i| i as f64 * 1e-3).collect();
        let c = 2f64.powi(p);
        let scaled: Vec<f64> = e.iter().map(|x| x * c).collect();
        prop_assert_eq!(
            var_trimmed_weights(&e, 0.4, 1.0, lambda),
            var_trimmed_weights(&scaled, 0.4, 1.0, lambda)
        );
    }

    #[test]
    fn ranking_filters_ignore_fixed_scale(raw in prop::collection::vec(0u16..5000, 1..100), s in 0.01f64..100.0) {
        let d: Vec<f64> = raw.iter().map(|&i| i as f64 * 1e-3).collect();
        let m = matches_from(&d);
        for spec in [FilterSpec::trimmed(0.7), FilterSpec::median()] {
            let a = apply_filter(&spec, &m, ScaleState::new(&ScaleSpec::Fixed(1.0))).unwrap();
            let scaled = FilterSpec { scale: ScaleSpec::Fixed(s), ..spec };
            let b = apply_filter(&scaled, &m, ScaleState::new(&scaled.scale)).unwrap();
            prop_assert_eq!(a.weights, b.weights);
        }
    }

    #[test]
    fn knn_matches_brute_force(
        pts in prop::collection::vec(prop::array::uniform3(-10.0f64..10.0), 1..300),
        q in prop::array::uniform3(-12.0f64..12.0),
        k in 1usize..8,
    ) {
        let points: Vec<Vector3<f64>> = pts.iter().map(|p| Vector3::from(*p)).collect();
        let tree = KdTree::from_points(&points).unwrap();
        let q = Vector3::from(q);
        let k = k.min(points.len());
        let mut brute: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - q).norm_squared(), i))
            .collect();
        brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let got: Vec<usize> = tree.nearest(&q, k).into_iter().map(|(i, _)| i).collect();
        let want: Vec<usize> = brute[..k].iter().map(|(_, i)| *i).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn transform_error_is_left_invariant(g in transform(), gt in transform(), est in transform()) {
        let (t0, r0) = transform_error(&gt, &est);
        let (t1, r1) = transform_error(&g.compose(&gt), &g.compose(&est));
        prop_assert!((t0 - t1).abs() < 1e-10);
        prop_assert!((r0 - r1).abs() < 1e-10);
    }

    #[test]
    fn compose_inverse_is_identity(a in transform(), p in prop::array::uniform3(-5.0f64..5.0)) {
        let p = Vector3::from(p);
        let back = a.inverse().compose(&a).apply(&p);
        prop_assert!((back - p).norm() < 1e-12);
        let id = a.compose(&a.inverse());
        prop_assert!(id.translation_norm() < 1e-12 && id.rotation_angle() < 1e-7);
    }

    #[test]
    fn aggregation_is_permutation_invariant(
        errs in prop::collection::vec((0usize..3, 0usize..4, 0.0f64..1.0), 1..60),
        seed in any::<u64>(),
    ) {
        let names = ["l1", "cauchy", "tukey"];
        let records: Vec<BenchmarkRecord> = errs
            .iter()
            .enumerate()
            .map(|(i, (f, p, e))| BenchmarkRecord {
                pair_id: "p".into(),
                filter: names[*f].into(),
                param: (*f > 0).then_some(*p as f64),
                scale_mode: "none".into(),
                perturb_idx: i,
                trans_err_m: *e,
                rot_err_rad: e / 3.0,
                iters: 1,
                stop_reason: StopReason::Converged,
            })
            .collect();
        let mut shuffled = records.clone();
        let n = shuffled.len();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(aggregate_median(&records), aggregate_median(&shuffled));
    }
}

#[test]
fn redescending_influence() {
    for kind in [
        FilterKind::Cauchy,
        FilterKind::GM,
        FilterKind::SC,
        FilterKind::Welsch,
        FilterKind::Tukey,
        FilterKind::Student,
    ] {
        for k in [0.01, 0.5, 3.0, 100.0] {
            let e = 1e6 * k;
            assert!(weight(kind, e, k).unwrap() * e < 1e-3, "{kind} k={k}");
        }
    }
}

#[test]
fn branch_continuity() {
    for k in [0.3, 1.0, 4.0] {
        for (kind, knee) in [
            (FilterKind::Huber, k),
            (FilterKind::SC, f64::sqrt(k)),
            (FilterKind::Tukey, k),
            (FilterKind::MaxDistance, k),
        ] {
            let below = cost(kind, knee * (1.0 - 1e-15), k).unwrap();
            let above = cost(kind, knee * (1.0 + 1e-15), k).unwrap();
            assert!((below - above).abs() < 1e-12, "{kind} k={k}");
        }
    }
}

#[test]
fn cauchy_mad_support_matches_recomputation() {
    let d: Vec<f64> = (0..200)
        .map(|i| if i % 4 == 0 { 2.0 + i as f64 * 0.01 } else { (i % 17) as f64 * 1e-3 })
        .collect();
    let spec: FilterSpec = "cauchy:k=0.8,scale=mad".parse().unwrap();
    let out = apply_filter(&spec, &matches_from(&d), ScaleState::new(&spec.scale)).unwrap();

    let mut sorted = d.clone();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[(sorted.len() - 1) / 2];
    let mut dev: Vec<f64> = d.iter().map(|x| (x - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let s = dev[(dev.len() - 1) / 2];
    assert_eq!(out.state.current_s, s);
    for (w, x) in out.weights.iter().zip(&d) {
        let want = 1.0 / (1.0 + (x / s / 0.8).powi(2));
        assert!((w - want).abs() <= 1e-15 * want.max(1.0));
        assert!(*w > 0.0);
    }
}
