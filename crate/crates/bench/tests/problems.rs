use cpbo_bench::problem::{RefMatch, REFMATCH_DIMS, REFMATCH_LAMBDA_SAMPLES};
use cpbo_bench::{gardner2d, hartmann6c, refmatch6, ProblemKind};
use proptest::prelude::*;

#[test]
fn published_constants() {
    let g = gardner2d();
    assert_eq!((g.f_opt, g.f_min, g.lambda), (1.88875, -2.0, 0.5));
    assert_eq!((g.lower.clone(), g.upper.clone()), (vec![0.0; 2], vec![6.0; 2]));
    let h = hartmann6c();
    assert_eq!((h.f_opt, h.f_min, h.lambda), (3.32237, 0.0, -1.0));
    assert_eq!(h.dims, 6);
}

#[test]
fn gardner_optimum_is_feasible_and_tight() {
    // dense scan of the native box
    let g = gardner2d();
    let n = 1200;
    let mut best = f64::NEG_INFINITY;
    for a in 0..=n {
        for b in 0..=n {
            let x = [6.0 * a as f64 / n as f64, 6.0 * b as f64 / n as f64];
            if g.is_feasible(&x) {
                best = best.max(g.objective(&x));
            }
        }
    }
    assert!(best <= g.f_opt + 1e-4, "{best}");
    assert!(best >= g.f_opt - 2e-3, "{best}");
}

#[test]
fn hartmann_optimum_value() {
    let h = hartmann6c();
    let xstar = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
    assert!((h.objective(&xstar) - h.f_opt).abs() < 1e-5);
    assert!(h.is_feasible(&xstar));
}

#[test]
fn refmatch_threshold_is_the_sample_mean() {
    for seed in [0, 7, 123] {
        let rm = RefMatch::new(seed);
        assert_eq!(rm.lambda_sample.len(), REFMATCH_LAMBDA_SAMPLES);
        let mut sum = 0.0;
        for x in &rm.lambda_sample {
            // bumps recomputed by hand
            let mut c = 0.0;
            for k in 0..3 {
                let d2: f64 = (0..REFMATCH_DIMS).map(|i| (x[i] - rm.centers[k][i]).powi(2)).sum();
                c += rm.heights[k] * (-d2 / (2.0 * rm.scales[k] * rm.scales[k])).exp();
            }
            sum += c;
        }
        let lambda = sum / REFMATCH_LAMBDA_SAMPLES as f64;
        assert!((lambda - rm.lambda).abs() <= 1e-12 * lambda.abs().max(1.0));
        assert!(rm.constraint(&rm.reference) >= rm.lambda);
        let far: f64 = rm.reference.iter().map(|r| r.max(1.0 - r)).sum();
        assert_eq!(rm.max_gap, far);
        let p = refmatch6(seed);
        assert_eq!((p.f_opt, p.f_min, p.lambda), (0.0, -far, rm.lambda));
    }
}

#[test]
fn refmatch_is_seeded() {
    assert_eq!(RefMatch::new(3), RefMatch::new(3));
    assert_ne!(RefMatch::new(3).reference, RefMatch::new(4).reference);
}

#[test]
fn problem_names_parse() {
    for (s, k) in [
        ("gardner2d", ProblemKind::Gardner2d),
        ("hartmann6", ProblemKind::Hartmann6),
        ("refmatch6", ProblemKind::RefMatch6),
    ] {
        assert_eq!(s.parse::<ProblemKind>().unwrap(), k);
    }
    assert!("branin".parse::<ProblemKind>().is_err());
    assert_eq!(ProblemKind::RefMatch6.default_warm_points(), 1000);
    assert_eq!(ProblemKind::Gardner2d.default_warm_points(), 200);
}

proptest! {
    #[test]
    fn unit_mapping_round_trips(u in prop::collection::vec(0.0f64..=1.0, 2)) {
        let g = gardner2d();
        let back = g.to_unit(&g.to_native(&u));
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let x = g.to_native(&u);
        prop_assert!(x.iter().all(|v| (0.0..=6.0).contains(v)));
    }

    #[test]
    fn refmatch_objective_within_bounds(u in prop::collection::vec(0.0f64..=1.0, 6), seed in 0u64..50) {
        let p = refmatch6(seed);
        let f = p.objective(&u);
        prop_assert!(f <= p.f_opt && f >= p.f_min - 1e-12);
    }
}
