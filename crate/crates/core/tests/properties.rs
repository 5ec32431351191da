use fastescape::builtins::{band_limited, const_field, vn_field, Wavy};
use fastescape::field::{numeric_curl, numeric_divergence, perpendicular};
use fastescape::flow::escape_length;
use fastescape::planner::{level_budget, plan_escape, PlanMode, PLAN_TOL};
use fastescape::report::{fmt_num, round_sig, to_json};
use fastescape::stream::compute_stream_function;
use fastescape::verify::verify_theorem3;
use fastescape::{Disk, Point2};
use proptest::prelude::*;

fn point_in(r: f64) -> impl Strategy<Value = Point2> {
    (-r..r, -r..r).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #[test]
    fn quarter_turn_is_orthogonal_and_isometric(u in -1e6..1e6f64, v in -1e6..1e6f64, p in point_in(10.0)) {
        let f = const_field(u, v);
        let (a, b) = (f.eval(p), perpendicular(&f).eval(p));
        prop_assert_eq!(a.dot(b), 0.0);
        prop_assert_eq!(a.norm(), b.norm());
    }

    #[test]
    fn divergence_equals_curl_of_quarter_turn(seed in 0u64..1000, p in point_in(1.0)) {
        let f = Wavy::random(seed).field();
        let div = numeric_divergence(&f, p, 1e-4).unwrap();
        let curl = numeric_curl(&perpendicular(&f), p, 1e-4).unwrap();
        prop_assert!((div - curl).abs() <= 1e-9 * (1.0 + div.abs()), "{} vs {}", div, curl);
    }

    #[test]
    fn shear_family_is_divergence_free(n in 2.0..64.0f64, p in point_in(1.0)) {
        let div = numeric_divergence(&vn_field(n), p, 1e-4).unwrap();
        prop_assert!(div.abs() <= 1e-8 * n, "{}", div);
    }

    #[test]
    fn rounding_is_idempotent(x in proptest::num::f64::NORMAL) {
        let r = round_sig(x);
        prop_assert_eq!(round_sig(r), r);
        prop_assert!((r - x).abs() <= 1e-11 * x.abs());
        prop_assert_eq!(fmt_num(x).parse::<f64>().unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn escape_length_ignores_speed_scaling(seed in 0u64..50, start in point_in(0.5), lambda in prop_oneof![Just(0.1), Just(10.0)]) {
        let f = band_limited(seed, 4, 6.0).unwrap();
        let base = escape_length(&f, start, 1.0, 1e3).unwrap();
        let scaled = escape_length(&f.scaled(lambda), start, 1.0, 1e3).unwrap();
        prop_assert!(base.escaped() && scaled.escaped());
        prop_assert!((base.escape_length - scaled.escape_length).abs() <= 2e-9 * base.escape_length.max(1.0),
            "{} vs {}", base.escape_length, scaled.escape_length);
    }

    #[test]
    fn stream_function_is_path_independent(seed in 0u64..50) {
        let f = band_limited(seed, 4, 6.0).unwrap();
        let d = Disk::new(Point2::ORIGIN, 1.0).unwrap();
        let g = compute_stream_function(&f, &d, 1.0 / 128.0, Point2::ORIGIN).unwrap();
        prop_assert!(g.closure_error() <= 1e-8, "{}", g.closure_error());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn plan_legs_respect_their_budgets(seed in 0u64..200, start in point_in(0.3)) {
        let f = band_limited(seed, 4, 6.0).unwrap();
        let plan = plan_escape(&f, start, PlanMode::Unsigned).unwrap();
        let budget = level_budget(&plan.bounds, 1.0, PLAN_TOL);
        prop_assert!(plan.satisfied);
        prop_assert!(plan.s_length <= budget, "s-leg {} > {}", plan.s_length, budget);
        prop_assert!(plan.t_length <= budget, "t-leg {} > {}", plan.t_length, budget);
    }

    #[test]
    fn reports_are_reproducible(seed in 0u64..100) {
        let f = Wavy::random(seed).field();
        let a = to_json(&verify_theorem3(&f, Point2::ORIGIN, 1.0, 10_000).unwrap()).unwrap();
        let b = to_json(&verify_theorem3(&f, Point2::ORIGIN, 1.0, 10_000).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
