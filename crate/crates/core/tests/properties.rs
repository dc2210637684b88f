mod common;

use proptest::prelude::*;
use schedbound_core::bound::{
    bound_min_ablation, bound_mirror, omega_curve, terms, BoundSpec, GradNormModel, MirrorSpec,
};
use schedbound_core::scaling::ScalingLaw;
use schedbound_core::schedule::{
    make_cosine, make_wsd, CooldownShape, Schedule, ScheduleSpec,
};
use schedbound_core::simulate::{generate_problem, linf_subgradient};
use schedbound_core::tuning::{log_grid, sweep_gamma};

use common::{direct_terms, rel_err};

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    prop::collection::vec(0.01f64..1.0, 1..60).prop_map(|v| Schedule::from_values(v).unwrap())
}

fn grad_strategy() -> impl Strategy<Value = GradNormModel> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|g| GradNormModel::constant(g).unwrap()),
        (-1.0f64..=0.0).prop_map(|a| GradNormModel::power_law(a).unwrap()),
    ]
}

fn shape_strategy() -> impl Strategy<Value = CooldownShape> {
    prop_oneof![Just(CooldownShape::Linear), Just(CooldownShape::OneMinusSqrt)]
}

proptest! {
    #[test]
    fn wsd_is_positive_and_non_increasing(t in 1usize..500, c in 0.0f64..=1.0, shape in shape_strategy()) {
        let s = make_wsd(t, c, shape).unwrap();
        prop_assert_eq!(s.horizon(), t);
        prop_assert!(s.values().iter().all(|&v| v > 0.0 && v <= 1.0));
        prop_assert!(s.values().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn cosine_stays_in_range(t in 1usize..500, f in 0.0f64..1.0) {
        let s = make_cosine(t, f, 1.0).unwrap();
        prop_assert!(s.values().iter().all(|&v| v >= f - 1e-15 && v <= 1.0 + 1e-15));
        prop_assert!(s.values().windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn terms_match_direct_sums(s in schedule_strategy(), g in grad_strategy(), d in 0.1f64..10.0) {
        let t = s.horizon();
        let gs: Vec<f64> = (1..=t).map(|i| g.at(i)).collect();
        let (t1, t2) = direct_terms(s.values(), &gs, d);
        let tm = terms(&s, &g, d, t).unwrap();
        prop_assert!(rel_err(tm.t1, t1) < 1e-10);
        prop_assert!(rel_err(tm.t2, t2) < 1e-10);
    }

    #[test]
    fn curve_matches_pointwise_terms(s in schedule_strategy(), gamma in 0.01f64..10.0) {
        let g = GradNormModel::constant(1.0).unwrap();
        let spec = BoundSpec::new(s.clone(), g, 1.0, gamma).unwrap();
        let curve = omega_curve(&spec, 1).unwrap();
        for (i, &t) in curve.t_values.iter().enumerate() {
            let tm = terms(&s, &g, 1.0, t).unwrap();
            prop_assert_eq!(curve.omega[i], tm.omega(gamma));
        }
    }

    #[test]
    fn distance_and_gradient_scaling(s in schedule_strategy(), c in 0.1f64..10.0, d in 0.1f64..5.0, g in 0.1f64..5.0) {
        let t = s.horizon();
        let base = terms(&s, &GradNormModel::constant(g).unwrap(), d, t).unwrap();
        let dd = terms(&s, &GradNormModel::constant(g).unwrap(), c * d, t).unwrap();
        let gg = terms(&s, &GradNormModel::constant(c * g).unwrap(), d, t).unwrap();
        prop_assert!(rel_err(dd.t1, c * c * base.t1) < 1e-12);
        prop_assert!(rel_err(gg.t2, c * c * base.t2) < 1e-12);
        let unit = terms(&s, &GradNormModel::constant(1.0).unwrap(), 1.0, t).unwrap();
        prop_assert!(rel_err(base.gamma_star(), unit.gamma_star() * d / g) < 1e-12);
    }

    #[test]
    fn rescaling_invariance(s in schedule_strategy(), g in grad_strategy(), c in 0.05f64..20.0, gamma in 0.01f64..10.0) {
        let t = s.horizon();
        let a = terms(&s, &g, 1.0, t).unwrap().omega(gamma);
        let b = terms(&s.scaled(c).unwrap(), &g, 1.0, t).unwrap().omega(gamma / c);
        prop_assert!(rel_err(b, a) < 1e-12);
    }

    #[test]
    fn optimal_gamma_minimizes(s in schedule_strategy(), g in grad_strategy(), gamma in 1e-4f64..1e4) {
        let tm = terms(&s, &g, 1.0, s.horizon()).unwrap();
        prop_assert!(tm.omega(gamma) >= tm.optimal_bound() * (1.0 - 1e-12));
        prop_assert!(rel_err(tm.omega(tm.gamma_star()), tm.optimal_bound()) < 1e-12);
    }

    #[test]
    fn grid_argmin_near_analytic(s in schedule_strategy()) {
        let g = GradNormModel::constant(1.0).unwrap();
        let star = terms(&s, &g, 1.0, s.horizon()).unwrap().gamma_star();
        let grid = log_grid(star / 37.0, star * 23.0, 81).unwrap();
        let step = (grid[1] / grid[0]).ln();
        let r = sweep_gamma(&s, &g, 1.0, &grid).unwrap();
        prop_assert!((r.argmin_value / star).ln().abs() <= step);
    }

    #[test]
    fn ablation_never_exceeds_full_bound(s in schedule_strategy(), gamma in 0.01f64..10.0) {
        let spec = BoundSpec::new(s.clone(), GradNormModel::constant(1.0).unwrap(), 1.0, gamma).unwrap();
        let full = terms(&s, &spec.grad_norms, 1.0, s.horizon()).unwrap().omega(gamma);
        prop_assert!(bound_min_ablation(&spec, s.horizon()).unwrap() <= full * (1.0 + 1e-12));
    }

    #[test]
    fn euclidean_mirror_matches(s in schedule_strategy(), g in grad_strategy(), d in 0.1f64..5.0, gamma in 0.01f64..10.0) {
        let t = s.horizon();
        let mirror = MirrorSpec::euclidean(d, g).unwrap();
        let m = bound_mirror(&mirror, &s.scaled(gamma).unwrap(), t).unwrap();
        prop_assert!(rel_err(m, terms(&s, &g, d, t).unwrap().omega(gamma)) < 1e-12);
    }

    #[test]
    fn spec_text_round_trip(t in 1usize..5000, c in 0.0f64..=1.0, shape in shape_strategy()) {
        let spec = ScheduleSpec::Wsd { horizon: t, fraction: c, shape };
        let parsed: ScheduleSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(parsed.build().unwrap(), spec.build().unwrap());
    }

    #[test]
    fn subgradient_inequality(seed in any::<u64>(), pts in prop::collection::vec(-3.0f64..3.0, 4)) {
        let p = generate_problem(20, 2, seed).unwrap();
        let (x, y) = ([pts[0], pts[1]], [pts[2], pts[3]]);
        let g = linf_subgradient(&p, &x);
        let lin = p.loss(&x) + g[0] * (y[0] - x[0]) + g[1] * (y[1] - x[1]);
        prop_assert!(p.loss(&y) >= lin - 1e-9);
    }

    #[test]
    fn scaling_round_trip(n in 1e7f64..1e10, d in 1e9f64..1e12, delta in 0.0f64..0.02) {
        let law = ScalingLaw::default();
        let base = law.loss(n, d).unwrap();
        let d2 = law.tokens_for_delta(n, d, delta).unwrap();
        let n2 = law.params_for_delta(n, d, delta).unwrap();
        if delta > 0.0 {
            prop_assert!(rel_err(base - law.loss(n, d2).unwrap(), delta) < 1e-9 * base / delta);
            prop_assert!(rel_err(base - law.loss(n2, d).unwrap(), delta) < 1e-9 * base / delta);
        }
        let more = delta + 1e-4;
        prop_assert!(law.tokens_for_delta(n, d, more).unwrap() > d2);
        prop_assert!(law.params_for_delta(n, d, more).unwrap() > n2);
    }
}
