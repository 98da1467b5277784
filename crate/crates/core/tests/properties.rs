use std::path::PathBuf;

use proptest::prelude::*;

use renormlab::attractor::{detect_solenoid, escape_dichotomy, induced_map_of};
use renormlab::cli::{fmt_f64, CommandKind, FamilyId, RunConfig};
use renormlab::dynamics::{Interval, IntervalDynamics};
use renormlab::families::{quad_composition, QuadCompositionParams};
use renormlab::numeric::aitken;
use renormlab::renorm::{extract_mcd, find_restrictive_interval, renormalize, MarkedCombinatorialData};

fn interval() -> impl Strategy<Value = Interval> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Interval::new(a, b))
}

fn command() -> impl Strategy<Value = Option<CommandKind>> {
    prop::option::of(prop_oneof![
        Just(CommandKind::Renorm),
        Just(CommandKind::Cascade),
        Just(CommandKind::Spectrum),
        Just(CommandKind::Cover),
        Just(CommandKind::Detect),
        Just(CommandKind::Mcd),
    ])
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        command(),
        prop_oneof![Just(FamilyId::Quadcomp), Just(FamilyId::Cubic)],
        1usize..5,
        prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..4),
        prop::option::of(-1.0e3..1.0e3f64),
        prop::option::of(1usize..12),
        10usize..60,
        prop::option::of(1e-6..1.0f64),
        1.0..4.0f64,
        any::<u64>(),
        prop::option::of("[a-z]{1,8}\\.json"),
    )
        .prop_map(|(command, family, n, lambdas, a, depth, m, grid_step, ratio_bound, seed, out)| RunConfig {
            command,
            family,
            n,
            lambdas,
            a,
            depth,
            m,
            grid_step,
            ratio_bound,
            seed,
            out: out.map(PathBuf::from),
            ..RunConfig::default()
        })
}

proptest! {
    #[test]
    fn quadratic_levels_fix_the_left_endpoint(lambdas in prop::collection::vec(0.05..=1.0f64, 1..4), x in -1.0..=1.0f64) {
        let f = quad_composition(&QuadCompositionParams::new(lambdas.clone()).unwrap());
        for (i, &l) in lambdas.iter().enumerate() {
            prop_assert_eq!(f.step_raw(i, -1.0).0, -1.0);
            prop_assert_eq!(f.critical_points(i), vec![0.0]);
            let (y, dy) = f.step_raw(i, x);
            prop_assert!((-1.0..=1.0).contains(&y));
            prop_assert!(y <= -1.0 + 2.0 * l + 1e-15);
            // Increasing to the left of the critical point, decreasing to the right.
            prop_assert!(dy * x <= 0.0);
        }
    }

    #[test]
    fn hull_and_overlap_are_consistent(a in interval(), b in interval()) {
        let h = a.hull(&b);
        prop_assert!(h.contains_interval(&a, 0.0) && h.contains_interval(&b, 0.0));
        prop_assert_eq!(a.overlap(&b), b.overlap(&a));
        prop_assert!(a.overlap(&b) <= a.len().min(b.len()) + 1e-12);
        prop_assert!(a.hausdorff(&b) >= 0.0);
        prop_assert_eq!(a.overlap(&a), a.len());
        if a.contains_interval(&b, 0.0) {
            prop_assert!((a.overlap(&b) - b.len()).abs() < 1e-12);
        }
    }

    #[test]
    fn configs_survive_json(cfg in config()) {
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn aitken_is_exact_on_geometric_tails(limit in -5.0..5.0f64, c in 0.1..2.0f64, r in 0.1..0.6f64) {
        let x = |k: i32| limit + c * r.powi(k);
        prop_assert!((aitken(x(0), x(1), x(2)) - limit).abs() < 1e-10);
    }

    #[test]
    fn doubling_window_renormalizes_to_normal_form(lambda in 0.77..0.91f64) {
        let f = quad_composition(&QuadCompositionParams::new(vec![lambda]).unwrap());
        let cycle = find_restrictive_interval(&f, 4).unwrap().expect("period two cycle in the window");
        prop_assert_eq!(cycle.period, 2);
        prop_assert_eq!(extract_mcd(&cycle), MarkedCombinatorialData::doubling());
        prop_assert!(cycle.p.contains(0.0, 0.0));
        let g = renormalize(&cycle).unwrap();
        prop_assert_eq!(g.step_raw(0, -1.0).0, -1.0);
        prop_assert_eq!(g.critical_points(0), vec![0.0]);
        for k in 0..=8 {
            let x = -1.0 + 0.25 * k as f64;
            let y = g.step_raw(0, x).0;
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&y));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solenoid_levels_nest(lambda in 0.76..0.8925f64) {
        let f = quad_composition(&QuadCompositionParams::new(vec![lambda]).unwrap());
        if let Some(cert) = detect_solenoid(&f, 5, 2.0).unwrap() {
            for w in cert.periods.windows(2) {
                prop_assert_eq!(w[1] % w[0], 0);
                prop_assert!(w[1] > w[0]);
            }
            for k in 0..cert.levels.len() {
                prop_assert_eq!(cert.levels[k].len(), cert.periods[k]);
                if k > 0 {
                    for child in &cert.levels[k] {
                        let inside = cert.levels[k - 1]
                            .iter()
                            .any(|p| p.interval.contains_interval(&child.interval, 1e-9));
                        prop_assert!(inside);
                    }
                }
            }
        }
    }

    #[test]
    fn escape_counts_cover_every_sample(seed in any::<u64>(), random in 0usize..40, post in 0usize..20) {
        let f = quad_composition(&QuadCompositionParams::new(vec![0.892486417967745]).unwrap());
        let g = induced_map_of(&f, 3, 2).unwrap();
        let rep = escape_dichotomy(&g, random, post, 30, seed);
        prop_assert_eq!(rep.random.escaped + rep.random.unresolved + rep.random.stayed, random);
        prop_assert_eq!(rep.postcritical.escaped + rep.postcritical.unresolved + rep.postcritical.stayed, post);
        let again = escape_dichotomy(&g, random, post, 30, seed);
        prop_assert_eq!(rep.random, again.random);
    }
}
