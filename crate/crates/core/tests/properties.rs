use proptest::prelude::*;
use satburgers_core::exact_solutions::{chord_deficit, jump_admissible_local, wave_profile, wave_speed};
use satburgers_core::initial_data::{mollify, InitialDatum, MollifierKernel};
use satburgers_core::limit_analysis::{condition_e_check, detect_shocks, q_lim_profile, QLimOptions};
use satburgers_core::model::{builtin_model, BuiltinModel, DissipationFlux, FluxFunction};
use satburgers_core::solver::{l1_distance, solve, Boundary, Grid, GridField, SolverConfig};

fn flux_family(k: usize) -> FluxFunction {
    match k {
        0 => FluxFunction::burgers(),
        1 => FluxFunction::polynomial(&[0.0, 0.0, 0.0, 1.0]),
        _ => FluxFunction::polynomial(&[0.0, 0.0, 0.0, 0.0, 0.25]),
    }
}

/// Piecewise linear field through equally spaced knot values.
fn field_from(values: &[f64], n: usize) -> GridField {
    let g = Grid::new(-1.0, 1.0, n).unwrap();
    let k = values.len();
    GridField::from_fn(g, 0.0, |x| {
        let s = (x + 1.0) / 2.0 * (k - 1) as f64;
        let i = (s.floor() as usize).min(k - 2);
        let w = s - i as f64;
        (1.0 - w) * values[i] + w * values[i + 1]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arctan_inverse_round_trip(s in -1e4f64..1e4) {
        let q = DissipationFlux::arctan(1.0);
        let back = q.inverse(q.eval(s));
        prop_assert!((back - s).abs() <= 1e-8 * (1.0 + s.abs()), "{s} -> {back}");
    }

    #[test]
    fn algebraic_inverse_round_trip(s in -100f64..100.0) {
        let q = DissipationFlux::algebraic(1.0);
        let back = q.inverse(q.eval(s));
        prop_assert!((back - s).abs() <= 1e-10 * (1.0 + s.abs()), "{s} -> {back}");
    }

    #[test]
    fn engquist_osher_is_consistent_and_monotone(k in 0usize..3, a in -2f64..2.0, b in -2f64..2.0, d in 1e-3f64..0.5) {
        let f = flux_family(k);
        prop_assert!((f.engquist_osher(a, a) - f.eval(a)).abs() < 1e-14);
        let base = f.engquist_osher(a, b);
        prop_assert!(f.engquist_osher(a + d, b) >= base - 1e-13);
        prop_assert!(f.engquist_osher(a, b + d) <= base + 1e-13);
    }

    #[test]
    fn wave_speed_is_symmetric_and_deficit_nonpositive(k in 0usize..3, a in -2f64..2.0, b in -2f64..2.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let f = flux_family(k);
        prop_assert_eq!(wave_speed(&f, a, b).unwrap(), wave_speed(&f, b, a).unwrap());
        let (m, at) = chord_deficit(&f, a.max(b), a.min(b)).unwrap();
        prop_assert!(m <= 0.0);
        prop_assert!(at >= a.min(b) && at <= a.max(b));
    }

    #[test]
    fn convex_chord_position(a in -2f64..2.0, b in -2f64..2.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let f = FluxFunction::burgers();
        let (hi, lo) = (a.max(b), a.min(b));
        prop_assert!(condition_e_check(&f, hi, lo, 201).unwrap().satisfied);
        prop_assert!(!condition_e_check(&f, lo, hi, 201).unwrap().satisfied);
        prop_assert!(jump_admissible_local(&f, hi, lo).unwrap());
    }

    #[test]
    fn profile_is_monotone_between_states(bm in 0.2f64..2.0, bp in -2f64..0.0, qb in 0.05f64..1.0) {
        let m = builtin_model(BuiltinModel::BurgersArctan, qb).unwrap();
        let xi: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
        let p = wave_profile(&m, bm, bp, &xi).unwrap();
        prop_assert!(p.b_values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(p.b_values.iter().all(|&b| b <= bm && b >= bp));
    }

    #[test]
    fn qlim_stays_within_saturation_levels(vals in prop::collection::vec(-3f64..3.0, 8..40)) {
        let m = builtin_model(BuiltinModel::BurgersArctan, 0.5).unwrap();
        let s = field_from(&vals, 101);
        let p = q_lim_profile(&s, &m, &QLimOptions::for_model(&m)).unwrap();
        prop_assert!(p.q_values.iter().all(|&q| (-0.5..=0.5).contains(&q)));
    }

    #[test]
    fn mollification_respects_bounds(lo in -2f64..0.0, hi in 0f64..2.0, h in 0.05f64..0.3) {
        let d = InitialDatum::riemann(hi, lo, 0.1);
        let g = Grid::new(-1.0, 1.0, 201).unwrap();
        prop_assume!(g.dx() <= 0.25 * h);
        let f = mollify(&d, &MollifierKernel::default(), h, g).unwrap();
        prop_assert!(f.u.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        prop_assert!(f.u.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn steep_steps_are_counted(n_jumps in 1usize..5, base in -1f64..1.0) {
        let g = Grid::new(0.0, 1.0, 401).unwrap();
        let s = GridField::from_fn(g, 0.0, |x| base + (x * (n_jumps + 1) as f64).floor().min(n_jumps as f64) * 0.5).unwrap();
        prop_assert_eq!(detect_shocks(&s, 0.2 / g.dx()).len(), n_jumps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_keeps_max_principle_and_tv(vals in prop::collection::vec(-1f64..1.0, 4..12), eps in 0f64..0.05) {
        let m = builtin_model(BuiltinModel::BurgersArctan, 0.25).unwrap();
        let u0 = field_from(&vals, 81);
        let mut cfg = SolverConfig::new(eps, 0.2);
        cfg.boundary = Boundary::Periodic;
        let tr = solve(&u0, &m, &cfg).unwrap();
        let fin = tr.final_state();
        prop_assert!(fin.max() <= u0.max() + 1e-9 && fin.min() >= u0.min() - 1e-9);
        let tv = tr.diagnostics.tv_series();
        prop_assert!(tv.windows(2).all(|w| w[1] <= w[0] + 1e-8));
        let mass = tr.diagnostics.mass_series();
        prop_assert!(mass.iter().all(|v| (v - mass[0]).abs() <= 1e-10 * (1.0 + mass[0].abs())));
    }

    #[test]
    fn solver_contracts_l1(a in prop::collection::vec(-1f64..1.0, 6), shift in 0f64..0.5) {
        let m = builtin_model(BuiltinModel::BurgersArctan, 0.25).unwrap();
        let u = field_from(&a, 81);
        let v = GridField::new(u.grid, 0.0, u.u.iter().map(|x| x + shift).collect()).unwrap();
        let mut cfg = SolverConfig::new(0.01, 0.2);
        cfg.snapshot_times = vec![0.0, 0.05, 0.1, 0.15];
        cfg.boundary = Boundary::Periodic;
        let dt = 0.5 * satburgers_core::solver::stable_dt(&v, &m, &cfg).unwrap()
            .min(satburgers_core::solver::stable_dt(&u, &m, &cfg).unwrap());
        cfg.fixed_dt = Some(dt);
        let ta = solve(&u, &m, &cfg).unwrap();
        let tb = solve(&v, &m, &cfg).unwrap();
        let d: Vec<f64> = ta.snapshots.iter().zip(&tb.snapshots).map(|(x, y)| l1_distance(x, y).unwrap()).collect();
        prop_assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-8), "{d:?}");
    }
}
