use std::f64::consts::PI;

use proptest::prelude::*;

use systolab_core::geodesic::{clairaut_invariant, integrate_geodesic, GeodesicState};
use systolab_core::strip::synthetic::{shear, sine_generating, translation, RandomGenerating};
use systolab_core::strip::{
    build_from_generating, calabi, calabi_from_w, flux, flux_boundary_path, generating_from_map,
    strip_report, StripGrid,
};
use systolab_core::{MetricModel, Tolerance};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_area_and_curvature(r in 0.3f64..3.0) {
        let m = MetricModel::round(r).unwrap();
        let area = m.area(64).unwrap();
        prop_assert!((area / (4.0 * PI * r * r) - 1.0).abs() < 1e-10);
        let e = m.extremes();
        prop_assert!((e.k_min * r * r - 1.0).abs() < 1e-10);
        prop_assert!((e.k_max * r * r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spheroid_pinching_closed_form(c in 1.0f64..1.3) {
        let m = MetricModel::spheroid(c).unwrap();
        prop_assert!((m.extremes().pinching() - c.powi(-4)).abs() < 1e-9);
        let n = m.normalized().unwrap();
        prop_assert!((n.extremes().k_max - 1.0).abs() < 1e-9);
        prop_assert!((n.extremes().pinching() - c.powi(-4)).abs() < 1e-9);
    }

    #[test]
    fn spheroid_geodesics_conserve_speed_and_clairaut(
        c in 0.9f64..1.2,
        theta in 0.1f64..(PI - 0.1),
        phi in 0.0f64..(2.0 * PI),
        alpha in 0.0f64..(2.0 * PI),
    ) {
        let m = MetricModel::spheroid(c).unwrap();
        let s0 = GeodesicState::from_chart(&m, theta, phi, alpha).unwrap();
        let traj = integrate_geodesic(&m, &s0, 8.0, Tolerance::default()).unwrap();
        let c0 = clairaut_invariant(&m, &s0);
        for s in &traj.states {
            prop_assert!(s.speed_defect(&m) < 1e-9);
            prop_assert!((clairaut_invariant(&m, s) - c0).abs() < 1e-9);
        }
    }

    #[test]
    fn geodesic_flow_is_reversible(
        eps in -0.1f64..0.1,
        theta in 0.1f64..(PI - 0.1),
        alpha in 0.0f64..(2.0 * PI),
        t in 0.5f64..10.0,
    ) {
        let m = MetricModel::zoll_cubic(eps).unwrap();
        let s0 = GeodesicState::from_chart(&m, theta, 0.3, alpha).unwrap();
        let fwd = integrate_geodesic(&m, &s0, t, Tolerance::default()).unwrap();
        let back = integrate_geodesic(&m, &fwd.last().reversed(), t, Tolerance::default()).unwrap();
        prop_assert!(back.last().reversed().distance(&s0) < 1e-8);
    }

    #[test]
    fn translation_and_shear_flux(c in -1.0f64..1.0, a in -0.5f64..0.5) {
        let g = StripGrid::new(2.0 * PI, 32, 33).unwrap();
        prop_assert!((flux(&translation(g, c)) - c).abs() < 1e-9);
        // x ↦ x + a cos y moves no net area across a vertical line.
        let s = shear(g, |y| a * y.cos());
        prop_assert!(flux(&s).abs() < 1e-9);
        prop_assert!((flux_boundary_path(&s) - flux(&s)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flux_is_additive_under_composition(seed in 0u64..1000, c in -0.5f64..0.5) {
        let g = StripGrid::new(2.0 * PI, 64, 65).unwrap();
        let map = build_from_generating(&RandomGenerating::random(seed, g.l, true).sample(g)).unwrap();
        let shifted = translation(g, c).compose(&map).unwrap();
        prop_assert!((flux(&shifted) - flux(&map) - c).abs() < 1e-10);
    }

    #[test]
    fn sine_maps_calabi_and_fixed_points(eps in -0.1f64..0.1, bias in -0.05f64..0.05) {
        let g = StripGrid::new(2.0 * PI, 64, 65).unwrap();
        let gen = sine_generating(g, eps, bias);
        let map = build_from_generating(&gen).unwrap();
        let r = strip_report(&map, &gen).unwrap();
        prop_assert!(r.flux.abs() < 1e-10);
        prop_assert!(r.boundary_jump_residual < 1e-10);
        prop_assert!((r.cal.unwrap() - r.cal_from_w.unwrap()).abs() < 1e-6);
        prop_assert!(r.omega_residual < 1e-6);
        prop_assert!(r.fixed_point_signs_ok);
    }

    #[test]
    fn calabi_is_additive_on_zero_flux_maps(a in 0u64..500, b in 500u64..1000) {
        let g = StripGrid::new(2.0 * PI, 96, 96).unwrap();
        let phi = build_from_generating(&RandomGenerating::random(a, g.l, false).sample(g)).unwrap();
        let psi = build_from_generating(&RandomGenerating::random(b, g.l, false).sample(g)).unwrap();
        let both = phi.compose(&psi).unwrap();
        let sum = calabi(&phi).unwrap() + calabi(&psi).unwrap();
        prop_assert!((calabi(&both).unwrap() - sum).abs() < 1e-5, "{} vs {}", calabi(&both).unwrap(), sum);
    }

    #[test]
    fn random_generating_round_trip(seed in 0u64..10_000, with_flux in any::<bool>()) {
        let g = StripGrid::new(2.0 * PI, 96, 96).unwrap();
        let gen = RandomGenerating::random(seed, g.l, with_flux).sample(g);
        let map = build_from_generating(&gen).unwrap();
        let back = generating_from_map(&map).unwrap();
        let err = back.w.iter().zip(&gen.w).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(err < 1e-6, "{}", err);
        let fl = flux(&map);
        for i in 0..g.nx {
            let jump = gen.w[g.idx(i, g.ny - 1)] - gen.w[g.idx(i, 0)];
            prop_assert!((jump - 2.0 * fl).abs() < 1e-6);
        }
        if !with_flux {
            let (a, b) = (calabi(&map).unwrap(), calabi_from_w(&gen, &map).unwrap());
            prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-2), "{} vs {}", a, b);
        }
    }
}
