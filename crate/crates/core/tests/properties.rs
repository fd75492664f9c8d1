//! Randomized invariants. Case counts are kept small; each case integrates
//! geodesics or flows whole curves.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use loopcrit::geodesic::{self, tangent_at};
use loopcrit::pathspace::{self, Boundary, DiscreteCurve};
use loopcrit::rauch::{self, OffsetFn};
use loopcrit::WarpProfile;
use proptest::prelude::*;

fn family(r: f64) -> WarpProfile {
    WarpProfile::family(r).unwrap()
}

/// A closed loop `t = t0 + a sin(k x + phase)` around the axis.
fn wavy_loop(g: &WarpProfile, t0: f64, a: f64, k: f64, phase: f64, n: usize) -> DiscreteCurve {
    let pts = (0..=n)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / n as f64;
            g.point(t0 + a * (k * x + phase).sin(), x)
        })
        .collect();
    DiscreteCurve::from_points(pts, Boundary::FreeLoop)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn profile_has_unit_speed_and_symmetry(r in 0.1f64..1.0, u in 0.01f64..0.99) {
        let g = family(r);
        let t = PI * u;
        let h = 1e-5;
        let fp = (g.f(t + h) - g.f(t - h)) / (2.0 * h);
        let zp = (g.z(t + h) - g.z(t - h)) / (2.0 * h);
        prop_assert!((fp * fp + zp * zp - 1.0).abs() < 1e-8);
        prop_assert!((g.f_prime(t) - fp).abs() < 1e-8);
        prop_assert!((g.f(PI - t) - g.f(t)).abs() < 1e-10);
        prop_assert!(g.f(t) <= t.sin() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geodesics_conserve_clairaut_and_speed(
        r in 0.25f64..1.0, t in 0.05f64..3.09, x in 0.0f64..TAU, alpha in 0.0f64..TAU, len in 0.5f64..8.0,
    ) {
        let g = family(r);
        let p = g.point(t, x);
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, alpha), len).unwrap();
        prop_assert!(c.clairaut_drift() < 1e-8);
        prop_assert!(c.max_speed_error() < 1e-8);
    }

    #[test]
    fn shooting_is_reversible(
        r in 0.25f64..1.0, t in 0.2f64..2.9, alpha in 0.0f64..TAU, len in 0.5f64..5.0,
    ) {
        let g = family(r);
        let p = g.point(t, 0.4);
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, alpha), len).unwrap();
        let end = c.end();
        let back = geodesic::shoot(&g, &end.point, &(-end.velocity), len).unwrap();
        prop_assert!(back.end().point.chord(&p) < 1e-7);
    }

    #[test]
    fn first_conjugate_point_obeys_sturm_bounds(r in 0.3f64..1.0, t in 0.2f64..2.9, alpha in 0.0f64..TAU) {
        let g = family(r);
        let p = g.point(t, 0.0);
        let len = PI / g.min_curvature().sqrt() + 0.1;
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, alpha), len).unwrap();
        let s1 = geodesic::jacobi(&c, 0.0, 1.0).unwrap().zeros[0];
        prop_assert!(s1 >= PI / g.max_curvature().sqrt() - 1e-6);
        prop_assert!(s1 <= PI / g.min_curvature().sqrt() + 1e-6);
    }

    #[test]
    fn round_index_matches_conjugate_count(len in 0.1f64..(3.0 * PI), alpha in 0.0f64..TAU) {
        prop_assume!((len / PI - (len / PI).round()).abs() > 1e-4);
        let g = WarpProfile::round();
        let p = g.point(1.1, 0.0);
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, alpha), len).unwrap();
        let rep = geodesic::index_report(&c).unwrap();
        prop_assert_eq!(rep.index, (len / PI).floor() as usize);
        prop_assert_eq!(rep.nullity, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flow_never_raises_energy(
        r in 0.3f64..1.0, t0 in 0.8f64..2.3, a in 0.0f64..0.4, k in 1u32..6, phase in 0.0f64..TAU,
    ) {
        let g = family(r);
        let c = wavy_loop(&g, t0, a, k as f64, phase, 128);
        let out = pathspace::flow(&g, &c, 20, pathspace::TOL_RES);
        for w in out.trace.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy);
        }
        for row in &out.trace {
            prop_assert!(row.length * row.length <= 2.0 * row.energy * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uniform_geodesic_attains_cauchy_schwarz(r in 0.3f64..1.0, t in 0.2f64..2.9, alpha in 0.0f64..TAU, len in 0.5f64..4.0) {
        let g = family(r);
        let p = g.point(t, 0.0);
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, alpha), len).unwrap().to_curve(&g, 256);
        let e = pathspace::energy(&g, &c).unwrap();
        prop_assert!(e.length * e.length <= 2.0 * e.energy * (1.0 + 1e-12));
        prop_assert!((2.0 * e.energy - e.length * e.length).abs() < 1e-6);
    }

    #[test]
    fn shorten_step_is_lipschitz(
        r in 0.3f64..1.0, t0 in 0.9f64..2.2, a in 0.05f64..0.3, eps in 1e-6f64..1e-3, phase in 0.0f64..TAU,
    ) {
        let g = family(r);
        let c1 = wavy_loop(&g, t0, a, 3.0, phase, 128);
        let pts = c1
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| g.point(p.t + eps * (5.0 * i as f64 / 128.0 * 2.0 * PI).cos(), p.x))
            .collect();
        let c2 = DiscreteCurve::from_points(pts, Boundary::FreeLoop);
        let delta = c1.pointwise_distance(&c2);
        let (s1, _) = pathspace::shorten_step(&g, &c1);
        let (s2, _) = pathspace::shorten_step(&g, &c2);
        prop_assert!(s1.pointwise_distance(&s2) < 2.0 * delta);
    }
}

#[test]
fn energy_converges_at_second_order() {
    let g = WarpProfile::round();
    let p = g.point(0.9, 0.3);
    let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, 0.7), 2.0 * PI).unwrap();
    // Sample the great circle at a non-uniform parameter so the energy
    // depends on N.
    let curve = |n: usize| {
        let pts = (0..=n)
            .map(|i| {
                let u = i as f64 / n as f64;
                c.point_at(&g, 2.0 * PI * (u + 0.1 * (2.0 * PI * u).sin()))
            })
            .collect();
        DiscreteCurve::from_points(pts, Boundary::FreeLoop)
    };
    let e: Vec<f64> = [64, 128, 256].iter().map(|&n| pathspace::energy_unchecked(&g, &curve(n)).energy).collect();
    let order = ((e[0] - e[1]) / (e[1] - e[2])).log2();
    assert!(order >= 1.9, "order {order}");
}

#[test]
fn rk4_step_halving_is_fourth_order() {
    let g = family(0.5);
    let p = g.point(0.7, 0.0);
    let v = tangent_at(&g, &p, 0.6);
    let end = |h: f64| geodesic::shoot_with_step(&g, &p, &v, 3.0, Some(h)).unwrap().end().point;
    let reference = end(5e-4);
    let e1 = end(1e-2).chord(&reference);
    let e2 = end(5e-3).chord(&reference);
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Larger curvature pushes the comparison curve shorter: a sphere of
    /// curvature 4 against the unit sphere, same geodesic length and offset.
    #[test]
    fn built_length_decreases_with_curvature(lc in 0.5f64..3.0, frac in 0.1f64..0.9, bump in any::<bool>()) {
        let stiff = WarpProfile::round().rescaled(0.5).unwrap();
        let round = WarpProfile::round();
        let value = frac * 0.5 * FRAC_PI_2;
        let offset = if bump { OffsetFn::Bump { amp: value } } else { OffsetFn::Constant { value } };
        let built = |g: &WarpProfile, rho: f64| {
            let p = g.point(0.3 * g.meridian_length(), 0.0);
            let c = geodesic::shoot(g, &p, &tangent_at(g, &p, 0.9), lc).unwrap();
            rauch::build_comparison_with_focal(g, &c, 1.0, offset, 256, rho).unwrap().built_length
        };
        prop_assert!(built(&stiff, 0.5 * FRAC_PI_2) <= built(&round, FRAC_PI_2) + rauch::TOL_CMP);
    }

    #[test]
    fn rigid_cases_stay_rigid_when_halved(lc in 0.5f64..4.0, frac in 0.1f64..0.95, alpha in 0.0f64..TAU) {
        let g = WarpProfile::round();
        let p = g.point(1.2, 0.0);
        let c = geodesic::shoot(&g, &p, &tangent_at(&g, &p, alpha), lc).unwrap();
        let case = rauch::build_comparison_with_focal(&g, &c, 1.0, OffsetFn::Bump { amp: frac * FRAC_PI_2 }, 256, FRAC_PI_2).unwrap();
        let chk = rauch::rauch_check(&g, &case).unwrap();
        prop_assert!((case.built_length - case.spherical_length).abs() < rauch::TOL_CMP);
        if chk.rigid {
            prop_assert_eq!(chk.propagated, Some(true));
        }
    }
}
