use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use vortex_uca::channel::{
    max_approximation_error, mode_gain_aligned, mode_gain_closed, mode_gain_direct,
};
use vortex_uca::cli::{parse_config, BudgetConfig, RunConfig, SweepSpec};
use vortex_uca::metrics::{spectrum_efficiency, LinkBudget};
use vortex_uca::specfun::bessel_j;
use vortex_uca::transceiver::{synthesize_transmit, ModeSymbolVector};
use vortex_uca::{GeometryParams, LinkGeometry};

fn params() -> impl Strategy<Value = GeometryParams> {
    (
        (1usize..=20, 1usize..=20),
        (0.01f64..0.5, 0.01f64..0.5, 0.5f64..20.0),
        (
            -10.0f64..10.0,
            0.0f64..FRAC_PI_2,
            -10.0f64..10.0,
            -10.0f64..10.0,
        ),
        (0.01f64..0.5, 0.1f64..20.0),
    )
        .prop_map(
            |((n_tx, n_rx), (r, big_r, d), (theta, phi, a_t, a_r), (lambda, beta))| {
                GeometryParams {
                    n_tx,
                    n_rx,
                    radius_tx: r,
                    radius_rx: big_r,
                    center_distance: d,
                    bearing_theta: theta,
                    tilt_phi: phi,
                    offset_alpha_tx: a_t,
                    offset_alpha_rx: a_r,
                    wavelength: lambda,
                    beta,
                }
            },
        )
}

fn close(a: Complex64, b: Complex64, scale: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_match_coordinates(p in params()) {
        let g = LinkGeometry::new(p).unwrap();
        let (tx, rx) = g.element_positions();
        let dz = g.plane_separation();
        for (m, q) in rx.iter().enumerate() {
            for (n, t) in tx.iter().enumerate() {
                let d = [q[0] - t[0], q[1] - t[1], q[2] - t[2]];
                let full = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                let exact = g.exact_distance(m, n);
                prop_assert!((exact - full).abs() <= 1e-12 * full);
                let proj = g.projected_distance(m, n);
                prop_assert!((exact * exact - proj * proj - dz * dz).abs() <= 1e-12 * exact * exact);
            }
        }
    }

    #[test]
    fn gain_magnitudes_invariant_under_joint_rotation(p in params(), delta in -PI..PI) {
        let g = LinkGeometry::new(GeometryParams { n_tx: p.n_tx.max(2), ..p }).unwrap();
        let rotated = LinkGeometry::new(GeometryParams {
            bearing_theta: p.bearing_theta + delta,
            offset_alpha_tx: p.offset_alpha_tx + delta,
            offset_alpha_rx: p.offset_alpha_rx + delta,
            n_tx: p.n_tx.max(2),
            ..p
        })
        .unwrap();
        let h = vortex_uca::channel::ModeGainFactors::new(&g);
        prop_assume!(h.is_ok());
        let scale = h.unwrap().h().norm();
        for m in 0..g.n_rx() {
            for l in g.mode_index_set().iter() {
                let a = mode_gain_closed(&g, m, l).unwrap().norm();
                let b = mode_gain_closed(&rotated, m, l).unwrap().norm();
                prop_assert!((a - b).abs() <= 1e-9 * scale, "m={m} l={l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn coaxial_rotation_is_a_phase(p in params(), delta in -PI..PI) {
        let base = GeometryParams { tilt_phi: 0.0, ..p };
        let g = LinkGeometry::new(base).unwrap();
        let turned = LinkGeometry::new(GeometryParams { offset_alpha_rx: p.offset_alpha_rx + delta, ..base }).unwrap();
        let scale = vortex_uca::channel::ModeGainFactors::new(&g).unwrap().h().norm();
        for m in 0..g.n_rx() {
            for l in g.mode_index_set().iter() {
                let a = mode_gain_closed(&g, m, l).unwrap() * Complex64::cis(delta * l as f64);
                let b = mode_gain_closed(&turned, m, l).unwrap();
                prop_assert!(close(a, b, scale, 1e-9));
            }
        }
    }

    #[test]
    fn coaxial_case_matches_general_form(p in params()) {
        let g = LinkGeometry::new(GeometryParams { tilt_phi: 0.0, ..p }).unwrap();
        let scale = vortex_uca::channel::ModeGainFactors::new(&g).unwrap().h().norm();
        for m in 0..g.n_rx() {
            for l in g.mode_index_set().iter() {
                let general = mode_gain_closed(&g, m, l).unwrap();
                let aligned = mode_gain_aligned(&g, m, l).unwrap();
                prop_assert!(close(general, aligned, scale, 1e-12));
            }
        }
    }

    #[test]
    fn bessel_parity(l in -64i32..=64, x in 0.0f64..60.0) {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let j = bessel_j(l, x).unwrap();
        prop_assert_eq!(bessel_j(-l, x).unwrap(), sign * j);
        prop_assert_eq!(bessel_j(l, -x).unwrap(), sign * j);
    }

    #[test]
    fn bessel_recurrence(l in 1i32..=40, x in 0.05f64..50.0) {
        let (a, b, c) = (bessel_j(l - 1, x).unwrap(), bessel_j(l, x).unwrap(), bessel_j(l + 1, x).unwrap());
        let scale = a.abs().max(b.abs()).max(c.abs()).max(f64::MIN_POSITIVE);
        let lhs = a + c;
        let rhs = 2.0 * l as f64 / x * b;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * (1.0 + 2.0 * l as f64 / x), "{lhs} vs {rhs}");
    }

    #[test]
    fn synthesis_preserves_energy(n in 1usize..=40, seed in any::<u64>()) {
        let g = LinkGeometry::new(GeometryParams { n_tx: n, ..Default::default() }).unwrap();
        let s = ModeSymbolVector::random_unit_power(g.mode_index_set(), seed);
        let x = synthesize_transmit(&s, &g).unwrap();
        prop_assert!((x.energy() - s.energy()).abs() <= 1e-12 * s.energy());
    }

    #[test]
    fn more_elements_shrink_the_closed_form_error(
        r in 0.1f64..0.3,
        big_r in 0.1f64..0.3,
        d in 1.0f64..3.0,
        phi in 0.0f64..0.5,
        theta in 0.0f64..TAU,
        l in 0i32..=3,
    ) {
        let g = LinkGeometry::new(GeometryParams {
            radius_tx: r,
            radius_rx: big_r,
            center_distance: d,
            tilt_phi: phi,
            bearing_theta: theta,
            ..Default::default()
        })
        .unwrap();
        let coarse = max_approximation_error(&g.with_n_tx(8).unwrap(), l).unwrap();
        let fine = max_approximation_error(&g.with_n_tx(32).unwrap(), l).unwrap();
        prop_assert!(fine < coarse, "{fine} !< {coarse}");
    }

    #[test]
    fn direct_sum_agrees_with_closed_form_for_many_elements(p in params(), m_pick in 0usize..20) {
        let g = LinkGeometry::new(GeometryParams {
            n_tx: 48,
            radius_tx: p.radius_tx.min(0.05),
            wavelength: 0.1,
            ..p
        })
        .unwrap();
        let f = vortex_uca::channel::ModeGainFactors::new(&g);
        prop_assume!(f.is_ok());
        let scale = f.unwrap().h().norm();
        let m = m_pick % g.n_rx();
        for l in -4..=4 {
            let direct = mode_gain_direct(&g, m, l).unwrap();
            let closed = mode_gain_closed(&g, m, l).unwrap();
            prop_assert!(close(direct, closed, scale, 1e-9), "l={l}");
        }
    }

    #[test]
    fn more_noise_never_helps(phi in 0.0f64..FRAC_PI_2, v1 in 1e-4f64..1.0, factor in 1.0f64..100.0) {
        let g = LinkGeometry::new(GeometryParams { tilt_phi: phi, ..Default::default() }).unwrap();
        let quiet = spectrum_efficiency(&g, &LinkBudget::uniform(&g, 1.0, v1, 0).unwrap());
        let loud = spectrum_efficiency(&g, &LinkBudget::uniform(&g, 1.0, v1 * factor, 0).unwrap());
        prop_assume!(quiet.is_ok());
        prop_assert!(loud.unwrap() <= quiet.unwrap());
    }

    #[test]
    fn config_round_trip(
        p in params(),
        power in 0.0f64..10.0,
        noise in 0.0f64..10.0,
        seed in 0u64..=i64::MAX as u64,
        steps in proptest::option::of(1usize..500),
    ) {
        let config = RunConfig {
            geometry: LinkGeometry::new(p).unwrap(),
            budget: BudgetConfig { mode_power: power, noise_variance: noise, seed },
            sweep: steps.map(|steps| SweepSpec { steps: Some(steps), ..Default::default() }),
        };
        prop_assert_eq!(parse_config(&config.to_toml()).unwrap(), config);
    }
}
