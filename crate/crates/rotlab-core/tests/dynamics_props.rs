//! Property tests tying the dynamics modules together: determinism of
//! orbit scans, structural identities over random families, analytic
//! oracles for orbit heights, and flow linearity.

use proptest::prelude::*;
use rotlab_core::cover::{CoverPoint, MapFamily, Profile};
use rotlab_core::flows::{check_flow_linearity, FieldFamily};
use rotlab_core::orbits::{find_orbit, OrbitSearchOptions};
use rotlab_core::rotation::{
    check_morphism, check_prop12, point_rotation, rotation_set, RecurrenceOptions, SampleParams,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The scan's end-to-end quotient is bit-identical to an
    /// independent iteration of the same map: no hidden state, no
    /// accumulation shortcuts.
    #[test]
    fn plain_quotient_matches_independent_iteration(
        rho in -1.5f64..1.5,
        x0 in -2.0f64..2.0,
        u0 in 0.05f64..0.95,
    ) {
        let h = MapFamily::Rigid { rho }.build().unwrap();
        let n = 257u64;
        let opts = RecurrenceOptions { max_iter: n, ..Default::default() };
        let pr = point_rotation(&h, CoverPoint::new(x0, u0), &opts).unwrap();
        let end = h.iterate(CoverPoint::new(x0, u0), n as i64).unwrap();
        let want = (end.x - x0) / n as f64;
        prop_assert_eq!(pr.plain_quotient.to_bits(), want.to_bits());
    }

    /// Deck translation and powers shift and scale the rotation data
    /// of twist maps to float precision under matched seeds.
    #[test]
    fn structural_identities_for_random_twists(
        c0 in 0.0f64..0.4,
        c1 in 0.4f64..0.9,
        k in -2i64..3,
        q in 1i64..4,
    ) {
        let h = MapFamily::Twist { profile: Profile::Bernstein { coeffs: vec![c0, c1] } }
            .build()
            .unwrap();
        let params = SampleParams {
            n_samples: 40,
            seed: 11,
            recurrence: RecurrenceOptions { max_iter: 800, ..Default::default() },
        };
        let rep = check_prop12(&h, k, q, &params).unwrap();
        prop_assert!(rep.translate_defect < 1e-9, "translate {}", rep.translate_defect);
        prop_assert!(rep.power_defect < 1e-9, "power {}", rep.power_defect);
    }

    /// Additivity of the mean rotation number for commuting families.
    #[test]
    fn morphism_additivity_for_rigid_pairs(a in -0.9f64..0.9, b in -0.9f64..0.9) {
        let f = MapFamily::Rigid { rho: a }.build().unwrap();
        let g = MapFamily::Rigid { rho: b }.build().unwrap();
        let params = SampleParams {
            n_samples: 30,
            seed: 2,
            recurrence: RecurrenceOptions { max_iter: 600, ..Default::default() },
        };
        let rep = check_morphism(&f, &g, &params).unwrap();
        prop_assert!(rep.defect.abs() < 1e-11, "defect {}", rep.defect);
    }

    /// For a strictly monotone linear twist profile the resonant
    /// height is the profile's exact preimage of p/q.
    #[test]
    fn twist_orbit_height_matches_profile_inverse(
        c0 in 0.0f64..0.3,
        span in 0.5f64..1.0,
        p in 1i64..5,
        q in 2i64..8,
    ) {
        let target = p as f64 / q as f64;
        let c1 = c0 + span;
        prop_assume!(target > c0 + 0.02 && target < c1 - 0.02);
        let h = MapFamily::Twist { profile: Profile::Bernstein { coeffs: vec![c0, c1] } }
            .build()
            .unwrap();
        let rec = find_orbit(&h, p, q, &OrbitSearchOptions { grid: 24, ..Default::default() })
            .unwrap();
        prop_assert!(rec.found, "no orbit for {p}/{q} in [{c0}, {c1}]");
        let u_star = (target - c0) / span;
        prop_assert!((rec.point.u - u_star).abs() < 1e-7,
            "u = {} vs {}", rec.point.u, u_star);
        prop_assert!(rec.residual <= 1e-10);
    }

    /// Rigid rotation sets concentrate on the angle for any angle.
    #[test]
    fn rigid_rotation_set_concentrates(rho in -1.2f64..1.2) {
        let h = MapFamily::Rigid { rho }.build().unwrap();
        let set = rotation_set(&h, 30, 2_000, 6).unwrap();
        prop_assert!((set.mean - rho).abs() < 1e-7, "mean {}", set.mean);
        prop_assert!(set.interval[1] - set.interval[0] < 1e-6);
    }

    /// Uniform fields have exactly linear rotation numbers in t.
    #[test]
    fn uniform_flow_linearity(speed in -0.8f64..0.8) {
        prop_assume!(speed.abs() > 1e-3);
        let field = FieldFamily::Uniform { speed }.build().unwrap();
        let params = SampleParams {
            n_samples: 20,
            seed: 8,
            recurrence: RecurrenceOptions { max_iter: 300, ..Default::default() },
        };
        let rep = check_flow_linearity(&field, &[0.5, 1.0, 2.0], 0.05, &params).unwrap();
        prop_assert!((rep.slope - speed).abs() < 1e-11, "slope {}", rep.slope);
        prop_assert!(rep.max_deviation < 1e-11);
    }
}
