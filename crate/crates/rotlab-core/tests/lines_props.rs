//! Oracles and properties for the line machinery: joins against the
//! raw pointwise minimum, chain joins against closed forms, the area
//! identity against analytic integrals, and return statistics against
//! number-theoretic facts about circle rotations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotlab_core::cover::{CoverPoint, MapFamily, Profile};
use rotlab_core::lines::{
    area_between, chain_join, map_line, order, vee_join, EssentialLine, LineRelation,
};
use rotlab_core::rotation::return_map_stats;

/// A random piecewise-linear line with a random grid.
fn random_line(rng: &mut ChaCha8Rng) -> EssentialLine {
    let n = rng.gen_range(2usize..40);
    let margin = 10f64.powf(rng.gen_range(-4.0..-1.0f64)).min(0.2);
    let mut heights: Vec<f64> = (0..n)
        .map(|i| margin + (1.0 - 2.0 * margin) * i as f64 / (n - 1) as f64)
        .collect();
    // Jitter the interior heights without breaking monotonicity.
    for i in 1..n - 1 {
        let room = (heights[i + 1] - heights[i - 1]) * 0.2;
        heights[i] += room * (rng.gen::<f64>() - 0.5);
    }
    let xs: Vec<f64> = (0..n).map(|_| -2.0 + 4.0 * rng.gen::<f64>()).collect();
    EssentialLine::new(heights, xs, margin * 1.001).unwrap()
}

#[test]
fn vee_join_equals_pointwise_min_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11E5);
    for case in 0..1_000 {
        let a = random_line(&mut rng);
        let b = random_line(&mut rng);
        let j = vee_join(&a, &b).unwrap();
        for _ in 0..50 {
            let u = rng.gen::<f64>();
            let want = a.eval(u).min(b.eval(u));
            let got = j.eval(u);
            assert!(
                (got - want).abs() <= 1e-9 * (1.0 + want.abs()),
                "case {case}, u = {u}: join {got} vs min {want}"
            );
        }
    }
}

#[test]
fn chain_join_matches_closed_form_for_linear_twist() {
    // h(x, u) = (x + g(u), u) with g(u) = 0.2 + 0.9 u. The chain
    // Gamma_i = h^-i(vertical 0) has T^i(Gamma_i) the graph of
    // i (1 - g(u)), so the join is min over i = 0..q-1 of that.
    let q = 5usize;
    let g = |u: f64| 0.2 + 0.9 * u;
    let h = MapFamily::Twist { profile: Profile::Bernstein { coeffs: vec![0.2, 1.1] } }
        .build()
        .unwrap();
    let base = EssentialLine::vertical(0.0);
    let mut inner = Vec::new();
    let mut cur = base.clone();
    let hinv = h.inverse_map();
    for _ in 1..q {
        cur = map_line(&hinv, &cur).unwrap();
        inner.push(cur.clone());
    }
    let j = chain_join(&base, &inner).unwrap();
    for k in 0..=100 {
        let u = 0.002 + 0.996 * k as f64 / 100.0;
        let want = (0..q).map(|i| i as f64 * (1.0 - g(u))).fold(f64::INFINITY, f64::min);
        assert!((j.eval(u) - want).abs() < 1e-9, "u = {u}: {} vs {want}", j.eval(u));
    }
    // The join lies strictly left of its deck translate.
    let ord = order(&j, &j.deck(1));
    assert_eq!(ord.relation, LineRelation::LeftOf);
}

#[test]
fn area_identity_matches_analytic_integrals() {
    // Fourier profile: the height integral is the mean coefficient.
    let h = MapFamily::Twist {
        profile: Profile::Fourier { mean: 0.3, cos: vec![0.1, -0.02], sin: vec![-0.05] },
    }
    .build()
    .unwrap();
    let a = area_between(&h, 0.0).unwrap();
    assert!((a - 0.3).abs() < 1e-6, "area = {a}");
    // Bump profile: 16 u^2 (1-u)^2 integrates to 8/15.
    let h = MapFamily::Twist { profile: Profile::unit_bump() }.build().unwrap();
    let a = area_between(&h, -0.7).unwrap();
    assert!((a - 8.0 / 15.0).abs() < 1e-5, "area = {a}");
}

#[test]
fn return_times_obey_three_distance_structure() {
    // Returns of a circle rotation to [0, rho) have at most two
    // distinct lengths here (floor(1/rho) and its successor), the deck
    // index is always 1, and the telescoped quotient converges at
    // rate 1/N.
    let rho = (3.0 - 5f64.sqrt()) / 2.0; // 1/phi^2 = 0.381966...
    let h = MapFamily::Rigid { rho }.build().unwrap();
    let stats = return_map_stats(
        &h,
        &EssentialLine::vertical(0.0),
        CoverPoint::new(0.05, 0.5),
        10_000,
    )
    .unwrap();
    assert!(stats.nu.iter().all(|&v| v == 2 || v == 3), "nu values {:?}", &stats.nu[..8]);
    assert!(stats.tau.iter().all(|&t| t == 1));
    let est = stats.rotation_estimate();
    assert!((est - rho).abs() < 1e-3, "estimate {est} vs {rho}");
}

#[test]
fn return_quotient_error_scales_like_inverse_horizon() {
    let rho = std::f64::consts::SQRT_2 - 1.0;
    let h = MapFamily::Rigid { rho }.build().unwrap();
    let line = EssentialLine::vertical(0.0);
    let z = CoverPoint::new(0.1, 0.5);
    for &n in &[100u64, 1_000, 10_000] {
        let stats = return_map_stats(&h, &line, z, n).unwrap();
        let err = (stats.rotation_estimate() - rho).abs();
        assert!(err < 6.0 / n as f64, "horizon {n}: error {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// order is antisymmetric and translation shifts are detected.
    #[test]
    fn order_antisymmetry_and_translates(seed in 0u64..1_000_000, d in 0.01f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_line(&mut rng);
        let b = random_line(&mut rng);
        let ab = order(&a, &b);
        let ba = order(&b, &a);
        match ab.relation {
            LineRelation::LeftOf => prop_assert_eq!(ba.relation, LineRelation::RightOf),
            LineRelation::RightOf => prop_assert_eq!(ba.relation, LineRelation::LeftOf),
            LineRelation::Intersecting => prop_assert_eq!(ba.relation, LineRelation::Intersecting),
        }
        prop_assert!((ab.min_gap - ba.min_gap).abs() < 1e-12);
        let shifted = order(&a, &a.translate(d));
        prop_assert_eq!(shifted.relation, LineRelation::LeftOf);
        prop_assert!((shifted.min_gap - d).abs() < 1e-12);
    }

    /// Joining is commutative and dominated by both arguments.
    #[test]
    fn vee_join_commutes_and_lower_bounds(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_line(&mut rng);
        let b = random_line(&mut rng);
        let ab = vee_join(&a, &b).unwrap();
        let ba = vee_join(&b, &a).unwrap();
        for k in 0..=40 {
            let u = k as f64 / 40.0;
            prop_assert!((ab.eval(u) - ba.eval(u)).abs() < 1e-9);
            prop_assert!(ab.eval(u) <= a.eval(u) + 1e-12);
            prop_assert!(ab.eval(u) <= b.eval(u) + 1e-12);
        }
    }

    /// Mapping a line through T h equals mapping through h then
    /// shifting by one, up to float dust.
    #[test]
    fn map_line_commutes_with_deck(seed in 0u64..1_000_000, rho in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let line = random_line(&mut rng);
        let h = MapFamily::Rigid { rho }.build().unwrap();
        let th = MapFamily::Composition {
            maps: vec![
                MapFamily::Rigid { rho },
                MapFamily::Rigid { rho: 1.0 },
            ],
        }
        .build()
        .unwrap();
        let img_shift = map_line(&h, &line).unwrap().translate(1.0);
        let img_th = map_line(&th, &line).unwrap();
        for k in 0..=20 {
            let u = 0.01 + 0.98 * k as f64 / 20.0;
            prop_assert!((img_shift.eval(u) - img_th.eval(u)).abs() < 1e-12);
        }
    }
}
