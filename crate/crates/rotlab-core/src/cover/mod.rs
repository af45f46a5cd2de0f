//! Lifts of annulus homeomorphisms to the universal cover.
//!
//! The annulus is S^1 x (0, 1); its cover is R x (0, 1) with deck
//! translation T(x, u) = (x + 1, u). A [`LiftedMap`] is a pipeline of
//! stages, each either a primitive map given by forward/inverse cores
//! or an integer deck translation. Primitive cores are evaluated on
//! the fractional part of x with the integer part added back, which
//! makes deck equivariance exact in floating point; deck stages add
//! integers directly. Powers and compositions concatenate stages, so
//! `power_with_deck(q, p)` evaluates through the identical operation
//! sequence as `iterate(z, q)` followed by the shift by -p.

mod profile;

pub use profile::Profile;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::midpoint;

const TAU: f64 = std::f64::consts::TAU;

/// Finite-difference step for Jacobian checks.
pub const JACOBIAN_FD_STEP: f64 = 1e-6;

/// A point of the universal cover R x (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub x: f64,
    pub u: f64,
}

impl CoverPoint {
    pub fn new(x: f64, u: f64) -> Self {
        CoverPoint { x, u }
    }
}

impl fmt::Display for CoverPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.u)
    }
}

/// Fixed conventions of the cover model: deck translation, circle
/// reduction and the distance used for recurrence in the annulus.
pub struct AnnulusModel;

impl AnnulusModel {
    /// Deck translation T^k.
    pub fn deck(z: CoverPoint, k: i64) -> CoverPoint {
        CoverPoint::new(z.x + k as f64, z.u)
    }

    /// Reduction of the horizontal coordinate mod 1, in [0, 1).
    pub fn reduce_x(x: f64) -> f64 {
        x - x.floor()
    }

    /// Distance between two circle positions (values mod 1).
    pub fn circle_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    }

    /// Distance of the projections of two cover points in the annulus.
    pub fn annulus_dist(a: CoverPoint, b: CoverPoint) -> f64 {
        Self::circle_dist(a.x, b.x).hypot(a.u - b.u)
    }

    pub fn in_annulus(u: f64) -> bool {
        u > 0.0 && u < 1.0
    }
}

type CoreFn = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

#[derive(Clone)]
enum Stage {
    /// A primitive map: cores act on (x mod 1, u) and return the image
    /// of that representative; the integer part rides along outside.
    Core {
        forward: Arc<CoreFn>,
        inverse: Arc<CoreFn>,
    },
    /// Deck translation T^k.
    Deck { k: i64 },
}

impl Stage {
    fn inverted(&self) -> Stage {
        match self {
            Stage::Core { forward, inverse } => Stage::Core {
                forward: inverse.clone(),
                inverse: forward.clone(),
            },
            Stage::Deck { k } => Stage::Deck { k: -k },
        }
    }
}

/// A lift of an annulus homeomorphism: commutes with the deck
/// translation and preserves the open strip 0 < u < 1.
#[derive(Clone)]
pub struct LiftedMap {
    stages: Vec<Stage>,
    label: String,
    claims_area_preserving: bool,
    claims_isotopic_identity: bool,
}

impl LiftedMap {
    /// Builds a primitive lift from forward and inverse cores. The
    /// cores receive (x mod 1, u) and must return the image of that
    /// representative point under the lift.
    pub fn from_core<F, G>(
        label: impl Into<String>,
        forward: F,
        inverse: G,
        claims_area_preserving: bool,
        claims_isotopic_identity: bool,
    ) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
        G: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        LiftedMap {
            stages: vec![Stage::Core {
                forward: Arc::new(forward),
                inverse: Arc::new(inverse),
            }],
            label: label.into(),
            claims_area_preserving,
            claims_isotopic_identity,
        }
    }

    /// The deck translation T^k as a map.
    pub fn deck(k: i64) -> Self {
        LiftedMap {
            stages: vec![Stage::Deck { k }],
            label: format!("T^{k}"),
            claims_area_preserving: true,
            claims_isotopic_identity: true,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn claims_area_preserving(&self) -> bool {
        self.claims_area_preserving
    }

    pub fn claims_isotopic_identity(&self) -> bool {
        self.claims_isotopic_identity
    }

    fn run(&self, z: CoverPoint, forward: bool) -> Result<CoverPoint> {
        if !AnnulusModel::in_annulus(z.u) || !z.x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "point {z} is outside the open cover strip"
            )));
        }
        let (mut x, mut u) = (z.x, z.u);
        let apply_stage = |stage: &Stage, x: f64, u: f64| -> (f64, f64) {
            match (stage, forward) {
                (Stage::Core { forward: f, .. }, true) | (Stage::Core { inverse: f, .. }, false) => {
                    let w = x.floor();
                    let (ix, iu) = f(x - w, u);
                    (ix + w, iu)
                }
                (Stage::Deck { k }, true) => (x + *k as f64, u),
                (Stage::Deck { k }, false) => (x - *k as f64, u),
            }
        };
        if forward {
            for s in &self.stages {
                let (nx, nu) = apply_stage(s, x, u);
                x = nx;
                u = nu;
                if !(nu > 0.0 && nu < 1.0) || !nx.is_finite() {
                    return Err(Error::DomainEscape { label: self.label.clone(), u: nu });
                }
            }
        } else {
            for s in self.stages.iter().rev() {
                let (nx, nu) = apply_stage(s, x, u);
                x = nx;
                u = nu;
                if !(nu > 0.0 && nu < 1.0) || !nx.is_finite() {
                    return Err(Error::DomainEscape { label: self.label.clone(), u: nu });
                }
            }
        }
        Ok(CoverPoint::new(x, u))
    }

    /// Forward evaluation of the lift.
    pub fn evaluate(&self, z: CoverPoint) -> Result<CoverPoint> {
        self.run(z, true)
    }

    /// Evaluation of the inverse lift.
    pub fn evaluate_inverse(&self, z: CoverPoint) -> Result<CoverPoint> {
        self.run(z, false)
    }

    /// n-fold iteration; negative n iterates the inverse.
    pub fn iterate(&self, z: CoverPoint, n: i64) -> Result<CoverPoint> {
        let mut z = z;
        for _ in 0..n.unsigned_abs() {
            z = if n >= 0 { self.evaluate(z)? } else { self.evaluate_inverse(z)? };
        }
        Ok(z)
    }

    /// Horizontal displacement p1(h(z)) - p1(z) of one forward step.
    pub fn displacement(&self, z: CoverPoint) -> Result<f64> {
        Ok(self.evaluate(z)?.x - z.x)
    }

    /// T^{-p} compose h^q. Evaluating the result runs the identical
    /// stage sequence as `iterate(z, q)` followed by x - p, so the two
    /// agree exactly, bit for bit.
    pub fn power_with_deck(&self, q: i64, p: i64) -> LiftedMap {
        let mut stages = Vec::with_capacity(self.stages.len() * q.unsigned_abs() as usize + 1);
        for _ in 0..q.unsigned_abs() {
            if q >= 0 {
                stages.extend(self.stages.iter().cloned());
            } else {
                stages.extend(self.stages.iter().rev().map(Stage::inverted));
            }
        }
        stages.push(Stage::Deck { k: -p });
        LiftedMap {
            stages,
            label: format!("({})^{} then T^{}", self.label, q, -p),
            claims_area_preserving: self.claims_area_preserving,
            claims_isotopic_identity: self.claims_isotopic_identity,
        }
    }

    /// The pipeline `self` followed by `next` (next compose self).
    pub fn then(&self, next: &LiftedMap) -> LiftedMap {
        let mut stages = self.stages.clone();
        stages.extend(next.stages.iter().cloned());
        LiftedMap {
            stages,
            label: format!("{} then {}", self.label, next.label),
            claims_area_preserving: self.claims_area_preserving && next.claims_area_preserving,
            claims_isotopic_identity: self.claims_isotopic_identity
                && next.claims_isotopic_identity,
        }
    }

    /// The inverse lift as a map of its own.
    pub fn inverse_map(&self) -> LiftedMap {
        LiftedMap {
            stages: self.stages.iter().rev().map(Stage::inverted).collect(),
            label: format!("({})^-1", self.label),
            claims_area_preserving: self.claims_area_preserving,
            claims_isotopic_identity: self.claims_isotopic_identity,
        }
    }
}

impl fmt::Debug for LiftedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiftedMap")
            .field("label", &self.label)
            .field("stages", &self.stages.len())
            .field("area_preserving", &self.claims_area_preserving)
            .field("isotopic_identity", &self.claims_isotopic_identity)
            .finish()
    }
}

fn sample_points(n: usize, seed: u64, margin: f64) -> Vec<CoverPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            CoverPoint::new(
                rng.gen::<f64>(),
                margin + (1.0 - 2.0 * margin) * rng.gen::<f64>(),
            )
        })
        .collect()
}

/// Largest |forward(x + k, u) - forward(x, u) - (k, 0)| over random
/// points and the given deck shifts.
pub fn max_equivariance_defect(
    map: &LiftedMap,
    shifts: &[i64],
    n_points: usize,
    seed: u64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in sample_points(n_points, seed, 1e-3) {
        let base = map.evaluate(z)?;
        for &k in shifts {
            let shifted = map.evaluate(AnnulusModel::deck(z, k))?;
            let dx = (shifted.x - base.x - k as f64).abs();
            let du = (shifted.u - base.u).abs();
            worst = worst.max(dx).max(du);
        }
    }
    Ok(worst)
}

/// Largest round-trip distance |inverse(forward(z)) - z| over random
/// points, in both composition orders.
pub fn max_inverse_defect(map: &LiftedMap, n_points: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in sample_points(n_points, seed, 1e-3) {
        let there = map.evaluate(z)?;
        let back = map.evaluate_inverse(there)?;
        worst = worst.max((back.x - z.x).abs()).max((back.u - z.u).abs());
        let there = map.evaluate_inverse(z)?;
        let back = map.evaluate(there)?;
        worst = worst.max((back.x - z.x).abs()).max((back.u - z.u).abs());
    }
    Ok(worst)
}

/// Largest |det J - 1| of the finite-difference Jacobian (central
/// differences, step [`JACOBIAN_FD_STEP`]) over random points.
pub fn max_jacobian_defect(map: &LiftedMap, n_points: usize, seed: u64) -> Result<f64> {
    let d = JACOBIAN_FD_STEP;
    let mut worst = 0.0f64;
    for z in sample_points(n_points, seed, 1e-2) {
        let xp = map.evaluate(CoverPoint::new(z.x + d, z.u))?;
        let xm = map.evaluate(CoverPoint::new(z.x - d, z.u))?;
        let up = map.evaluate(CoverPoint::new(z.x, z.u + d))?;
        let um = map.evaluate(CoverPoint::new(z.x, z.u - d))?;
        let j11 = (xp.x - xm.x) / (2.0 * d);
        let j21 = (xp.u - xm.u) / (2.0 * d);
        let j12 = (up.x - um.x) / (2.0 * d);
        let j22 = (up.u - um.u) / (2.0 * d);
        let det = j11 * j22 - j12 * j21;
        worst = worst.max((det - 1.0).abs());
    }
    Ok(worst)
}

fn default_step() -> f64 {
    1e-3
}

/// The built-in map families. Build one with [`MapFamily::build`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapFamily {
    /// Rigid rotation (x, u) -> (x + rho, u).
    Rigid { rho: f64 },
    /// Twist (x, u) -> (x + g(u), u).
    Twist { profile: Profile },
    /// Time-t map of the Hamiltonian H(x, u) = K(u) + eps b(u) cos(2 pi x),
    /// integrated by fixed-step implicit midpoint.
    Hamiltonian {
        kinetic: Profile,
        eps: f64,
        bump: Profile,
        t: f64,
        #[serde(default = "default_step")]
        step: f64,
    },
    /// Composition; maps apply in list order (first entry acts first).
    Composition { maps: Vec<MapFamily> },
}

impl MapFamily {
    /// The family precomposed with the rigid rotation R_theta, i.e.
    /// h compose R_theta.
    pub fn rotated_by(&self, theta: f64) -> MapFamily {
        MapFamily::Composition {
            maps: vec![MapFamily::Rigid { rho: theta }, self.clone()],
        }
    }

    pub fn build(&self) -> Result<LiftedMap> {
        match self {
            MapFamily::Rigid { rho } => {
                if !rho.is_finite() {
                    return Err(Error::InvalidParameter(format!("rigid rho = {rho}")));
                }
                let r = *rho;
                let s = *rho;
                Ok(LiftedMap::from_core(
                    format!("rigid({rho:.6})"),
                    move |x, u| (x + r, u),
                    move |x, u| (x - s, u),
                    true,
                    true,
                ))
            }
            MapFamily::Twist { profile } => {
                profile.validate()?;
                let g = profile.clone();
                let h = profile.clone();
                Ok(LiftedMap::from_core(
                    format!("twist({})", profile.label()),
                    move |x, u| (x + g.eval(u), u),
                    move |x, u| (x - h.eval(u), u),
                    true,
                    true,
                ))
            }
            MapFamily::Hamiltonian { kinetic, eps, bump, t, step } => {
                kinetic.validate()?;
                bump.validate()?;
                if !eps.is_finite() || !t.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "hamiltonian eps = {eps}, t = {t}"
                    )));
                }
                if !(*step > 0.0) || t.abs() / step > 1e7 {
                    return Err(Error::InvalidParameter(format!(
                        "hamiltonian step = {step} for t = {t}"
                    )));
                }
                // The u-equation is driven by eps b(u); b must vanish at
                // both ends or the flow leaves the open strip.
                if bump.eval(0.0).abs() > 1e-12 || bump.eval(1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(
                        "hamiltonian bump profile must vanish at u = 0 and u = 1".into(),
                    ));
                }
                let field = hamiltonian_field(kinetic.clone(), *eps, bump.clone());
                let back = field.clone();
                let (tf, hf) = (*t, *step);
                Ok(LiftedMap::from_core(
                    format!("hamiltonian(eps={eps:.4}, t={t:.4}, step={step:.0e})"),
                    move |x, u| midpoint::integrate(&*field, x, u, tf, hf),
                    move |x, u| midpoint::integrate(&*back, x, u, -tf, hf),
                    true,
                    true,
                ))
            }
            MapFamily::Composition { maps } => {
                if maps.is_empty() {
                    return Err(Error::InvalidParameter("empty composition".into()));
                }
                let built: Vec<LiftedMap> = maps.iter().map(|m| m.build()).collect::<Result<_>>()?;
                let mut it = built.into_iter();
                let mut acc = it.next().unwrap();
                for next in it {
                    acc = acc.then(&next);
                }
                Ok(acc)
            }
        }
    }
}

/// X_H = (dH/du, -dH/dx) for H = K(u) + eps b(u) cos(2 pi x).
pub(crate) fn hamiltonian_field(
    kinetic: Profile,
    eps: f64,
    bump: Profile,
) -> Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync> {
    Arc::new(move |x: f64, u: f64| {
        let xf = x - x.floor();
        let (s, c) = (TAU * xf).sin_cos();
        let dx = kinetic.derivative(u) + eps * bump.derivative(u) * c;
        let du = TAU * eps * bump.eval(u) * s;
        (dx, du)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(x: f64, u: f64) -> CoverPoint {
        CoverPoint::new(x, u)
    }

    #[test]
    fn rigid_evaluation_and_iteration() {
        let h = MapFamily::Rigid { rho: 0.3 }.build().unwrap();
        let w = h.evaluate(z(0.2, 0.5)).unwrap();
        assert!((w.x - 0.5).abs() < 1e-15 && w.u == 0.5);
        let w = h.iterate(z(0.0, 0.5), 10).unwrap();
        assert!((w.x - 3.0).abs() < 1e-14);
        let w = h.iterate(z(0.0, 0.5), -10).unwrap();
        assert!((w.x + 3.0).abs() < 1e-14);
    }

    #[test]
    fn equivariance_is_exact_for_builtin_families() {
        let maps = [
            MapFamily::Rigid { rho: std::f64::consts::SQRT_2 - 1.0 }.build().unwrap(),
            MapFamily::Twist { profile: Profile::Bernstein { coeffs: vec![0.0, 1.0] } }
                .build()
                .unwrap(),
            MapFamily::Hamiltonian {
                kinetic: Profile::Bernstein { coeffs: vec![0.0, 0.2] },
                eps: 0.01,
                bump: Profile::unit_bump(),
                t: 0.5,
                step: 1e-2,
            }
            .build()
            .unwrap(),
        ];
        for map in &maps {
            // The core sees the same representative for x and x + k, so
            // the only defect left is the rounding of the +-k shifts
            // themselves: a few ulps, far inside the 1e-12 contract.
            let d = max_equivariance_defect(map, &[-7, -1, 1, 3], 200, 11).unwrap();
            assert!(d < 1e-13, "{}: equivariance defect {d:e}", map.label());
        }
    }

    #[test]
    fn inverse_consistency_of_builtin_families() {
        let twist = MapFamily::Twist {
            profile: Profile::Fourier { mean: 0.3, cos: vec![0.05], sin: vec![0.02] },
        }
        .build()
        .unwrap();
        assert!(max_inverse_defect(&twist, 300, 5).unwrap() < 1e-12);

        let ham = MapFamily::Hamiltonian {
            kinetic: Profile::Bernstein { coeffs: vec![0.0, 0.35] },
            eps: 0.02,
            bump: Profile::unit_bump(),
            t: 1.0,
            step: 1e-3,
        }
        .build()
        .unwrap();
        assert!(max_inverse_defect(&ham, 20, 5).unwrap() < 1e-9);
    }

    #[test]
    fn jacobian_of_area_preserving_families() {
        let twist = MapFamily::Twist {
            profile: Profile::Bernstein { coeffs: vec![0.1, 0.6, 0.2] },
        }
        .build()
        .unwrap();
        assert!(max_jacobian_defect(&twist, 100, 3).unwrap() < 1e-6);

        let ham = MapFamily::Hamiltonian {
            kinetic: Profile::Bernstein { coeffs: vec![0.0, 0.3] },
            eps: 0.05,
            bump: Profile::unit_bump(),
            t: 0.5,
            step: 1e-3,
        }
        .build()
        .unwrap();
        assert!(max_jacobian_defect(&ham, 20, 3).unwrap() < 1e-6);
    }

    #[test]
    fn power_with_deck_matches_iterate_bitwise() {
        let h = MapFamily::Composition {
            maps: vec![
                MapFamily::Rigid { rho: 0.41421356 },
                MapFamily::Twist { profile: Profile::Bernstein { coeffs: vec![0.0, 0.01] } },
            ],
        }
        .build()
        .unwrap();
        let pw = h.power_with_deck(5, 2);
        for &(x, u) in &[(0.0, 0.5), (0.73, 0.21), (12345.678, 0.9), (-3.25, 0.04)] {
            let a = pw.evaluate(z(x, u)).unwrap();
            let b = h.iterate(z(x, u), 5).unwrap();
            assert_eq!(a.x.to_bits(), (b.x - 2.0).to_bits());
            assert_eq!(a.u.to_bits(), b.u.to_bits());
        }
        // Negative powers use the inverse chain.
        let pw = h.power_with_deck(-3, -1);
        let a = pw.evaluate(z(0.4, 0.6)).unwrap();
        let b = h.iterate(z(0.4, 0.6), -3).unwrap();
        assert_eq!(a.x.to_bits(), (b.x + 1.0).to_bits());
        assert_eq!(a.u.to_bits(), b.u.to_bits());
    }

    #[test]
    fn power_of_rational_rigid_is_near_identity() {
        let h = MapFamily::Rigid { rho: 1.0 / 3.0 }.build().unwrap();
        let pw = h.power_with_deck(3, 1);
        let w = pw.evaluate(z(0.2, 0.5)).unwrap();
        assert!((w.x - 0.2).abs() < 1e-12 && w.u == 0.5);
    }

    #[test]
    fn domain_escape_reported_with_label() {
        let bad = LiftedMap::from_core(
            "upward-shift",
            |x, u| (x, u + 0.6),
            |x, u| (x, u - 0.6),
            false,
            false,
        );
        match bad.evaluate(z(0.0, 0.5)) {
            Err(Error::DomainEscape { label, u }) => {
                assert_eq!(label, "upward-shift");
                assert!((u - 1.1).abs() < 1e-15);
            }
            other => panic!("expected DomainEscape, got {other:?}"),
        }
        // Input outside the strip is a precondition failure.
        assert!(matches!(bad.evaluate(z(0.0, 1.5)), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn composition_order_is_first_entry_first() {
        // Rigid then doubling twist: x -> (x + 0.25) + 2u.
        let fam = MapFamily::Composition {
            maps: vec![
                MapFamily::Rigid { rho: 0.25 },
                MapFamily::Twist { profile: Profile::Bernstein { coeffs: vec![0.0, 2.0] } },
            ],
        };
        let h = fam.build().unwrap();
        let w = h.evaluate(z(0.0, 0.25)).unwrap();
        assert!((w.x - 0.75).abs() < 1e-15);
        assert!(h.claims_area_preserving() && h.claims_isotopic_identity());
        // The inverse undoes both.
        let back = h.evaluate_inverse(w).unwrap();
        assert!((back.x - 0.0).abs() < 1e-15 && back.u == 0.25);
    }

    #[test]
    fn hamiltonian_bump_must_vanish_at_ends() {
        let fam = MapFamily::Hamiltonian {
            kinetic: Profile::constant(0.0),
            eps: 0.1,
            bump: Profile::constant(1.0),
            t: 1.0,
            step: 1e-3,
        };
        assert!(matches!(fam.build(), Err(Error::InvalidParameter(_))));
    }
}
