//! Time-t maps of vector fields on the strip, and the flow-specific
//! rotation facts: linearity of the rotation number in t, and the
//! slow-down bound for horizontal fields.
//!
//! Fields must be 1-periodic in x so their time-t maps descend to the
//! annulus; every built-in family is periodic by construction. Time
//! stepping is the implicit midpoint rule shared with the map
//! families, whose forward and backward integrations invert each other
//! at the method level.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{hamiltonian_field, LiftedMap, Profile};
use crate::error::{Error, Result};
use crate::midpoint;

/// Quintic transition 6t^5 - 15t^4 + 10t^3, clamped outside [0, 1].
/// C^2 at both ends: value, slope, and curvature vanish at 0 and
/// match the constant 1 at 1.
pub fn smootherstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// A vector field on the strip, 1-periodic in the x coordinate.
#[derive(Clone)]
pub struct VectorField {
    label: String,
    f: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
}

impl VectorField {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        VectorField { label: label.into(), f: Arc::new(f) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64, u: f64) -> (f64, f64) {
        (self.f)(x, u)
    }

    /// Largest |divergence| over an interior grid, by central
    /// differences. Built-in families are divergence free; use this to
    /// sanity-check custom fields before trusting area claims.
    pub fn max_divergence(&self, n_grid: usize) -> f64 {
        let h = 1e-5;
        let mut worst = 0.0f64;
        for iu in 0..n_grid {
            let u = 2.0 * h + (1.0 - 4.0 * h) * (iu as f64 + 0.5) / n_grid as f64;
            for ix in 0..n_grid {
                let x = (ix as f64 + 0.5) / n_grid as f64;
                let (vxp, _) = self.eval(x + h, u);
                let (vxm, _) = self.eval(x - h, u);
                let (_, vup) = self.eval(x, u + h);
                let (_, vum) = self.eval(x, u - h);
                worst = worst.max(((vxp - vxm) + (vup - vum)).abs() / (2.0 * h));
            }
        }
        worst
    }

    /// Largest |horizontal speed| over a grid.
    pub fn max_speed(&self, n_grid: usize) -> f64 {
        let mut worst = 0.0f64;
        for iu in 0..=n_grid {
            let u = (iu as f64 + 0.5) / (n_grid as f64 + 1.0);
            for ix in 0..=n_grid {
                let x = ix as f64 / (n_grid as f64 + 1.0);
                worst = worst.max(self.eval(x, u).0.abs());
            }
        }
        worst
    }

    /// Largest |vertical speed| over a grid.
    pub fn max_vertical_speed(&self, n_grid: usize) -> f64 {
        let mut worst = 0.0f64;
        for iu in 0..=n_grid {
            let u = (iu as f64 + 0.5) / (n_grid as f64 + 1.0);
            for ix in 0..=n_grid {
                let x = ix as f64 / (n_grid as f64 + 1.0);
                worst = worst.max(self.eval(x, u).1.abs());
            }
        }
        worst
    }
}

/// Horizontal plateau field transported from the model strip by tanh:
/// unit speed on the core, zero off the support, smootherstep ramps
/// between. Both bands are symmetric about u = 1/2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CutoffFamily {
    s: f64,
}

impl CutoffFamily {
    /// Needs s >= 1, which keeps the support inside (0, 1) with room
    /// to spare and the ramps well separated from the core.
    pub fn new(s: f64) -> Result<Self> {
        if !(s >= 1.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("cutoff scale s = {s}, need s >= 1")));
        }
        Ok(CutoffFamily { s })
    }

    pub fn scale(&self) -> f64 {
        self.s
    }

    /// Band where the speed is exactly 1.
    pub fn core(&self) -> (f64, f64) {
        let t = self.s.tanh();
        ((1.0 - t) / 2.0, (1.0 + t) / 2.0)
    }

    /// Band outside of which the speed is exactly 0; the core at
    /// doubled scale.
    pub fn support(&self) -> (f64, f64) {
        let t = (2.0 * self.s).tanh();
        ((1.0 - t) / 2.0, (1.0 + t) / 2.0)
    }

    /// Horizontal speed profile at height u.
    pub fn speed(&self, u: f64) -> f64 {
        let (clo, chi) = self.core();
        let (slo, shi) = self.support();
        if u >= clo && u <= chi {
            1.0
        } else if u <= slo || u >= shi {
            0.0
        } else if u < clo {
            smootherstep((u - slo) / (clo - slo))
        } else {
            smootherstep((shi - u) / (shi - chi))
        }
    }

    /// Exact height integral of the speed: tanh(s)/1 on the core plus
    /// half of each ramp, i.e. (tanh s + tanh 2s) / 2.
    pub fn mean_speed(&self) -> f64 {
        (self.s.tanh() + (2.0 * self.s).tanh()) / 2.0
    }

    pub fn field(&self) -> VectorField {
        let fam = *self;
        VectorField::new(format!("cutoff[s={}]", self.s), move |_x, u| (fam.speed(u), 0.0))
    }
}

/// Built-in field families, all divergence free.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldFamily {
    /// Constant horizontal speed everywhere.
    Uniform { speed: f64 },
    /// Horizontal speed given by a height profile: X = (g(u), 0).
    Sheared { profile: Profile },
    /// Plateau field of [`CutoffFamily`].
    Cutoff { s: f64 },
    /// Hamiltonian field of H = K(u) + eps b(u) cos(2 pi x).
    Wave { kinetic: Profile, eps: f64, bump: Profile },
}

impl FieldFamily {
    pub fn build(&self) -> Result<VectorField> {
        match self {
            FieldFamily::Uniform { speed } => {
                if !speed.is_finite() {
                    return Err(Error::InvalidParameter("non-finite uniform speed".into()));
                }
                let v = *speed;
                Ok(VectorField::new(format!("uniform[{v}]"), move |_x, _u| (v, 0.0)))
            }
            FieldFamily::Sheared { profile } => {
                profile.validate()?;
                let g = profile.clone();
                Ok(VectorField::new(
                    format!("sheared[{}]", profile.label()),
                    move |_x, u| (g.eval(u), 0.0),
                ))
            }
            FieldFamily::Cutoff { s } => Ok(CutoffFamily::new(*s)?.field()),
            FieldFamily::Wave { kinetic, eps, bump } => {
                kinetic.validate()?;
                bump.validate()?;
                if !eps.is_finite() {
                    return Err(Error::InvalidParameter("non-finite wave amplitude".into()));
                }
                let f = hamiltonian_field(kinetic.clone(), *eps, bump.clone());
                Ok(VectorField::new(
                    format!("wave[{}, eps={eps}, {}]", kinetic.label(), bump.label()),
                    move |x, u| f(x, u),
                ))
            }
        }
    }
}

/// Largest step count accepted by a single time-t map.
const MAX_FLOW_STEPS: f64 = 1e7;

/// Time-t map of the field as a lifted annulus map, with the backward
/// integration as inverse. The field must be divergence free for the
/// area-preservation claim to be meaningful; all built-in families
/// are.
pub fn flow_map(field: &VectorField, t: f64, step: f64) -> Result<LiftedMap> {
    if !(step > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("flow needs step > 0, got t={t} step={step}")));
    }
    if t.abs() / step > MAX_FLOW_STEPS {
        return Err(Error::InvalidParameter(format!(
            "flow t={t} at step={step} needs more than {MAX_FLOW_STEPS} steps"
        )));
    }
    let ff = field.clone();
    let fb = field.clone();
    Ok(LiftedMap::from_core(
        format!("flow[{}, t={t}]", field.label()),
        move |x, u| midpoint::integrate(&*ff.f, x, u, t, step),
        move |x, u| midpoint::integrate(&*fb.f, x, u, -t, step),
        true,
        true,
    ))
}

/// Rotation-number linearity of a flow: means of the time-t rotation
/// sets against the least-squares line through the origin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowLinearityReport {
    pub ts: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Slope of the best line through the origin.
    pub slope: f64,
    /// Largest |mean_t - slope * t|.
    pub max_deviation: f64,
}

/// Estimates the rotation number of the time-t map for each t and fits
/// rho(t) = slope * t. Sample seeds are shared across the ts, so for
/// fields with horizontal-only transport the deviations cancel to
/// float dust instead of Monte Carlo noise.
pub fn check_flow_linearity(
    field: &VectorField,
    ts: &[f64],
    step: f64,
    params: &crate::rotation::SampleParams,
) -> Result<FlowLinearityReport> {
    if ts.is_empty() || ts.iter().any(|t| !(t.abs() > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("linearity check needs nonzero finite ts".into()));
    }
    let mut means = Vec::with_capacity(ts.len());
    let mut stderrs = Vec::with_capacity(ts.len());
    for &t in ts {
        let map = flow_map(field, t, step)?;
        let set = crate::rotation::rotation_set_with(&map, params)?;
        means.push(set.mean);
        stderrs.push(set.stderr);
    }
    let num: f64 = ts.iter().zip(&means).map(|(t, m)| t * m).sum();
    let den: f64 = ts.iter().map(|t| t * t).sum();
    let slope = num / den;
    let max_deviation = ts
        .iter()
        .zip(&means)
        .map(|(t, m)| (m - slope * t).abs())
        .fold(0.0f64, f64::max);
    Ok(FlowLinearityReport { ts: ts.to_vec(), means, stderrs, slope, max_deviation })
}

/// Evidence for the slow-down bound on horizontal fields: no orbit of
/// the time-t map outruns t times the top speed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlowdownReport {
    /// Top |horizontal speed| over the measuring grid.
    pub max_speed: f64,
    /// Largest |displacement| - t * max_speed over the samples;
    /// non-positive (up to float dust) when the bound holds.
    pub worst_excess: f64,
    /// Smallest signed displacement seen; for non-negative fields this
    /// stays non-negative up to float dust.
    pub min_displacement: f64,
    pub samples: usize,
}

/// Samples random (point, time) pairs and integrates the field,
/// comparing each displacement against t * max_speed. The field must
/// be horizontal (zero vertical component); heights then stay fixed
/// and the displacement is the time integral of a speed bounded by the
/// top speed.
pub fn check_slowdown(
    field: &VectorField,
    n_samples: usize,
    t_max: f64,
    step: f64,
    seed: u64,
) -> Result<SlowdownReport> {
    if n_samples == 0 || !(t_max > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidParameter(
            "slowdown check needs samples >= 1, t_max > 0, step > 0".into(),
        ));
    }
    let vertical = field.max_vertical_speed(64);
    if vertical > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "slow-down bound needs a horizontal field; |vertical| reaches {vertical:e}"
        )));
    }
    let max_speed = field.max_speed(512);
    let rows: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x: f64 = rng.gen();
            let u: f64 = rng.gen::<f64>().clamp(1e-9, 1.0 - 1e-9);
            let t = t_max * rng.gen::<f64>().clamp(1e-9, 1.0);
            let (x1, _) = midpoint::integrate(&*field.f, x, u, t, step);
            let disp = x1 - x;
            (disp.abs() - t * max_speed, disp)
        })
        .collect();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut min_displacement = f64::INFINITY;
    for &(e, d) in &rows {
        worst_excess = worst_excess.max(e);
        min_displacement = min_displacement.min(d);
    }
    Ok(SlowdownReport { max_speed, worst_excess, min_displacement, samples: n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::CoverPoint;
    use crate::rotation::{RecurrenceOptions, SampleParams};

    #[test]
    fn smootherstep_shape() {
        assert_eq!(smootherstep(-1.0), 0.0);
        assert_eq!(smootherstep(0.0), 0.0);
        assert_eq!(smootherstep(1.0), 1.0);
        assert_eq!(smootherstep(2.0), 1.0);
        assert!((smootherstep(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = smootherstep(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn cutoff_geometry_and_mean() {
        let fam = CutoffFamily::new(1.0).unwrap();
        let (clo, chi) = fam.core();
        let (slo, shi) = fam.support();
        assert!((clo - (1.0 - 1f64.tanh()) / 2.0).abs() < 1e-15);
        assert!((shi - (1.0 + 2f64.tanh()) / 2.0).abs() < 1e-15);
        assert!(slo < clo && clo < chi && chi < shi);
        assert_eq!(fam.speed(0.5), 1.0);
        assert_eq!(fam.speed(clo + 1e-9), 1.0);
        assert_eq!(fam.speed(slo - 1e-9), 0.0);
        assert_eq!(fam.speed(0.001), 0.0);
        // Quadrature against the closed-form mean.
        let n = 200_000;
        let quad: f64 = (0..n).map(|i| fam.speed((i as f64 + 0.5) / n as f64)).sum::<f64>()
            / n as f64;
        assert!((quad - fam.mean_speed()).abs() < 1e-9, "quad = {quad}");
        assert!(CutoffFamily::new(0.5).is_err());
    }

    #[test]
    fn uniform_flow_translates_exactly() {
        let field = FieldFamily::Uniform { speed: 0.3 }.build().unwrap();
        let map = flow_map(&field, 2.0, 1e-2).unwrap();
        let z = CoverPoint::new(0.25, 0.6);
        let w = map.evaluate(z).unwrap();
        assert!((w.x - 0.85).abs() < 1e-12);
        assert_eq!(w.u, 0.6);
        let back = map.evaluate_inverse(w).unwrap();
        assert!((back.x - z.x).abs() < 1e-12);
    }

    #[test]
    fn wave_field_is_divergence_free() {
        let field = FieldFamily::Wave {
            kinetic: Profile::Bernstein { coeffs: vec![0.2, 0.45] },
            eps: 0.05,
            bump: Profile::unit_bump(),
        }
        .build()
        .unwrap();
        assert!(field.max_divergence(40) < 1e-5);
    }

    #[test]
    fn linearity_for_uniform_field_is_exact() {
        let field = FieldFamily::Uniform { speed: 0.37 }.build().unwrap();
        let params = SampleParams {
            n_samples: 50,
            seed: 3,
            recurrence: RecurrenceOptions { max_iter: 400, ..Default::default() },
        };
        let rep = check_flow_linearity(&field, &[0.25, 0.5, 1.0, 2.0], 1e-2, &params).unwrap();
        assert!((rep.slope - 0.37).abs() < 1e-12, "slope = {}", rep.slope);
        assert!(rep.max_deviation < 1e-12, "deviation = {}", rep.max_deviation);
    }

    #[test]
    fn linearity_for_cutoff_field_matches_mean_speed() {
        let fam = CutoffFamily::new(1.5).unwrap();
        let params = SampleParams {
            n_samples: 300,
            seed: 17,
            recurrence: RecurrenceOptions { max_iter: 600, ..Default::default() },
        };
        let rep = check_flow_linearity(&fam.field(), &[0.25, 0.5, 1.0], 2.5e-2, &params).unwrap();
        assert!(rep.max_deviation < 1e-10, "deviation = {}", rep.max_deviation);
        assert!((rep.slope - fam.mean_speed()).abs() < 2e-3, "slope = {}", rep.slope);
    }

    #[test]
    fn slowdown_bound_holds_for_cutoff() {
        let fam = CutoffFamily::new(1.0).unwrap();
        let rep = check_slowdown(&fam.field(), 2_000, 2.0, 1e-2, 5).unwrap();
        assert!((rep.max_speed - 1.0).abs() < 1e-12);
        assert!(rep.worst_excess <= 1e-9, "excess = {}", rep.worst_excess);
        assert!(rep.min_displacement >= -1e-9, "min disp = {}", rep.min_displacement);
    }

    #[test]
    fn slowdown_rejects_non_horizontal_fields() {
        let field = FieldFamily::Wave {
            kinetic: Profile::Bernstein { coeffs: vec![0.2, 0.45] },
            eps: 0.05,
            bump: Profile::unit_bump(),
        }
        .build()
        .unwrap();
        match check_slowdown(&field, 10, 1.0, 1e-2, 1) {
            Err(Error::InvalidParameter(_)) => {}
            other => panic!("expected InvalidParameter, got {other:?}"),
        }
    }
}
