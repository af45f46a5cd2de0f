//! Rotation numbers for lifted annulus maps.
//!
//! Pointwise estimates follow recurrence: the orbit is scanned for
//! returns to within `recur_tol` of the start in the annulus metric,
//! and the horizontal displacement quotient is averaged over return
//! times. Set-level estimates sample the fundamental domain; the mean
//! over samples uses the plain Birkhoff quotient, which for an
//! area-preserving lift is an unbiased estimate of the mean rotation
//! number at every horizon, not just asymptotically.
//!
//! All randomness comes from per-sample ChaCha streams keyed by
//! (seed, sample index), so results do not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{AnnulusModel, CoverPoint, LiftedMap};
use crate::error::{Error, Result};
use crate::lines::{map_line, order, EssentialLine, LineRelation};

/// Default annulus-metric radius counting a step as a return.
pub const DEFAULT_RECUR_TOL: f64 = 1e-2;
/// Default spread of return quotients below which a point converged.
pub const DEFAULT_SPREAD_TOL: f64 = 1e-3;
/// Lifts whose sampled displacement exceeds this are rejected.
pub const DISPLACEMENT_BOUND: f64 = 1e6;

/// Controls for a single-orbit recurrence scan.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecurrenceOptions {
    /// Number of forward steps scanned.
    pub max_iter: u64,
    /// Annulus distance to the start below which a step is a return.
    pub recur_tol: f64,
    /// Max spread of return quotients for the estimate to converge.
    pub spread_tol: f64,
    /// Also scan the backward orbit and require the two estimates to
    /// agree within `spread_tol`.
    pub backward: bool,
}

impl Default for RecurrenceOptions {
    fn default() -> Self {
        RecurrenceOptions {
            max_iter: 100_000,
            recur_tol: DEFAULT_RECUR_TOL,
            spread_tol: DEFAULT_SPREAD_TOL,
            backward: false,
        }
    }
}

/// Rotation number estimate of a single orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointRotation {
    /// Mean displacement quotient over return times; the plain
    /// quotient when the orbit never returned.
    pub value: f64,
    /// End-to-end Birkhoff quotient (x_N - x_0) / N.
    pub plain_quotient: f64,
    /// Returns happened and their quotients agree within spread_tol
    /// (and, with `backward`, both directions agree).
    pub converged: bool,
    /// No step came within recur_tol of the start.
    pub no_return: bool,
    /// Closest annulus-metric approach to the start over the scan.
    pub recurrence_gap: f64,
    /// Steps at which the orbit returned.
    pub return_times: Vec<u64>,
    /// Backward estimate when `backward` was set and returns happened.
    pub backward_value: Option<f64>,
}

struct ScanStats {
    value: f64,
    plain: f64,
    gap: f64,
    spread_ok: bool,
    returns: u64,
    times: Vec<u64>,
}

/// One-directional recurrence scan. `record_times` controls whether
/// individual return times are kept (the set-level sampler drops them
/// to keep memory flat).
fn scan_orbit(
    map: &LiftedMap,
    z0: CoverPoint,
    opts: &RecurrenceOptions,
    forward: bool,
    record_times: bool,
) -> Result<ScanStats> {
    let mut z = z0;
    let mut gap = f64::INFINITY;
    let mut sum_q = 0.0;
    let mut min_q = f64::INFINITY;
    let mut max_q = f64::NEG_INFINITY;
    let mut returns = 0u64;
    let mut times = Vec::new();
    let mut plain = 0.0;
    for n in 1..=opts.max_iter {
        z = if forward { map.evaluate(z)? } else { map.evaluate_inverse(z)? };
        let d = AnnulusModel::annulus_dist(z, z0);
        gap = gap.min(d);
        // Forward displacement per step: along the backward orbit the
        // start is n forward steps ahead of z.
        let q = if forward { (z.x - z0.x) / n as f64 } else { (z0.x - z.x) / n as f64 };
        if n == opts.max_iter {
            plain = q;
        }
        if d < opts.recur_tol {
            returns += 1;
            sum_q += q;
            min_q = min_q.min(q);
            max_q = max_q.max(q);
            if record_times {
                times.push(n);
            }
        }
    }
    let (value, spread_ok) = if returns > 0 {
        (sum_q / returns as f64, max_q - min_q <= opts.spread_tol)
    } else {
        (plain, false)
    };
    Ok(ScanStats { value, plain, gap, spread_ok, returns, times })
}

/// Rotation number of the orbit of z, by recurrence.
pub fn point_rotation(map: &LiftedMap, z: CoverPoint, opts: &RecurrenceOptions) -> Result<PointRotation> {
    if opts.max_iter == 0 || !(opts.recur_tol > 0.0) || !(opts.spread_tol > 0.0) {
        return Err(Error::InvalidParameter(
            "recurrence scan needs max_iter >= 1 and positive tolerances".into(),
        ));
    }
    let fwd = scan_orbit(map, z, opts, true, true)?;
    let mut converged = fwd.returns > 0 && fwd.spread_ok;
    let mut backward_value = None;
    if opts.backward {
        let bwd = scan_orbit(map, z, opts, false, false)?;
        if bwd.returns > 0 {
            backward_value = Some(bwd.value);
            converged = converged
                && bwd.spread_ok
                && (fwd.value - bwd.value).abs() <= opts.spread_tol;
        } else {
            converged = false;
        }
    }
    Ok(PointRotation {
        value: fwd.value,
        plain_quotient: fwd.plain,
        converged,
        no_return: fwd.returns == 0,
        recurrence_gap: fwd.gap,
        return_times: fwd.times,
        backward_value,
    })
}

/// One sample of a rotation set estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SampleRotation {
    pub index: usize,
    pub x0: f64,
    pub u0: f64,
    /// Return-based value when the sample converged, plain quotient
    /// otherwise.
    pub value: f64,
    pub converged: bool,
}

/// Monte Carlo estimate of the rotation set and the mean rotation
/// number of a lift.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RotationSet {
    /// [min, max] over the converged samples' values.
    pub interval: [f64; 2],
    /// Mean of the plain Birkhoff quotients over all samples.
    pub mean: f64,
    /// Standard error of that mean.
    pub stderr: f64,
    pub converged: usize,
    pub total: usize,
    pub samples: Vec<SampleRotation>,
}

/// Full parameter set for [`rotation_set_with`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SampleParams {
    pub n_samples: usize,
    pub seed: u64,
    pub recurrence: RecurrenceOptions,
}

/// Rotation set over `n_samples` initial points with default
/// recurrence tolerances.
pub fn rotation_set(map: &LiftedMap, n_samples: usize, max_iter: u64, seed: u64) -> Result<RotationSet> {
    rotation_set_with(
        map,
        &SampleParams {
            n_samples,
            seed,
            recurrence: RecurrenceOptions { max_iter, ..RecurrenceOptions::default() },
        },
    )
}

/// Rotation set estimate.
///
/// Initial points use one ChaCha stream per sample index: x uniform in
/// [0, 1), u stratified over (0, 1) with one jittered point per
/// stratum. Stratification makes the sample mean of any u-smooth
/// observable converge at O(n^{-3/2}) instead of O(n^{-1/2}) while
/// keeping every sample independent of worker count.
///
/// Errors with InsufficientConvergence when fewer than half the
/// samples converge; the interval would not be trustworthy.
pub fn rotation_set_with(map: &LiftedMap, params: &SampleParams) -> Result<RotationSet> {
    let n = params.n_samples;
    if n == 0 {
        return Err(Error::InvalidParameter("rotation_set needs n_samples >= 1".into()));
    }
    let rows: Vec<(SampleRotation, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let x: f64 = rng.gen();
            let xi: f64 = rng.gen::<f64>().clamp(1e-12, 1.0 - 1e-12);
            let u = (i as f64 + xi) / n as f64;
            let scan = scan_orbit(map, CoverPoint::new(x, u), &params.recurrence, true, false)?;
            let converged = scan.returns > 0 && scan.spread_ok;
            Ok((
                SampleRotation { index: i, x0: x, u0: u, value: scan.value, converged },
                scan.plain,
            ))
        })
        .collect::<Result<_>>()?;
    // Aggregation is sequential over the ordered rows so the numbers
    // are independent of the rayon worker count.
    let total = rows.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut converged = 0usize;
    let mut sum = 0.0;
    for (s, plain) in &rows {
        if s.converged {
            converged += 1;
            lo = lo.min(s.value);
            hi = hi.max(s.value);
        }
        sum += plain;
    }
    let mean = sum / total as f64;
    let var = rows.iter().map(|(_, p)| (p - mean) * (p - mean)).sum::<f64>()
        / (total.max(2) - 1) as f64;
    let stderr = (var / total as f64).sqrt();
    if converged * 2 < total {
        return Err(Error::InsufficientConvergence { converged, total });
    }
    Ok(RotationSet {
        interval: [lo, hi],
        mean,
        stderr,
        converged,
        total,
        samples: rows.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Rotation set defects of the two structural identities
/// Rot(T^k h) = Rot(h) + k and Rot(h^q) = q Rot(h), measured with
/// matched sample seeds so shared orbit noise cancels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prop12Report {
    pub k: i64,
    pub q: i64,
    pub base: RotationSet,
    pub translated: RotationSet,
    pub powered: RotationSet,
    /// Max defect over interval endpoints and mean for T^k h.
    pub translate_defect: f64,
    /// Max defect over interval endpoints and mean for h^q.
    pub power_defect: f64,
}

pub fn check_prop12(map: &LiftedMap, k: i64, q: i64, params: &SampleParams) -> Result<Prop12Report> {
    if q == 0 {
        return Err(Error::InvalidParameter("check_prop12 needs q != 0".into()));
    }
    let translated = map.then(&LiftedMap::deck(k));
    let powered = map.power_with_deck(q, 0);
    let base_set = rotation_set_with(map, params)?;
    let tr_set = rotation_set_with(&translated, params)?;
    let pw_set = rotation_set_with(&powered, params)?;
    let kf = k as f64;
    let translate_defect = (tr_set.interval[0] - base_set.interval[0] - kf)
        .abs()
        .max((tr_set.interval[1] - base_set.interval[1] - kf).abs())
        .max((tr_set.mean - base_set.mean - kf).abs());
    let qf = q as f64;
    let (elo, ehi) = if q > 0 {
        (qf * base_set.interval[0], qf * base_set.interval[1])
    } else {
        (qf * base_set.interval[1], qf * base_set.interval[0])
    };
    let power_defect = (pw_set.interval[0] - elo)
        .abs()
        .max((pw_set.interval[1] - ehi).abs())
        .max((pw_set.mean - qf * base_set.mean).abs());
    Ok(Prop12Report {
        k,
        q,
        base: base_set,
        translated: tr_set,
        powered: pw_set,
        translate_defect,
        power_defect,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl From<&RotationSet> for MeanStderr {
    fn from(s: &RotationSet) -> Self {
        MeanStderr { mean: s.mean, stderr: s.stderr }
    }
}

/// Mean rotation numbers of f, g and the composition f after g, with
/// the additivity defect rho(fg) - rho(f) - rho(g).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorphismReport {
    pub composed: MeanStderr,
    pub outer: MeanStderr,
    pub inner: MeanStderr,
    pub defect: f64,
    pub combined_stderr: f64,
}

/// Largest |displacement| over a coarse grid, used to reject lifts
/// whose displacement blows up near the boundary circles.
fn max_grid_displacement(map: &LiftedMap) -> Result<f64> {
    let mut worst = 0.0f64;
    for iu in 0..33 {
        let u = 1e-3 + (1.0 - 2e-3) * iu as f64 / 32.0;
        for ix in 0..33 {
            let x = ix as f64 / 33.0;
            let d = map.displacement(CoverPoint::new(x, u))?;
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Checks additivity of the mean rotation number under composition:
/// rho(f o g) = rho(f) + rho(g) for area-preserving lifts. Sampling is
/// seed-matched across the three sets so the defect of families with
/// commuting displacement structure (rigid and twist) collapses to
/// float dust rather than Monte Carlo noise.
pub fn check_morphism(f: &LiftedMap, g: &LiftedMap, params: &SampleParams) -> Result<MorphismReport> {
    for map in [f, g] {
        let observed = max_grid_displacement(map)?;
        if observed > DISPLACEMENT_BOUND {
            return Err(Error::UnboundedDisplacement { observed, bound: DISPLACEMENT_BOUND });
        }
    }
    let composed = g.then(f); // f after g
    let set_fg = rotation_set_with(&composed, params)?;
    let set_f = rotation_set_with(f, params)?;
    let set_g = rotation_set_with(g, params)?;
    let defect = set_fg.mean - set_f.mean - set_g.mean;
    let combined_stderr =
        (set_fg.stderr.powi(2) + set_f.stderr.powi(2) + set_g.stderr.powi(2)).sqrt();
    Ok(MorphismReport {
        composed: (&set_fg).into(),
        outer: (&set_f).into(),
        inner: (&set_g).into(),
        defect,
        combined_stderr,
    })
}

/// First-return bookkeeping across an essential line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReturnStats {
    /// Steps between consecutive returns to the fundamental domain.
    pub nu: Vec<u64>,
    /// Deck index of each return: which translate of the domain the
    /// orbit landed in.
    pub tau: Vec<i64>,
    pub nu_star: f64,
    pub tau_star: f64,
    /// Steps actually scanned.
    pub steps: u64,
}

impl ReturnStats {
    /// tau* / nu*, the return-map estimate of the rotation number.
    pub fn rotation_estimate(&self) -> f64 {
        self.tau_star / self.nu_star
    }
}

/// Scans the orbit of z through the fundamental domain bounded by the
/// line, its image, and its deck translate, recording return times nu
/// and deck indices tau.
///
/// The domain is U = { (x, u) : gamma(u) < x < min(gamma_h(u),
/// gamma(u) + 1) }. After each return to T^tau(U) the point is pulled
/// back by T^{-tau}, so every segment is measured against the same
/// strip.
pub fn return_map_stats(
    map: &LiftedMap,
    line: &EssentialLine,
    z: CoverPoint,
    horizon: u64,
) -> Result<ReturnStats> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("return_map_stats needs horizon >= 1".into()));
    }
    let image = map_line(map, line)?;
    let ord = order(line, &image);
    if ord.relation != LineRelation::LeftOf {
        return Err(Error::LineNotFree(format!(
            "image must lie strictly right of the line, order is {:?} (min gap {:e})",
            ord.relation, ord.min_gap
        )));
    }
    let in_domain = |p: CoverPoint| -> bool {
        let g = line.eval(p.u);
        p.x > g && p.x < image.eval(p.u) && p.x < g + 1.0
    };
    if !AnnulusModel::in_annulus(z.u) || !in_domain(z) {
        return Err(Error::NotInU { x: z.x, u: z.u });
    }
    let mut cur = z;
    let mut nu = Vec::new();
    let mut tau = Vec::new();
    let mut since_last = 0u64;
    for _ in 0..horizon {
        cur = map.evaluate(cur)?;
        since_last += 1;
        let k = (cur.x - line.eval(cur.u)).floor();
        let pulled = CoverPoint::new(cur.x - k, cur.u);
        if in_domain(pulled) {
            nu.push(since_last);
            tau.push(k as i64);
            since_last = 0;
            cur = pulled;
        }
    }
    if nu.is_empty() {
        return Err(Error::NoReturns { horizon });
    }
    let nu_star = nu.iter().map(|&v| v as f64).sum::<f64>() / nu.len() as f64;
    let tau_star = tau.iter().map(|&v| v as f64).sum::<f64>() / tau.len() as f64;
    Ok(ReturnStats { nu, tau, nu_star, tau_star, steps: horizon })
}
