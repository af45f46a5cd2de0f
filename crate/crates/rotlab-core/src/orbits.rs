//! Periodic orbit search: points with h^q(z) = z + (p, 0).
//!
//! The search minimizes F(z) = T^{-p} h^q (z) - z. Twist-like maps
//! make the plain Newton matrix singular (the vertical component of F
//! vanishes identically), so the solver is a damped Newton iteration
//! with Levenberg-Marquardt regularization, seeded at grid cells where
//! both components of F straddle zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{CoverPoint, LiftedMap, MapFamily, JACOBIAN_FD_STEP};
use crate::error::{Error, Result};
use crate::farey::{fractions_in_interval, Rational};
use crate::rotation::{rotation_set_with, SampleParams};

/// Controls for periodic orbit searches.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrbitSearchOptions {
    /// Cells per circle direction of the seeding grid.
    pub grid: usize,
    /// Upper grid size for doubling searches.
    pub grid_cap: usize,
    /// Newton steps per seed.
    pub max_newton: usize,
    /// |F| below which a point counts as a periodic orbit.
    pub residual_tol: f64,
    /// Largest candidate denominator for interval-driven searches.
    pub max_den: i64,
}

impl Default for OrbitSearchOptions {
    fn default() -> Self {
        OrbitSearchOptions {
            grid: 64,
            grid_cap: 512,
            max_newton: 50,
            residual_tol: 1e-10,
            max_den: 64,
        }
    }
}

/// Outcome of a (p, q) orbit search. `p` and `q` are stored in lowest
/// terms. On `found`, `point` satisfies h^q(point) = point + (p, 0) up
/// to `residual`, which is recomputed from scratch after the solve; on
/// failure they record the best attempt.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub p: i64,
    pub q: i64,
    pub point: CoverPoint,
    pub residual: f64,
    pub found: bool,
    /// Seeding grid size in effect when the search ended.
    pub resolution: usize,
}

/// F(z) and its finite-difference Jacobian under phi = T^{-p} h^q.
fn orbit_residual(phi: &LiftedMap, z: CoverPoint) -> Result<(f64, f64)> {
    let w = phi.evaluate(z)?;
    Ok((w.x - z.x, w.u - z.u))
}

fn orbit_jacobian(phi: &LiftedMap, z: CoverPoint) -> Result<[[f64; 2]; 2]> {
    let h = JACOBIAN_FD_STEP;
    let xp = orbit_residual(phi, CoverPoint::new(z.x + h, z.u))?;
    let xm = orbit_residual(phi, CoverPoint::new(z.x - h, z.u))?;
    let up = orbit_residual(phi, CoverPoint::new(z.x, (z.u + h).min(1.0 - 1e-12)))?;
    let um = orbit_residual(phi, CoverPoint::new(z.x, (z.u - h).max(1e-12)))?;
    let du = (z.u + h).min(1.0 - 1e-12) - (z.u - h).max(1e-12);
    Ok([
        [(xp.0 - xm.0) / (2.0 * h), (up.0 - um.0) / du],
        [(xp.1 - xm.1) / (2.0 * h), (up.1 - um.1) / du],
    ])
}

/// Damped Levenberg-Marquardt Newton from a seed. Returns the best
/// point reached and its |F|.
fn newton_polish(
    phi: &LiftedMap,
    seed: CoverPoint,
    opts: &OrbitSearchOptions,
) -> (CoverPoint, f64) {
    let norm = |f: (f64, f64)| f.0.hypot(f.1);
    let mut z = seed;
    let mut fz = match orbit_residual(phi, z) {
        Ok(f) => f,
        Err(_) => return (seed, f64::INFINITY),
    };
    let mut best = (z, norm(fz));
    let mut lambda = 1e-8;
    for _ in 0..opts.max_newton {
        if best.1 <= opts.residual_tol {
            return best;
        }
        let j = match orbit_jacobian(phi, z) {
            Ok(j) => j,
            Err(_) => return best,
        };
        // Normal equations of the 2x2 system with Tikhonov damping.
        let jtj = [
            [j[0][0] * j[0][0] + j[1][0] * j[1][0], j[0][0] * j[0][1] + j[1][0] * j[1][1]],
            [j[0][1] * j[0][0] + j[1][1] * j[1][0], j[0][1] * j[0][1] + j[1][1] * j[1][1]],
        ];
        let jtf = [
            j[0][0] * fz.0 + j[1][0] * fz.1,
            j[0][1] * fz.0 + j[1][1] * fz.1,
        ];
        let mut accepted = false;
        for _ in 0..10 {
            let a = [[jtj[0][0] + lambda, jtj[0][1]], [jtj[1][0], jtj[1][1] + lambda]];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.abs() < 1e-300 {
                lambda = (lambda * 10.0).max(1e-12);
                continue;
            }
            let dx = -(a[1][1] * jtf[0] - a[0][1] * jtf[1]) / det;
            let du = -(-a[1][0] * jtf[0] + a[0][0] * jtf[1]) / det;
            let cand = CoverPoint::new(z.x + dx, (z.u + du).clamp(1e-9, 1.0 - 1e-9));
            match orbit_residual(phi, cand) {
                Ok(fc) if norm(fc) < norm(fz) => {
                    z = cand;
                    fz = fc;
                    if norm(fz) < best.1 {
                        best = (z, norm(fz));
                    }
                    lambda = (lambda * 0.3).max(1e-14);
                    accepted = true;
                    break;
                }
                _ => {
                    lambda = (lambda * 10.0).max(1e-12);
                }
            }
        }
        if !accepted {
            return best;
        }
    }
    best
}

/// Grid values of F over `grid` columns and `grid` interior rows,
/// wrapped in x. Row-major: rows[j][i] = F(i/grid, (j+1)/(grid+1)).
fn residual_grid(
    phi: &LiftedMap,
    grid: usize,
    u_window: (f64, f64),
) -> Result<Vec<Vec<(f64, f64)>>> {
    (0..grid)
        .into_par_iter()
        .map(|j| {
            let u = u_window.0
                + (u_window.1 - u_window.0) * (j as f64 + 1.0) / (grid as f64 + 1.0);
            (0..grid)
                .map(|i| orbit_residual(phi, CoverPoint::new(i as f64 / grid as f64, u)))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn search_on_grid(
    map: &LiftedMap,
    p: i64,
    q: i64,
    grid: usize,
    u_window: (f64, f64),
    opts: &OrbitSearchOptions,
) -> Result<OrbitRecord> {
    let phi = map.power_with_deck(q, p);
    let rows = residual_grid(&phi, grid, u_window)?;
    let u_of = |j: usize| {
        u_window.0 + (u_window.1 - u_window.0) * (j as f64 + 1.0) / (grid as f64 + 1.0)
    };
    let mut best = (CoverPoint::new(0.0, 0.5), f64::INFINITY);
    // Deterministic row-major sweep over cells; x wraps by
    // equivariance (F is 1-periodic in x), u pairs adjacent rows.
    for j in 0..grid.saturating_sub(1) {
        for i in 0..grid {
            let corners = [
                rows[j][i],
                rows[j][(i + 1) % grid],
                rows[j + 1][i],
                rows[j + 1][(i + 1) % grid],
            ];
            let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut ulo, mut uhi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(fx, fu) in &corners {
                xlo = xlo.min(fx);
                xhi = xhi.max(fx);
                ulo = ulo.min(fu);
                uhi = uhi.max(fu);
            }
            if xlo <= 0.0 && xhi >= 0.0 && ulo <= 0.0 && uhi >= 0.0 {
                let seed = CoverPoint::new(
                    (i as f64 + 0.5) / grid as f64,
                    0.5 * (u_of(j) + u_of(j + 1)),
                );
                let (z, r) = newton_polish(&phi, seed, opts);
                if r < best.1 {
                    best = (z, r);
                }
                if r <= opts.residual_tol {
                    // Independent re-evaluation of the residual.
                    let f = orbit_residual(&phi, z)?;
                    return Ok(OrbitRecord {
                        p,
                        q,
                        point: z,
                        residual: f.0.hypot(f.1),
                        found: true,
                        resolution: grid,
                    });
                }
            }
        }
    }
    Ok(OrbitRecord { p, q, point: best.0, residual: best.1, found: false, resolution: grid })
}

/// Searches the annulus for a (p, q)-periodic point of the lift:
/// h^q(z) = z + (p, 0), with p/q reduced to lowest terms first.
pub fn find_orbit(map: &LiftedMap, p: i64, q: i64, opts: &OrbitSearchOptions) -> Result<OrbitRecord> {
    if q < 1 {
        return Err(Error::InvalidParameter(format!("find_orbit needs q >= 1, got {q}")));
    }
    if opts.grid < 2 {
        return Err(Error::InvalidParameter("seeding grid needs >= 2 cells".into()));
    }
    let r = Rational::new(p, q)?;
    search_on_grid(map, r.num(), r.den(), opts.grid, (0.0, 1.0), opts)
}

/// Report of a pseudo-rotation test: the measured rotation interval,
/// its inflation by sampling error, the rational candidates inside,
/// and the orbit search outcome for each.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PseudoRotationReport {
    pub interval: [f64; 2],
    pub inflated: [f64; 2],
    pub mean: f64,
    pub stderr: f64,
    pub candidates: Vec<Rational>,
    pub orbits: Vec<OrbitRecord>,
    /// True when some candidate has a periodic orbit, refuting the
    /// pseudo-rotation hypothesis at this resolution.
    pub found_any: bool,
}

/// Estimates the rotation interval, inflates it by three standard
/// errors plus a ten-residual-tolerance floor on each side, and
/// searches for periodic orbits at every rational inside with
/// denominator at most `opts.max_den`.
pub fn pseudo_rotation_test(
    map: &LiftedMap,
    set_params: &SampleParams,
    opts: &OrbitSearchOptions,
) -> Result<PseudoRotationReport> {
    let set = rotation_set_with(map, set_params)?;
    let pad = 3.0 * set.stderr + 10.0 * opts.residual_tol;
    let inflated = [set.interval[0] - pad, set.interval[1] + pad];
    let candidates = fractions_in_interval(inflated[0], inflated[1], opts.max_den)?;
    let orbits: Vec<OrbitRecord> = candidates
        .iter()
        .map(|r| find_orbit(map, r.num(), r.den(), opts))
        .collect::<Result<_>>()?;
    let found_any = orbits.iter().any(|o| o.found);
    Ok(PseudoRotationReport {
        interval: set.interval,
        inflated,
        mean: set.mean,
        stderr: set.stderr,
        candidates,
        orbits,
        found_any,
    })
}

/// Orbit search bracketed by two known orbits: the height window
/// spanned by the bracket points, inflated by 10% on each side, is
/// scanned with grids doubling from `opts.grid` to `opts.grid_cap`.
pub fn bracketed_search(
    map: &LiftedMap,
    p: i64,
    q: i64,
    bracket: (&OrbitRecord, &OrbitRecord),
    opts: &OrbitSearchOptions,
) -> Result<OrbitRecord> {
    let (a, b) = bracket;
    if !a.found || !b.found {
        return Err(Error::BracketInvalid("both bracket orbits must have found = true".into()));
    }
    let target = Rational::new(p, q)?;
    let (ra, rb) = (Rational::new(a.p, a.q)?, Rational::new(b.p, b.q)?);
    let (rlo, rhi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    if !(rlo < target && target < rhi) {
        return Err(Error::BracketInvalid(format!(
            "target {target} is not strictly between {rlo} and {rhi}"
        )));
    }
    let (ulo, uhi) = (a.point.u.min(b.point.u), a.point.u.max(b.point.u));
    let pad = 0.1 * (uhi - ulo).max(1e-3);
    let window = ((ulo - pad).max(0.0), (uhi + pad).min(1.0));
    let mut grid = opts.grid.max(2);
    let mut best: Option<OrbitRecord> = None;
    loop {
        let rec = search_on_grid(map, target.num(), target.den(), grid, window, opts)?;
        if rec.found {
            return Ok(rec);
        }
        if best.as_ref().map_or(true, |b| rec.residual < b.residual) {
            best = Some(rec);
        }
        if grid >= opts.grid_cap {
            return Ok(best.unwrap());
        }
        grid = (grid * 2).min(opts.grid_cap);
    }
}

/// One row of a perturbation sweep: the lowest-denominator periodic
/// orbit found (if any) for the map rotated by theta.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub has_orbit: bool,
    pub orbit: Option<OrbitRecord>,
    /// Failure of this theta's estimate or search; the sweep carries on.
    pub error: Option<String>,
}

/// Sweeps the family h composed with rigid rotations by each theta,
/// testing for periodic orbits among the rationals in the inflated
/// rotation interval. Per-theta numerical failures are recorded in the
/// row instead of aborting the sweep.
pub fn perturbation_sweep(
    base: &MapFamily,
    thetas: &[f64],
    set_params: &SampleParams,
    opts: &OrbitSearchOptions,
) -> Result<Vec<SweepRow>> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one theta".into()));
    }
    thetas
        .iter()
        .map(|&theta| {
            let map = match base.rotated_by(theta).build() {
                Ok(m) => m,
                Err(e) => {
                    return Ok(SweepRow {
                        theta,
                        has_orbit: false,
                        orbit: None,
                        error: Some(e.to_string()),
                    })
                }
            };
            match pseudo_rotation_test(&map, set_params, opts) {
                Ok(rep) => {
                    let orbit = rep.orbits.iter().find(|o| o.found).copied();
                    Ok(SweepRow { theta, has_orbit: orbit.is_some(), orbit, error: None })
                }
                Err(e) if e.is_numerical() => Ok(SweepRow {
                    theta,
                    has_orbit: false,
                    orbit: None,
                    error: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
