//! Essential lines in the cover and the order machinery around them.
//!
//! An essential line is stored as a piecewise-linear graph x = gamma(u)
//! over a strictly increasing height grid inside (0, 1), extended by
//! constants beyond its end heights. Everything order-related exploits
//! the graph representation: differences of two lines are piecewise
//! linear with kinks on the merged grid, so minima, maxima and integer
//! crossings are decided exactly at grid points.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{CoverPoint, LiftedMap};
use crate::error::{Error, Result};
use crate::farey::{rigid_cyclic_order, CyclicOrder, FareyInterval};

/// Default number of height grid points for constructed lines.
pub const DEFAULT_GRID: usize = 2048;
/// Constructed grids reach within this distance of u = 0 and u = 1.
pub const DEFAULT_END_MARGIN: f64 = 1e-3;
/// Two lines are certified disjoint when their gap exceeds this.
pub const DISJOINT_TOL: f64 = 1e-9;
/// Binary subdivision depth before a non-monotone image is a fold.
pub const FOLD_REFINE_DEPTH: u32 = 6;

/// A piecewise-linear essential line x = gamma(u), u in (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssentialLine {
    heights: Vec<f64>,
    xs: Vec<f64>,
    end_margin: f64,
}

impl EssentialLine {
    /// Validates the grid: at least two vertices, heights strictly
    /// increasing inside (0, 1) and reaching within end_margin of both
    /// ends, all horizontal values finite.
    pub fn new(heights: Vec<f64>, xs: Vec<f64>, end_margin: f64) -> Result<Self> {
        if heights.len() < 2 || heights.len() != xs.len() {
            return Err(Error::InvalidParameter(format!(
                "line grid needs matching heights/xs with >= 2 vertices, got {}/{}",
                heights.len(),
                xs.len()
            )));
        }
        if !(end_margin > 0.0 && end_margin < 0.5) {
            return Err(Error::InvalidParameter(format!("end_margin = {end_margin}")));
        }
        for w in heights.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "heights not strictly increasing near u = {}",
                    w[0]
                )));
            }
        }
        let (first, last) = (heights[0], *heights.last().unwrap());
        if !(first > 0.0 && last < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "heights must stay in (0, 1), got [{first}, {last}]"
            )));
        }
        if first > end_margin || 1.0 - last > end_margin {
            return Err(Error::InvalidParameter(format!(
                "grid reaches only [{first}, {last}] for end_margin {end_margin}"
            )));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite x on line grid".into()));
        }
        Ok(EssentialLine { heights, xs, end_margin })
    }

    /// Vertical line x = x0 on the default grid.
    pub fn vertical(x0: f64) -> Self {
        Self::from_graph(|_| x0, DEFAULT_GRID, DEFAULT_END_MARGIN)
            .expect("vertical line construction cannot fail")
    }

    /// Graph of f over an m-point grid spanning [margin, 1 - margin].
    pub fn from_graph(f: impl Fn(f64) -> f64, m: usize, margin: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("grid of {m} points")));
        }
        let heights: Vec<f64> = (0..m)
            .map(|i| margin + (1.0 - 2.0 * margin) * i as f64 / (m - 1) as f64)
            .collect();
        let xs: Vec<f64> = heights.iter().map(|&u| f(u)).collect();
        EssentialLine::new(heights, xs, margin * (1.0 + 1e-9))
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn end_margin(&self) -> f64 {
        self.end_margin
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_height(&self) -> f64 {
        self.heights[0]
    }

    pub fn max_height(&self) -> f64 {
        *self.heights.last().unwrap()
    }

    /// Linear interpolation, constant beyond the end heights.
    pub fn eval(&self, u: f64) -> f64 {
        let n = self.heights.len();
        if u <= self.heights[0] {
            return self.xs[0];
        }
        if u >= self.heights[n - 1] {
            return self.xs[n - 1];
        }
        let j = self.heights.partition_point(|&h| h < u);
        let (u0, u1) = (self.heights[j - 1], self.heights[j]);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let w = (u - u0) / (u1 - u0);
        x0 + w * (x1 - x0)
    }

    /// The line shifted horizontally by dx.
    pub fn translate(&self, dx: f64) -> Self {
        EssentialLine {
            heights: self.heights.clone(),
            xs: self.xs.iter().map(|x| x + dx).collect(),
            end_margin: self.end_margin,
        }
    }

    /// Deck translate T^k of the line.
    pub fn deck(&self, k: i64) -> Self {
        self.translate(k as f64)
    }

    /// Vertices as cover points, bottom to top.
    pub fn points(&self) -> impl Iterator<Item = CoverPoint> + '_ {
        self.heights
            .iter()
            .zip(&self.xs)
            .map(|(&u, &x)| CoverPoint::new(x, u))
    }
}

/// Image of a line under a lift, as a graph over the image heights.
///
/// Vertices are mapped and must land with strictly increasing heights;
/// where they do not, the source segment is bisected up to
/// [`FOLD_REFINE_DEPTH`] times. A persistent inversion means the image
/// is not a graph over u at the available resolution: FoldDetected.
pub fn map_line(map: &LiftedMap, line: &EssentialLine) -> Result<EssentialLine> {
    let images: Vec<CoverPoint> = line
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|z| map.evaluate(z))
        .collect::<Result<_>>()?;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(images.len());
    out.push((images[0].u, images[0].x));
    for i in 0..images.len() - 1 {
        extend_monotone(
            map,
            line,
            line.heights[i],
            images[i],
            line.heights[i + 1],
            images[i + 1],
            0,
            &mut out,
        )?;
    }
    let heights: Vec<f64> = out.iter().map(|p| p.0).collect();
    let xs: Vec<f64> = out.iter().map(|p| p.1).collect();
    let margin = heights[0].max(1.0 - heights.last().unwrap()).max(1e-12) * (1.0 + 1e-12);
    if margin >= 0.5 {
        return Err(Error::FoldDetected { u: heights[0], depth: 0 });
    }
    EssentialLine::new(heights, xs, margin)
}

#[allow(clippy::too_many_arguments)]
fn extend_monotone(
    map: &LiftedMap,
    line: &EssentialLine,
    u_lo: f64,
    img_lo: CoverPoint,
    u_hi: f64,
    img_hi: CoverPoint,
    depth: u32,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    if img_hi.u > img_lo.u {
        out.push((img_hi.u, img_hi.x));
        return Ok(());
    }
    if depth >= FOLD_REFINE_DEPTH {
        return Err(Error::FoldDetected { u: img_lo.u, depth });
    }
    let um = 0.5 * (u_lo + u_hi);
    let img_m = map.evaluate(CoverPoint::new(line.eval(um), um))?;
    extend_monotone(map, line, u_lo, img_lo, um, img_m, depth + 1, out)?;
    extend_monotone(map, line, um, img_m, u_hi, img_hi, depth + 1, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineRelation {
    LeftOf,
    RightOf,
    Intersecting,
}

/// Outcome of an order test between two lines on their common height
/// range. `min_gap` is the certified separation: the minimum of b - a
/// for LeftOf, of a - b for RightOf; for Intersecting it is the signed
/// clearance min(min(b - a), min(a - b)), which is <= DISJOINT_TOL
/// exactly when the relation is Intersecting.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LineOrder {
    pub relation: LineRelation,
    pub min_gap: f64,
}

/// Merged height grid of two lines over the union of their ranges.
/// Both lines extend constantly beyond their own grids, so any
/// difference or minimum of the two is piecewise linear with kinks
/// only at the merged grid points; extrema are always attained here.
fn merged_heights(a: &EssentialLine, b: &EssentialLine) -> Vec<f64> {
    let mut hs: Vec<f64> = Vec::with_capacity(a.len() + b.len());
    hs.extend_from_slice(&a.heights);
    hs.extend_from_slice(&b.heights);
    hs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    hs.dedup();
    hs
}

/// Order of two lines: is a strictly left of b, strictly right, or
/// neither (within [`DISJOINT_TOL`])?
pub fn order(a: &EssentialLine, b: &EssentialLine) -> LineOrder {
    let hs = merged_heights(a, b);
    let mut min_d = f64::INFINITY;
    let mut max_d = f64::NEG_INFINITY;
    for &u in &hs {
        let d = b.eval(u) - a.eval(u);
        min_d = min_d.min(d);
        max_d = max_d.max(d);
    }
    if min_d > DISJOINT_TOL {
        LineOrder { relation: LineRelation::LeftOf, min_gap: min_d }
    } else if max_d < -DISJOINT_TOL {
        LineOrder { relation: LineRelation::RightOf, min_gap: -max_d }
    } else {
        LineOrder { relation: LineRelation::Intersecting, min_gap: min_d.min(-max_d) }
    }
}

/// Pointwise minimum of two lines as an exact piecewise-linear graph:
/// the merged grid is augmented with the crossing heights, so the
/// result evaluates to min(a, b) everywhere, not just at grid points.
pub fn vee_join(a: &EssentialLine, b: &EssentialLine) -> Result<EssentialLine> {
    let hs = merged_heights(a, b);
    let mut heights: Vec<f64> = Vec::with_capacity(hs.len() + 8);
    let mut xs: Vec<f64> = Vec::with_capacity(hs.len() + 8);
    let mut prev: Option<(f64, f64)> = None; // (u, d) at previous grid point
    for &u in &hs {
        let (av, bv) = (a.eval(u), b.eval(u));
        let d = bv - av;
        if let Some((up, dp)) = prev {
            if dp * d < 0.0 {
                // The two lines cross inside the cell; insert the
                // crossing vertex so the minimum stays exact.
                let w = dp / (dp - d);
                let uc = up + w * (u - up);
                if uc > up && uc < u {
                    heights.push(uc);
                    xs.push(a.eval(uc).min(b.eval(uc)));
                }
            }
        }
        heights.push(u);
        xs.push(av.min(bv));
        prev = Some((u, d));
    }
    let margin = heights[0].max(1.0 - heights.last().unwrap()).max(1e-12) * (1.0 + 1e-12);
    EssentialLine::new(heights, xs, margin)
}

/// Join of a descending chain: given Gamma_0 = base and inner lines
/// Gamma_1, ..., Gamma_{q-1} with
/// T^{-q}(Gamma_0) < Gamma_{q-1} < ... < Gamma_1 < Gamma_0,
/// returns the vee of T^i(Gamma_i) over i = 0..q-1.
pub fn chain_join(base: &EssentialLine, inner: &[EssentialLine]) -> Result<EssentialLine> {
    let q = inner.len() + 1;
    let mut prev = base;
    for (idx, g) in inner.iter().enumerate() {
        let ord = order(g, prev);
        if ord.relation != LineRelation::LeftOf {
            return Err(Error::ChainOrderViolated {
                index: idx,
                detail: format!("expected strict left order, found {:?}", ord.relation),
            });
        }
        prev = g;
    }
    let bottom = base.deck(-(q as i64));
    let ord = order(&bottom, prev);
    if ord.relation != LineRelation::LeftOf {
        return Err(Error::ChainOrderViolated {
            index: inner.len(),
            detail: format!(
                "T^-{q}(base) must lie strictly left of the last inner line, found {:?}",
                ord.relation
            ),
        });
    }
    let mut acc = base.clone();
    for (i, g) in inner.iter().enumerate() {
        acc = vee_join(&acc, &g.deck(i as i64 + 1))?;
    }
    Ok(acc)
}

/// The shear (x, u) -> (x - gamma(u), u) taking the line to the
/// vertical x = 0. Area-preserving and isotopic to the identity.
pub fn shear_straighten(line: &EssentialLine) -> LiftedMap {
    let fwd = Arc::new(line.clone());
    let bwd = fwd.clone();
    LiftedMap::from_core(
        format!("shear[{} pts]", line.len()),
        move |x, u| (x - fwd.eval(u), u),
        move |x, u| (x + bwd.eval(u), u),
        true,
        true,
    )
}

/// Mean horizontal progress of the image of the vertical x = x0:
/// integral over u of (gamma_h(u) - x0) du, trapezoid on the image
/// grid with constant extension to the ends of (0, 1). For an
/// area-preserving lift this equals the mean rotation number,
/// independently of x0.
pub fn area_between(map: &LiftedMap, x0: f64) -> Result<f64> {
    let line = EssentialLine::vertical(x0);
    let image = map_line(map, &line)?;
    let h = &image.heights;
    let v: Vec<f64> = image.xs.iter().map(|x| x - x0).collect();
    let mut total = v[0] * h[0]; // constant extension on [0, h_0]
    for i in 0..h.len() - 1 {
        total += 0.5 * (v[i] + v[i + 1]) * (h[i + 1] - h[i]);
    }
    total += v[v.len() - 1] * (1.0 - h[h.len() - 1]);
    Ok(total)
}

/// Report of a line translation check: the images h^i(line) for
/// i = 0..=n are pairwise disjoint in the annulus and their cyclic
/// order matches the rigid rotation by rho.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineTranslationReport {
    /// Deck index placing each image in the base strip: T^{offsets[i]}
    /// applied to h^i(line) lies between the line and its T-translate.
    pub offsets: Vec<i64>,
    /// Circle position of each strip representative at mid-height.
    pub positions: Vec<f64>,
    /// Smallest pairwise annulus gap over all image pairs.
    pub min_pair_gap: f64,
    pub order: CyclicOrder,
    pub expected: CyclicOrder,
    pub matches_rigid: bool,
}

/// Smallest distance of the piecewise-linear difference to the integer
/// lattice along the merged grid, with crossings detected exactly: a
/// floor change between adjacent grid points means the difference
/// passes through an integer inside the cell.
fn circle_gap(a: &EssentialLine, b: &EssentialLine) -> f64 {
    let hs = merged_heights(a, b);
    let mut gap = f64::INFINITY;
    let mut prev_floor: Option<f64> = None;
    for &u in &hs {
        let d = b.eval(u) - a.eval(u);
        let fl = d.floor();
        if let Some(pf) = prev_floor {
            if pf != fl {
                return 0.0;
            }
        }
        prev_floor = Some(fl);
        let fr = d - fl;
        gap = gap.min(fr.min(1.0 - fr));
    }
    gap
}

/// Checks the line translation picture for the first n iterates: every
/// pair of images h^i(line), h^j(line), 0 <= i < j <= n, must be
/// disjoint as annulus curves, and the cyclic order of the images must
/// equal the order of the orbit of a rigid rotation by rho.
pub fn verify_line_translation(
    map: &LiftedMap,
    line: &EssentialLine,
    n: usize,
    rho: f64,
) -> Result<LineTranslationReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("verify_line_translation needs n >= 1".into()));
    }
    let mut lines: Vec<EssentialLine> = Vec::with_capacity(n + 1);
    lines.push(line.clone());
    for i in 0..n {
        lines.push(map_line(map, &lines[i])?);
    }
    // Pairwise disjointness in the annulus, in parallel.
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
    let gaps: Vec<(usize, usize, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| (i, j, circle_gap(&lines[i], &lines[j])))
        .collect();
    let mut min_pair_gap = f64::INFINITY;
    for &(i, j, g) in &gaps {
        if g <= DISJOINT_TOL {
            return Err(Error::NotDisjoint { i, j, min_gap: g });
        }
        min_pair_gap = min_pair_gap.min(g);
    }
    // Strip representatives: offsets and positions read at mid-height
    // of the common range. Disjointness makes the floor constant, so
    // any height works; positions inherit pairwise distinctness.
    let lo = lines.iter().map(|l| l.min_height()).fold(0.0f64, f64::max);
    let hi = lines.iter().map(|l| l.max_height()).fold(1.0f64, f64::min);
    let umid = 0.5 * (lo + hi);
    let x0 = lines[0].eval(umid);
    let mut offsets = Vec::with_capacity(n + 1);
    let mut positions = Vec::with_capacity(n + 1);
    for l in &lines {
        let d = l.eval(umid) - x0;
        offsets.push(-d.floor() as i64);
        positions.push(d - d.floor());
    }
    let order = CyclicOrder::from_positions(&positions)?;
    let expected = rigid_cyclic_order(rho, n)?;
    let matches_rigid = order == expected;
    Ok(LineTranslationReport {
        offsets,
        positions,
        min_pair_gap,
        order,
        expected,
        matches_rigid,
    })
}

/// Grid used for candidate lines during search; the returned line
/// keeps this resolution.
pub const SEARCH_GRID: usize = 257;

/// Searches for an essential line lying strictly left of both
/// first-return images phi = T^-p h^q and psi = T^{p'} h^{-q'} for the
/// Farey interval ]p/q, p'/q'[, then validates the full translation
/// picture for n = q + q' - 1 against the rigid order of the mediant.
///
/// Candidates: the vertical, a family of sheared lines c + s(u - 1/2),
/// seeded coordinate descent on a coarse control polygon. Every
/// objective evaluation counts against `budget`.
pub fn search_line(
    map: &LiftedMap,
    iv: &FareyInterval,
    budget: usize,
    seed: u64,
) -> Result<EssentialLine> {
    use rand::{Rng, SeedableRng};

    let (p, q) = (iv.left().num(), iv.left().den());
    let (pp, qp) = (iv.right().num(), iv.right().den());
    let phi = map.power_with_deck(q, p);
    let psi = map.power_with_deck(-qp, -pp);
    let n = (q + qp - 1) as usize;
    let rho = iv.mediant()?.as_f64();

    let mut used = 0usize;
    let mut best_gap = f64::NEG_INFINITY;
    let mut best_line: Option<EssentialLine> = None;

    // Signed clearance of the two constraints; anything non-finite or
    // folded scores as unusable.
    let objective = |line: &EssentialLine, used: &mut usize| -> f64 {
        *used += 1;
        let phi_img = match map_line(&phi, line) {
            Ok(l) => l,
            Err(_) => return f64::NEG_INFINITY,
        };
        let psi_img = match map_line(&psi, line) {
            Ok(l) => l,
            Err(_) => return f64::NEG_INFINITY,
        };
        let hs = merged_heights(line, &phi_img);
        let mut m = f64::INFINITY;
        for &u in &hs {
            m = m.min(phi_img.eval(u) - line.eval(u));
        }
        let hs = merged_heights(line, &psi_img);
        for &u in &hs {
            m = m.min(psi_img.eval(u) - line.eval(u));
        }
        m
    };

    let accept_gap = 10.0 * DISJOINT_TOL;
    let consider = |line: EssentialLine,
                        used: &mut usize,
                        best_gap: &mut f64,
                        best_line: &mut Option<EssentialLine>|
     -> Option<EssentialLine> {
        let g = objective(&line, used);
        if g > *best_gap {
            *best_gap = g;
            *best_line = Some(line.clone());
        }
        if g > accept_gap {
            if let Ok(report) = verify_line_translation(map, &line, n, rho) {
                if report.matches_rigid {
                    return Some(line);
                }
            }
        }
        None
    };

    // Stage 1: vertical and sheared candidates.
    let mut candidates: Vec<EssentialLine> = vec![EssentialLine::from_graph(
        |_| 0.0,
        SEARCH_GRID,
        DEFAULT_END_MARGIN,
    )?];
    for &s in &[-1.0, -0.5, -0.25, 0.25, 0.5, 1.0] {
        for ci in 0..4 {
            let c = ci as f64 / 4.0;
            candidates.push(EssentialLine::from_graph(
                |u| c + s * (u - 0.5),
                SEARCH_GRID,
                DEFAULT_END_MARGIN,
            )?);
        }
    }
    for cand in candidates {
        if used >= budget {
            break;
        }
        if let Some(line) = consider(cand, &mut used, &mut best_gap, &mut best_line) {
            return Ok(line);
        }
    }

    // Stage 2: coordinate descent on a coarse control polygon of the
    // best candidate so far, with random restarts under the seed.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    const CONTROL: usize = 17;
    while used < budget {
        let start = match &best_line {
            Some(l) if best_gap > f64::NEG_INFINITY => l.clone(),
            _ => EssentialLine::from_graph(|_| 0.0, SEARCH_GRID, DEFAULT_END_MARGIN)?,
        };
        // Control values sampled from the current best line.
        let mut ctrl: Vec<f64> = (0..CONTROL)
            .map(|i| {
                let u = DEFAULT_END_MARGIN
                    + (1.0 - 2.0 * DEFAULT_END_MARGIN) * i as f64 / (CONTROL - 1) as f64;
                start.eval(u)
            })
            .collect();
        let build = |ctrl: &[f64]| -> Result<EssentialLine> {
            let poly = EssentialLine::from_graph(
                |u| {
                    let t = (u - DEFAULT_END_MARGIN) / (1.0 - 2.0 * DEFAULT_END_MARGIN)
                        * (CONTROL - 1) as f64;
                    let j = (t.floor() as usize).min(CONTROL - 2);
                    let w = t - j as f64;
                    ctrl[j] * (1.0 - w) + ctrl[j + 1] * w
                },
                SEARCH_GRID,
                DEFAULT_END_MARGIN,
            )?;
            Ok(poly)
        };
        let mut current = objective(&build(&ctrl)?, &mut used);
        let mut delta = 0.1;
        while delta > 1e-4 && used < budget {
            let mut improved = false;
            for j in 0..CONTROL {
                for sign in [1.0, -1.0] {
                    if used >= budget {
                        break;
                    }
                    let saved = ctrl[j];
                    ctrl[j] = saved + sign * delta;
                    let trial_line = build(&ctrl)?;
                    let trial = objective(&trial_line, &mut used);
                    if trial > current {
                        current = trial;
                        improved = true;
                        if current > best_gap {
                            best_gap = current;
                            best_line = Some(trial_line.clone());
                        }
                        if current > accept_gap {
                            if let Ok(report) = verify_line_translation(map, &trial_line, n, rho) {
                                if report.matches_rigid {
                                    return Ok(trial_line);
                                }
                            }
                        }
                        break;
                    } else {
                        ctrl[j] = saved;
                    }
                }
            }
            if !improved {
                delta *= 0.5;
            }
        }
        if used >= budget {
            break;
        }
        // Random restart: a fresh shear with jittered slope and offset.
        let c: f64 = rng.gen::<f64>();
        let s: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let cand = EssentialLine::from_graph(|u| c + s * (u - 0.5), SEARCH_GRID, DEFAULT_END_MARGIN)?;
        if let Some(line) = consider(cand, &mut used, &mut best_gap, &mut best_line) {
            return Ok(line);
        }
    }
    Err(Error::NotFound {
        budget,
        best_gap: if best_gap.is_finite() { best_gap } else { f64::NEG_INFINITY },
    })
}
