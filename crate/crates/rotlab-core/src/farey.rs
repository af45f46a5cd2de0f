//! Exact Stern-Brocot / Farey arithmetic.
//!
//! Everything here is 64-bit integer arithmetic with overflow checks;
//! floating point enters only through directed comparisons against
//! rationals at the `enclosing_farey` boundary, and those comparisons
//! are exact (the f64 is decomposed into mantissa and exponent and
//! compared in 128-bit integers, never rounded through a division).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tie guard for `rigid_cyclic_order`: angles closer than this to a
/// rational with denominator <= n have a degenerate orbit order.
pub const ANGLE_TIE_TOL: f64 = 1e-12;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// A reduced fraction with positive denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    /// Reduces `num/den` and normalizes the sign into the numerator.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("rational with zero denominator".into()));
        }
        let g = gcd(num, den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = num.checked_neg().ok_or(Error::Overflow)?;
            den = den.checked_neg().ok_or(Error::Overflow)?;
        }
        Ok(Rational { num, den })
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Mediant (num+num')/(den+den'). For a Farey pair the result is
    /// automatically reduced; for arbitrary pairs it is reduced here.
    pub fn mediant(&self, other: &Rational) -> Result<Rational> {
        Rational::new(
            self.num.checked_add(other.num).ok_or(Error::Overflow)?,
            self.den.checked_add(other.den).ok_or(Error::Overflow)?,
        )
    }

    /// Exact three-way comparison against an f64.
    pub fn cmp_f64(&self, x: f64) -> Ordering {
        cmp_rational_f64(self.num, self.den, x)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Compares p/q (q >= 1) with the finite f64 `x`, exactly.
///
/// `x` is decomposed as sign * mant * 2^exp with mant < 2^53; the
/// comparison mant * q * 2^exp vs |p| is then settled in i128, using a
/// bit-length shortcut when the magnitudes are far apart so the shifts
/// never overflow.
fn cmp_rational_f64(p: i64, q: i64, x: f64) -> Ordering {
    debug_assert!(q >= 1);
    debug_assert!(x.is_finite());
    // Settle by sign first.
    let sp = p.signum();
    let sx = if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    };
    if sp != sx {
        return sp.cmp(&sx);
    }
    if sp == 0 {
        return Ordering::Equal;
    }
    // Same nonzero sign: compare magnitudes, flip for negatives.
    let mag = cmp_mag(p.unsigned_abs(), q as u64, x.abs());
    if sp > 0 {
        mag.reverse() // cmp_mag orders x vs p/q; we order p/q vs x
    } else {
        mag
    }
}

/// Orders |x| against p/q for positive p, q. Returns Ordering of x.
fn cmp_mag(p: u64, q: u64, x: f64) -> Ordering {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 {
        (frac, -1074i64) // subnormal
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    if mant == 0 {
        return Ordering::Less; // x == 0 < p/q
    }
    // x*q = mant*q * 2^exp, to be compared with p.
    let lhs = mant as i128 * q as i128; // < 2^117
    let rhs = p as i128;
    // Bit lengths give floor(log2)+1; far-apart magnitudes short-circuit.
    let lhs_top = 128 - lhs.leading_zeros() as i64 + exp;
    let rhs_top = 128 - rhs.leading_zeros() as i64;
    if lhs_top < rhs_top {
        return Ordering::Less;
    }
    if lhs_top > rhs_top + 1 {
        return Ordering::Greater;
    }
    // Magnitudes within a factor of 4: shift counts are small enough
    // for exact i128 comparison.
    if exp >= 0 {
        (lhs << exp).cmp(&rhs)
    } else {
        lhs.cmp(&(rhs << (-exp)))
    }
}

/// True when left < right and den(left)*num(right) - num(left)*den(right) = 1,
/// i.e. ]left, right[ is a Farey interval.
pub fn is_farey(left: Rational, right: Rational) -> bool {
    let det = left.den as i128 * right.num as i128 - left.num as i128 * right.den as i128;
    det == 1
}

/// An interval ]p/q, p'/q'[ with q p' - p q' = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FareyInterval {
    left: Rational,
    right: Rational,
}

impl FareyInterval {
    pub fn new(left: Rational, right: Rational) -> Result<Self> {
        if !is_farey(left, right) {
            return Err(Error::InvalidParameter(format!(
                "({left}, {right}) is not a Farey pair"
            )));
        }
        Ok(FareyInterval { left, right })
    }

    pub fn left(&self) -> Rational {
        self.left
    }

    pub fn right(&self) -> Rational {
        self.right
    }

    pub fn mediant(&self) -> Result<Rational> {
        self.left.mediant(&self.right)
    }

    /// True when x lies strictly between the endpoints.
    pub fn contains(&self, x: f64) -> bool {
        self.left.cmp_f64(x) == Ordering::Less && self.right.cmp_f64(x) == Ordering::Greater
    }

    /// Splits h^m T^{-n} as phi^k psi^{-l} for the first-return pair
    /// phi = T^{-p} h^q, psi = T^{p'} h^{-q'}: k = m p' - n q',
    /// l = n q - m p. Both are positive exactly when n/m lies strictly
    /// inside the interval.
    pub fn decompose(&self, m: i64, n: i64) -> Result<(i64, i64)> {
        if m < 1 {
            return Err(Error::InvalidParameter(format!(
                "decompose needs m >= 1, got {m}"
            )));
        }
        let (p, q) = (self.left.num as i128, self.left.den as i128);
        let (pp, qp) = (self.right.num as i128, self.right.den as i128);
        let k = m as i128 * pp - n as i128 * qp;
        let l = n as i128 * q - m as i128 * p;
        debug_assert_eq!(k * q + l * qp, m as i128);
        debug_assert_eq!(k * p + l * pp, n as i128);
        let k = i64::try_from(k).map_err(|_| Error::Overflow)?;
        let l = i64::try_from(l).map_err(|_| Error::Overflow)?;
        Ok((k, l))
    }
}

impl fmt::Display for FareyInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "]{}, {}[", self.left, self.right)
    }
}

/// Smallest Farey interval with denominators <= max_den that strictly
/// contains the closed interval [lo, hi].
///
/// An integer in [lo, hi] blocks immediately (denominator 1). Otherwise
/// the descent starts from the unit interval ]n, n+1[ around the input
/// and walks the Stern-Brocot tree toward [lo, hi], batching runs of
/// same-direction steps so the cost is the length of the continued
/// fraction, not the size of the intermediate integers. The descent
/// stalls at the minimal-denominator rational inside [lo, hi]; if that
/// rational has denominator <= max_den no admissible interval exists
/// and the rational is reported as the blocker, otherwise the deepest
/// node whose denominators satisfy the bound is returned.
pub fn enclosing_farey(lo: f64, hi: f64, max_den: i64) -> Result<FareyInterval> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "enclosing_farey needs finite lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if max_den < 1 {
        return Err(Error::InvalidParameter(format!(
            "enclosing_farey needs max_den >= 1, got {max_den}"
        )));
    }
    if lo.ceil() <= hi {
        // A denominator-1 rational sits inside the closed interval.
        let z = lo.ceil();
        if z.abs() > i64::MAX as f64 {
            return Err(Error::Overflow);
        }
        return Err(Error::NotEnclosable {
            lo,
            hi,
            max_den,
            blocker: Rational::new(z as i64, 1)?,
        });
    }
    // No integer inside, so floor(lo) < lo <= hi < floor(lo)+1 strictly.
    if lo.abs() > 4.0e18 {
        return Err(Error::Overflow);
    }
    let n = lo.floor() as i64;
    // Node endpoints a/b < c/d with b c - a d = 1 throughout.
    let (mut a, mut b) = (n, 1i64);
    let (mut c, mut d) = (n.checked_add(1).ok_or(Error::Overflow)?, 1i64);
    let mut best = FareyInterval::new(Rational::new(a, b)?, Rational::new(c, d)?)?;
    loop {
        let mn = a.checked_add(c).ok_or(Error::Overflow)?;
        let md = b.checked_add(d).ok_or(Error::Overflow)?;
        if cmp_rational_f64(mn, md, lo) == Ordering::Less {
            // Mediant strictly left of [lo, hi]: take k right-steps at
            // once. The left endpoint becomes (a + k c)/(b + k d); the
            // j-th intermediate node (j <= k) still strictly contains
            // [lo, hi], so the deepest one within the denominator cap
            // is a candidate answer.
            let k = batched_steps(a, b, c, d, lo, Ordering::Less)?;
            if d <= max_den {
                let j = ((max_den - b).div_euclid(d)).min(k);
                if j >= 1 {
                    best = FareyInterval::new(
                        Rational::new(
                            a.checked_add(c.checked_mul(j).ok_or(Error::Overflow)?)
                                .ok_or(Error::Overflow)?,
                            b + d * j,
                        )?,
                        Rational::new(c, d)?,
                    )?;
                }
            }
            a = a.checked_add(c.checked_mul(k).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
            b = b.checked_add(d.checked_mul(k).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
        } else if cmp_rational_f64(mn, md, hi) == Ordering::Greater {
            let k = batched_steps(c, d, a, b, hi, Ordering::Greater)?;
            if b <= max_den {
                let j = ((max_den - d).div_euclid(b)).min(k);
                if j >= 1 {
                    best = FareyInterval::new(
                        Rational::new(a, b)?,
                        Rational::new(
                            c.checked_add(a.checked_mul(j).ok_or(Error::Overflow)?)
                                .ok_or(Error::Overflow)?,
                            d + b * j,
                        )?,
                    )?;
                }
            }
            c = c.checked_add(a.checked_mul(k).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
            d = d.checked_add(b.checked_mul(k).ok_or(Error::Overflow)?).ok_or(Error::Overflow)?;
        } else {
            // Mediant inside [lo, hi]: the descent stalls. The stalling
            // mediant is the minimal-denominator rational in [lo, hi].
            if md <= max_den {
                return Err(Error::NotEnclosable {
                    lo,
                    hi,
                    max_den,
                    blocker: Rational::new(mn, md)?,
                });
            }
            return Ok(best);
        }
    }
}

/// Largest k >= 1 such that the k-step mediant (ma + k fa)/(mb + k fb)
/// is still strictly on `side` of x, found by exponential search plus
/// bisection over the exact comparator. The caller guarantees k = 1
/// qualifies. Overflow of a probe is treated as an upper bound.
fn batched_steps(ma: i64, mb: i64, fa: i64, fb: i64, x: f64, side: Ordering) -> Result<i64> {
    let on_side = |k: i64| -> Option<bool> {
        let n = ma.checked_add(fa.checked_mul(k)?)?;
        let d = mb.checked_add(fb.checked_mul(k)?)?;
        Some(cmp_rational_f64(n, d, x) == side)
    };
    debug_assert_eq!(on_side(1), Some(true));
    let mut good = 1i64;
    let mut bad: Option<i64> = None;
    let mut probe = 2i64;
    while bad.is_none() {
        match on_side(probe) {
            Some(true) => {
                good = probe;
                probe = match probe.checked_mul(2) {
                    Some(p) => p,
                    None => {
                        bad = Some(i64::MAX);
                        break;
                    }
                };
            }
            Some(false) => bad = Some(probe),
            None => bad = Some(probe),
        }
    }
    let mut bad = bad.unwrap();
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        match on_side(mid) {
            Some(true) => good = mid,
            _ => bad = mid,
        }
    }
    Ok(good)
}

/// All reduced fractions p/q with 1 <= q <= max_den and lo <= p/q <= hi,
/// ordered by denominator then numerator.
pub fn fractions_in_interval(lo: f64, hi: f64, max_den: i64) -> Result<Vec<Rational>> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "fractions_in_interval needs finite lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if lo.abs().max(hi.abs()) * max_den as f64 > 4.0e15 {
        return Err(Error::Overflow);
    }
    let mut out = Vec::new();
    for q in 1..=max_den {
        // Start safely below lo*q, then nudge up to the first numerator
        // with p/q >= lo using the exact comparator.
        let mut p = (lo * q as f64).floor() as i64 - 2;
        while cmp_rational_f64(p, q, lo) == Ordering::Less {
            p += 1;
        }
        while cmp_rational_f64(p, q, hi) != Ordering::Greater {
            if gcd(p, q) == 1 {
                out.push(Rational::new(p, q)?);
            }
            p += 1;
        }
    }
    Ok(out)
}

/// Cyclic order of n points on the circle, recorded as the permutation
/// that lists the point indices counterclockwise starting from point 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicOrder {
    perm: Vec<usize>,
}

impl CyclicOrder {
    /// Builds the order from circle positions (values mod 1). Position
    /// ties make the order meaningless, so they are rejected.
    pub fn from_positions(positions: &[f64]) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::InvalidParameter("cyclic order of zero points".into()));
        }
        let frac: Vec<f64> = positions.iter().map(|x| x.rem_euclid(1.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&i, &j| frac[i].partial_cmp(&frac[j]).unwrap());
        // Rotate so index 0 leads.
        let z = perm.iter().position(|&i| i == 0).unwrap();
        perm.rotate_left(z);
        Ok(CyclicOrder { perm })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

impl fmt::Display for CyclicOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.perm.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// Cyclic order of the first n+1 points 0, rho, 2 rho, ..., n rho of a
/// rigid rotation. Errors with DegenerateAngle when rho is within
/// ANGLE_TIE_TOL of a rational with denominator <= n, where sorting
/// fractional parts stops being meaningful.
pub fn rigid_cyclic_order(rho: f64, n: usize) -> Result<CyclicOrder> {
    if n == 0 {
        return Err(Error::InvalidParameter("rigid_cyclic_order needs n >= 1".into()));
    }
    if !rho.is_finite() {
        return Err(Error::InvalidParameter("rigid_cyclic_order needs finite rho".into()));
    }
    for q in 1..=(n as i64) {
        let p = (rho * q as f64).round() as i64;
        let dist = (rho - p as f64 / q as f64).abs();
        if dist < ANGLE_TIE_TOL {
            return Err(Error::DegenerateAngle {
                rho,
                n,
                closest: Rational::new(p, q)?,
            });
        }
    }
    let positions: Vec<f64> = (0..=n).map(|i| (i as f64 * rho).rem_euclid(1.0)).collect();
    CyclicOrder::from_positions(&positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn rational_reduces_and_normalizes_sign() {
        assert_eq!(r(2, 4), r(1, 2));
        assert_eq!(r(-3, -6), r(1, 2));
        assert_eq!(r(3, -6), r(-1, 2));
        assert_eq!(r(0, -5), r(0, 1));
        assert_eq!(r(7, 3).to_string(), "7/3");
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn rational_ordering_is_exact() {
        assert!(r(1, 3) < r(1, 2));
        assert!(r(-1, 2) < r(1, 3));
        // Large operands that would lose precision in f64.
        assert!(r(i64::MAX - 1, i64::MAX) < r(1, 1));
    }

    #[test]
    fn exact_f64_comparison_hits_representable_boundaries() {
        assert_eq!(r(1, 2).cmp_f64(0.5), Ordering::Equal);
        assert_eq!(r(1, 2).cmp_f64(f64::from_bits(0.5f64.to_bits() + 1)), Ordering::Less);
        assert_eq!(r(1, 2).cmp_f64(f64::from_bits(0.5f64.to_bits() - 1)), Ordering::Greater);
        // 1/3 is not representable; the nearest double truncates a tail
        // worth a third of an ulp, so it sits below the true value.
        assert_eq!(r(1, 3).cmp_f64(1.0 / 3.0), Ordering::Greater);
        assert_eq!(r(2, 3).cmp_f64(2.0 / 3.0), Ordering::Greater);
        assert_eq!(r(0, 1).cmp_f64(0.0), Ordering::Equal);
        assert_eq!(r(0, 1).cmp_f64(-0.0), Ordering::Equal);
        assert_eq!(r(-1, 2).cmp_f64(-0.5), Ordering::Equal);
        assert_eq!(r(1, 1).cmp_f64(1e300), Ordering::Less);
        assert_eq!(r(1, 1).cmp_f64(-1e300), Ordering::Greater);
        assert_eq!(r(1, 1).cmp_f64(1e-300), Ordering::Greater);
        assert_eq!(r(1, 1).cmp_f64(f64::MIN_POSITIVE / 4.0), Ordering::Greater);
    }

    #[test]
    fn farey_pair_determinant() {
        assert!(is_farey(r(1, 2), r(2, 3)));
        assert!(is_farey(r(0, 1), r(1, 1)));
        assert!(is_farey(r(2, 5), r(3, 7)));
        assert!(!is_farey(r(1, 3), r(2, 3)));
        assert!(!is_farey(r(2, 3), r(1, 2)));
        assert!(FareyInterval::new(r(1, 3), r(2, 3)).is_err());
    }

    #[test]
    fn mediant_of_farey_pair_is_reduced_and_interior() {
        let iv = FareyInterval::new(r(2, 5), r(3, 7)).unwrap();
        let m = iv.mediant().unwrap();
        assert_eq!(m, r(5, 12));
        assert!(is_farey(iv.left(), m));
        assert!(is_farey(m, iv.right()));
    }

    #[test]
    fn enclosing_matches_worked_examples() {
        let iv = enclosing_farey(0.416, 0.419, 10).unwrap();
        assert_eq!((iv.left(), iv.right()), (r(2, 5), r(3, 7)));

        let iv = enclosing_farey(0.61, 0.63, 5).unwrap();
        assert_eq!((iv.left(), iv.right()), (r(3, 5), r(2, 3)));

        match enclosing_farey(0.5, 0.5, 10) {
            Err(Error::NotEnclosable { blocker, .. }) => assert_eq!(blocker, r(1, 2)),
            other => panic!("expected NotEnclosable, got {other:?}"),
        }
    }

    #[test]
    fn enclosing_handles_negative_and_large_inputs() {
        let iv = enclosing_farey(-0.42, -0.41, 10).unwrap();
        assert!(iv.contains(-0.415));
        assert!(iv.left().as_f64() < -0.42 && iv.right().as_f64() > -0.41);

        // Far from the origin the batched descent must not crawl.
        let iv = enclosing_farey(1e6 + 0.416, 1e6 + 0.419, 10).unwrap();
        assert!(iv.contains(1e6 + 0.417));

        // Integer inside the interval blocks immediately.
        match enclosing_farey(2.5, 3.5, 10) {
            Err(Error::NotEnclosable { blocker, .. }) => assert_eq!(blocker, r(3, 1)),
            other => panic!("expected NotEnclosable, got {other:?}"),
        }
    }

    #[test]
    fn enclosing_respects_denominator_cap_on_narrow_input() {
        // A narrow interval around sqrt(2)-1: without the cap the
        // smallest enclosing interval has huge denominators; the cap
        // returns the deepest compliant node instead.
        let a = std::f64::consts::SQRT_2 - 1.0;
        let iv = enclosing_farey(a - 1e-9, a + 1e-9, 10).unwrap();
        assert!(iv.left().den() <= 10 && iv.right().den() <= 10);
        assert_eq!((iv.left(), iv.right()), (r(2, 5), r(3, 7)));
        // With a larger cap the interval tightens. The cap must stay
        // below 33461: the convergent 13860/33461 sits within 4e-10 of
        // sqrt(2)-1 and blocks any cap that admits it.
        let iv2 = enclosing_farey(a - 1e-9, a + 1e-9, 20_000).unwrap();
        assert!(iv2.right().as_f64() - iv2.left().as_f64() < 1e-6);
        assert!(iv2.contains(a));
        match enclosing_farey(a - 1e-9, a + 1e-9, 100_000) {
            Err(Error::NotEnclosable { blocker, .. }) => assert_eq!(blocker, r(13860, 33461)),
            other => panic!("expected NotEnclosable, got {other:?}"),
        }
    }

    #[test]
    fn decompose_worked_example_and_postcondition() {
        let iv = FareyInterval::new(r(2, 5), r(3, 7)).unwrap();
        assert_eq!(iv.decompose(12, 5).unwrap(), (1, 1));
        // 5/12 is the mediant, strictly interior, hence k, l > 0.
        assert!(iv.decompose(0, 1).is_err());
    }

    #[test]
    fn rigid_cyclic_order_worked_examples() {
        let order = rigid_cyclic_order(std::f64::consts::SQRT_2 - 1.0, 4).unwrap();
        assert_eq!(order.as_slice(), &[0, 3, 1, 4, 2]);
        assert_eq!(order.to_string(), "(0, 3, 1, 4, 2)");

        let order = rigid_cyclic_order(0.99, 3).unwrap();
        assert_eq!(order.as_slice(), &[0, 3, 2, 1]);

        match rigid_cyclic_order(0.5 + 1e-13, 4) {
            Err(Error::DegenerateAngle { closest, .. }) => assert_eq!(closest, r(1, 2)),
            other => panic!("expected DegenerateAngle, got {other:?}"),
        }
    }

    #[test]
    fn fractions_enumeration_is_reduced_and_complete() {
        let fr = fractions_in_interval(0.3, 0.7, 5).unwrap();
        let expect = vec![r(1, 2), r(1, 3), r(2, 3), r(2, 5), r(3, 5)];
        assert_eq!(fr, expect);
        // Closed endpoints are included.
        let fr = fractions_in_interval(0.5, 0.5, 4).unwrap();
        assert_eq!(fr, vec![r(1, 2)]);
        // Negative intervals work.
        let fr = fractions_in_interval(-0.5, -0.25, 4).unwrap();
        assert!(fr.contains(&r(-1, 2)) && fr.contains(&r(-1, 3)) && fr.contains(&r(-1, 4)));
        assert!(!fr.contains(&r(-1, 5)));
    }
}
