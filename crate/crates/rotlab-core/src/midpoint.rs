//! Fixed-step implicit-midpoint integration, shared by the Hamiltonian
//! map family and the flow module.
//!
//! The method is symmetric: integrating for -t with the same step size
//! inverts the time-t map up to the fixed-point solve tolerance, which
//! is what supplies inverse lifts for integrated maps. To keep that
//! pairing exact at the step level, a fractional remainder step is
//! placed last for t > 0 and first for t < 0.

/// Contraction tolerance for the midpoint fixed point.
const SOLVE_TOL: f64 = 1e-15;
/// Iteration cap; the iteration contracts at rate |h| Lip(f) / 2, so
/// smooth fields at small steps converge in a handful of rounds.
const SOLVE_MAX_ITER: usize = 64;

/// One implicit-midpoint step z1 = z0 + h f(m), m = (z0 + z1)/2,
/// solved by fixed-point iteration on the midpoint.
pub(crate) fn step<F>(f: &F, x: f64, u: f64, h: f64) -> (f64, f64)
where
    F: Fn(f64, f64) -> (f64, f64) + ?Sized,
{
    let (mut mx, mut mu) = (x, u);
    for _ in 0..SOLVE_MAX_ITER {
        let (fx, fu) = f(mx, mu);
        let nx = x + 0.5 * h * fx;
        let nu = u + 0.5 * h * fu;
        let delta = (nx - mx).abs() + (nu - mu).abs();
        mx = nx;
        mu = nu;
        if delta < SOLVE_TOL {
            break;
        }
    }
    let (fx, fu) = f(mx, mu);
    (x + h * fx, u + h * fu)
}

/// Integrates from (x, u) over signed time t with fixed step size.
/// Takes floor(|t|/step) full steps plus one remainder step.
pub(crate) fn integrate<F>(f: &F, x: f64, u: f64, t: f64, step_size: f64) -> (f64, f64)
where
    F: Fn(f64, f64) -> (f64, f64) + ?Sized,
{
    debug_assert!(step_size > 0.0);
    let n = (t.abs() / step_size).floor();
    let h = step_size.copysign(t);
    let r = t - n * h;
    let n = n as u64;
    let (mut x, mut u) = (x, u);
    if t < 0.0 && r != 0.0 {
        let (nx, nu) = step(f, x, u, r);
        x = nx;
        u = nu;
    }
    for _ in 0..n {
        let (nx, nu) = step(f, x, u, h);
        x = nx;
        u = nu;
    }
    if t >= 0.0 && r != 0.0 {
        let (nx, nu) = step(f, x, u, r);
        x = nx;
        u = nu;
    }
    (x, u)
}
