//! Numerical rotation theory for annulus homeomorphisms.
//!
//! The crate works with lifts of orientation- and end-preserving
//! homeomorphisms of the open annulus S^1 x (0, 1) to the universal
//! cover R x (0, 1), where the deck translation is
//! T(x, u) = (x + 1, u). Around that model it provides:
//!
//! - [`cover`]: lifted maps, the built-in map families (rigid
//!   rotations, twists, Hamiltonian time-t maps, compositions) and the
//!   structural checks every lift must pass (equivariance, inverse
//!   consistency, area preservation of the Jacobian).
//! - [`rotation`]: rotation numbers of points through recurrence-time
//!   subsequences, Monte Carlo rotation sets with a mean rotation
//!   number, morphism and deck-translation identities, and the
//!   first-return statistics (nu, tau) across an essential line.
//! - [`farey`]: exact Stern-Brocot arithmetic; Farey intervals
//!   ]p/q, p'/q'[ with q p' - p q' = 1, the enclosing-interval search,
//!   the (k, l) decomposition of h^m T^-n in terms of the first-return
//!   pair, and cyclic orders of rigid orbits.
//! - [`lines`]: piecewise-linear essential lines, their images,
//!   ordering and joins, shear straightening, the area identity for
//!   the mean rotation number, and verification plus search for lines
//!   whose first q + q' - 1 images are pairwise disjoint and rigidly
//!   ordered.
//! - [`orbits`]: Newton search for periodic orbits h^q(z) = z + (p, 0),
//!   the pseudo-rotation test (irrational rotation set and no periodic
//!   orbits), bracketed search, and perturbation sweeps over a rotated
//!   family.
//! - [`flows`]: periodic vector fields, a fixed-step implicit-midpoint
//!   flow, tanh-transported cutoff families with the slow-down
//!   property, and the linearity check for rotation numbers of flow
//!   maps.
//!
//! Coordinates are always cover coordinates (x, u) with x in R and
//! u in (0, 1); circle quantities are reductions mod 1. Every sampling
//! routine takes an explicit seed and is deterministic for a given
//! seed regardless of thread count.

/// Crate version, echoed into experiment metadata by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod cover;
pub mod error;
pub mod farey;
pub mod flows;
pub mod lines;
pub mod orbits;
pub mod rotation;

mod midpoint;

pub use error::{Error, Result};
