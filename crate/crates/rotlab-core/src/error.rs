use thiserror::Error;

use crate::farey::Rational;

/// Crate-wide error type. Variants split into precondition failures
/// (bad arguments, malformed inputs) and numerical failures (a
/// computation ran but could not produce a certified answer); the CLI
/// maps the two groups to different exit codes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integer overflow in exact rational arithmetic")]
    Overflow,

    #[error("point escaped the open annulus (u = {u:e}) while applying {label}")]
    DomainEscape { label: String, u: f64 },

    #[error("no Farey interval with denominators <= {max_den} strictly encloses [{lo}, {hi}]: {blocker} lies inside")]
    NotEnclosable {
        lo: f64,
        hi: f64,
        max_den: i64,
        blocker: Rational,
    },

    #[error("angle {rho} is within 1e-12 of {closest}; cyclic order of order {n} is degenerate")]
    DegenerateAngle { rho: f64, n: usize, closest: Rational },

    #[error("image line is not a graph over the height coordinate near u = {u} (refined to depth {depth})")]
    FoldDetected { u: f64, depth: u32 },

    #[error("lines {i} and {j} are not disjoint in the annulus (min gap {min_gap:e})")]
    NotDisjoint { i: usize, j: usize, min_gap: f64 },

    #[error("chain ordering violated between entries {index} and {}: {detail}", index + 1)]
    ChainOrderViolated { index: usize, detail: String },

    #[error("line is not free for the return construction: {0}")]
    LineNotFree(String),

    #[error("start point ({x}, {u}) is not in the return domain")]
    NotInU { x: f64, u: f64 },

    #[error("no translated line found within budget {budget}; best min gap reached {best_gap:e}")]
    NotFound { budget: usize, best_gap: f64 },

    #[error("only {converged} of {total} samples converged; max_iter is too small for this map")]
    InsufficientConvergence { converged: usize, total: usize },

    #[error("orbit made no return to the fundamental domain within {horizon} steps")]
    NoReturns { horizon: u64 },

    #[error("horizontal displacement {observed} exceeds the bound {bound}; lift is not admissible")]
    UnboundedDisplacement { observed: f64, bound: f64 },

    #[error("invalid bracket for orbit search: {0}")]
    BracketInvalid(String),
}

impl Error {
    /// True for failures of a numerical procedure on well-formed input,
    /// false for violated preconditions.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DomainEscape { .. }
                | Error::NotEnclosable { .. }
                | Error::FoldDetected { .. }
                | Error::NotDisjoint { .. }
                | Error::NotFound { .. }
                | Error::InsufficientConvergence { .. }
                | Error::NoReturns { .. }
                | Error::Overflow
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
