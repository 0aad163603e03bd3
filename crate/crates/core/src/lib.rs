//! Maximal-leakage accounting for noisy iterative learning algorithms.
//!
//! An SGLD-like update `w_t = w_{t-1} - eta_t * F(w_{t-1}, z_t) + xi_t` with an
//! Lp-bounded update direction and additive noise leaks a bounded amount of
//! information about the training set per step. This crate computes those
//! per-step leakage bounds in closed form, accumulates them over a training
//! schedule, converts the total into high-probability generalization bounds,
//! and cross-validates every closed form against independent numerical
//! oracles (deterministic quadrature and importance-sampled Monte Carlo).
//!
//! Module map:
//!
//! - [`model`]: domain types (norm orders, noise specs, schedules) and validation
//! - [`special`]: log-gamma, log-binomials, log-sum-exp, Lp-ball volumes
//! - [`geometry`]: distances to and projections onto Lp balls
//! - [`noise`]: densities, variances, and seeded samplers for the noise families
//! - [`hfunc`]: the tail functional h(d, p, f, r): closed forms and oracles
//! - [`bounds`]: per-step and total leakage bounds, the MI baseline, limits
//! - [`design`]: optimal noise under a variance budget
//! - [`generalization`]: expected-value and tail generalization bounds
//! - [`oracle`]: exact single-step leakage for finite shift sets
//! - [`sim`]: desk-scale noisy training with leakage accounting
//!
//! All internal bound assembly happens in log space; quantities are
//! exponentiated only at the reporting boundary.

// Parameter guards are written as `!(x > 0.0)` on purpose: the negation
// rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod design;
pub mod generalization;
pub mod geometry;
pub mod hfunc;
pub mod model;
pub mod noise;
pub mod oracle;
mod quadrature;
pub mod sim;
pub mod special;

pub use bounds::{step_bound, total_bound, BoundCase, BoundReport, CaseSelector, StepLeakageTerm};
pub use hfunc::{HEstimate, HQuery, NumericMethod};
pub use model::{
    GenQuery, NoiseFamily, NoiseSpec, NormOrder, Step, StepSchedule, TrainingSpec, UpdateConstraint,
};

use thiserror::Error;

/// Errors shared across the bound/oracle machinery.
///
/// Spec-validation failures are reported separately as
/// [`model::SpecViolation`] lists so that every violated invariant is named.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input")]
    EmptyInput,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("wrong case: {0}")]
    WrongCase(String),

    #[error("unsupported dimension {d} for {what} (max {max})")]
    UnsupportedDimension {
        what: &'static str,
        d: usize,
        max: usize,
    },

    #[error("no exact inner supremum for ({family}, p={p}); pair unsupported by this method")]
    UnsupportedPair {
        family: &'static str,
        p: &'static str,
    },

    #[error("no closed form for (p={p}, {family})")]
    NoClosedForm {
        family: &'static str,
        p: &'static str,
    },

    #[error("shift {index} lies outside the L{p} ball of radius {radius}")]
    ShiftOutsideBall {
        index: usize,
        p: &'static str,
        radius: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
