//! Proportional–integral proximal-gradient dynamics (PI–PGD) for
//!
//! ```text
//!     minimize   f(x) + g(x)
//!     subject to h(x) = 0
//! ```
//!
//! The multipliers are driven by a PI controller on the constraint output
//! while the primal variables follow a forward–backward (proximal-gradient)
//! flow. Alongside the vector fields and integrators the crate ships the
//! contraction-analysis tools used to certify gain choices, instance
//! generators with independent reference solvers, and a Sinkhorn baseline
//! for entropic optimal transport.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod prox;
pub mod rng;

pub use error::{Error, Result};
pub use model::{
    metric_distance, AffineConstraint, BlockMetric, CompositeProblem, ConstraintMap,
    ProxOperator, RunStatus, SmoothTerm, SolverParams, State, Trajectory,
};
