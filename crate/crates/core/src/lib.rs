//! Nehari manifold solvers for functionals whose fibering maps have a local
//! minimum followed by a local maximum.
//!
//! - [`fibering`]: exact analysis of the three-term homogeneous fibering map.
//! - [`fields`]: grids, nodal fields, stencils, energies and gradients.
//! - [`nehari`]: per-ray branch projection, reduced functionals, and
//!   sphere-constrained minimization giving the first level on each branch.
//! - [`prescribed`]: the prescribed-energy quotient `λ_c`, its `H` functional,
//!   ground level `h₀`, certified solves and gap diagnostics.
//! - [`affine`]: the 2-D affine p-energy and its concave-convex problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod exec;
pub mod fibering;
pub mod fields;
pub mod nehari;
pub mod prescribed;
pub mod roots;

pub use exec::Execution;
