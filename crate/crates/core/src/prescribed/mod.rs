//! Prescribed-energy problems: find `(λ, u)` with `Φ_λ'(u) = 0` and
//! `Φ_λ(u) = c < 0` for `Φ_λ = I₁ − λI₂`, by minimizing
//! `λ_c(u) = (I₁(u) − c)/I₂(u)` over its Nehari branches.
//!
//! Along a ray, `d/dt λ_c(tv) = (H(tv) + αc)/(t^{α+1} I₂(v))` with
//! `H(u) = I₁'(u)u − αI₁(u)`, so the branches of `λ_c` are the two crossings
//! of `H(tv) = −αc`, which exist exactly when `−αc < max_t H(tv)`.

mod diagnostics;
mod functionals;
mod h;
mod model;
mod solve;

use thiserror::Error;

use crate::fields::FieldError;
use crate::nehari::NehariError;

pub use diagnostics::{
    c_sweep, coercivity_probe, gap_diagnostics, ray_gaps, two_root_regime, CoercivityReport, CoercivityRow, GapReport, RayGaps,
    RegimeReport, SweepRow,
};
pub use functionals::{HFunctional, LambdaC, PhiLambda};
pub use h::{analyze_h_profile, h_ground_level, h_profile, h_ray, roots_of_h, HGroundLevel, HProfile};
pub use model::{
    build_pq_laplacian, build_semilinear_cc, check_f2, h_terms, sobolev_exponent, CustomNonlinearity, Model, MonotonicityCheck,
    Nonlinearity, PrescribedProblem,
};
pub use solve::{certify, lambda_c_value, residual_scale, solve_prescribed, EnergySolution, PrescribedOptions};

#[derive(Debug, Error)]
pub enum PrescribedError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("nonlinearity is not finite at node {index}")]
    NonFinite { index: usize },
    #[error("I2 must be positive away from zero, got {value}")]
    NonPositiveI2 { value: f64 },
    #[error("energy level c = {c} is outside 0 < -{alpha}c < h0 = {h0}")]
    OutOfRange { c: f64, alpha: f64, h0: f64 },
    #[error("H is not increasing-then-decreasing along the ray ({shape}); samples: {dump}")]
    NotUnimodal { shape: String, dump: String },
    #[error("level {target} is within tolerance of the ray maximum {h_max}")]
    DegenerateLevel { target: f64, h_max: f64 },
    #[error("bracketing failed: {0}")]
    Bracket(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nehari(#[from] NehariError),
}

#[cfg(test)]
mod tests;
