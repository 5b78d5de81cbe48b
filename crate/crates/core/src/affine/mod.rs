//! The affine p-Laplacian problem in two dimensions.
//!
//! The affine p-energy replaces `‖∇u‖_p` by an average of the directional
//! norms `‖∇_ξ u‖_p` over `ξ ∈ S¹` taken with power `−2`, which makes it
//! invariant under volume-preserving linear maps. `Φ = (1/p)E^p − (λ/q)‖u‖_q^q
//! − (1/r)‖u‖_r^r` has the homogeneous fibering structure with degrees
//! `(q, p, r)`, so every ray is analyzed in closed form.

mod energy;
mod problem;
mod theorem;

use thiserror::Error;

use crate::fibering::FiberingError;
use crate::fields::FieldError;
use crate::nehari::NehariError;

pub use energy::{affine_energy, affine_energy_gradient, energy_and_gradient, gamma_2p, unit_ball_volume, AffineEnergyConfig};
pub use problem::{
    lambda_a_estimate, lambda_a_refined, refine_threshold, solve_affine, AffineProblem, AffineSolution, LambdaEstimate,
};
pub use theorem::{
    affine_gap_checks, affine_ray_gap, log_log_slope, theorem_taf_checks, AffineGapReport, AffineRayGap, LambdaBar, SlopeFit,
    SweepPoint, TafOptions, TafReport,
};

#[derive(Debug, Error)]
pub enum AffineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("the affine energy is undefined at u = 0")]
    ZeroField,
    #[error("directional norm {norm:e} at angle {angle} is below 1e-14 times the gradient norm {reference:e}")]
    DegenerateDirection { angle: f64, norm: f64, reference: f64 },
    #[error(transparent)]
    Fibering(#[from] FiberingError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nehari(#[from] NehariError),
}

#[cfg(test)]
mod tests;
