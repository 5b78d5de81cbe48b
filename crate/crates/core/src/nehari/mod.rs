//! Branch projections `t±(v)`, reduced functionals `Ψ±(v) = Φ(t±(v)v)` and
//! their minimization over the unit sphere of `(∫|∇u|^p)^{1/p}`.

mod branch;
mod diagnostics;
mod minimize;
mod problem;
mod ray;
mod sphere;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibering::FiberingError;
use crate::fields::{DiscreteField, FieldError};

pub use branch::{project_to_branch, reduced_gradient, reduced_value, BranchState, ReducedGradient};
pub use diagnostics::{condition_ratios, continuity_probe, sample_directions, ConditionRatios, ContinuityReport};
pub use minimize::{minimize_branch, MinimizeOptions};
pub use problem::{ray_of, SampledRay, VariationalProblem};
pub use ray::{
    branch_root, scan_critical_points, BranchRoot, PowerSum, Ray, RayCritical, RayProfile, RaySample, RayScanOptions,
    StationaryKind, StationaryPoint,
};
pub use sphere::{Sphere, TangentVector};

#[derive(Debug, Error)]
pub enum NehariError {
    #[error("direction is not on the unit sphere (norm {norm})")]
    NotOnSphere { norm: f64 },
    #[error("{branch} branch unavailable on this ray: {detail}")]
    BranchUnavailable { branch: Branch, detail: String },
    #[error("degenerate ray: the critical point near t = {t} is not simple")]
    DegenerateRay { t: f64 },
    #[error("no start admitted the {branch} branch after {attempts} attempts")]
    InfeasibleBranch { branch: Branch, attempts: usize },
    #[error("problem has no homogeneous structure to report")]
    NoHomogeneousHint,
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Fibering(#[from] FiberingError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        })
    }
}

/// `t·direction` on the requested branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NehariPoint {
    pub direction: DiscreteField,
    pub branch: Branch,
    pub t: f64,
    pub value: f64,
    /// Dual norm of the full gradient `Φ'(t·direction)`.
    pub residual: f64,
    /// `|d/dt Φ(t·direction)|` relative to the largest term.
    pub ray_residual: f64,
}

impl NehariPoint {
    pub fn point(&self) -> Vec<f64> {
        self.direction.values().iter().map(|x| x * self.t).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchLevel {
    pub branch: Branch,
    pub level: f64,
    pub minimizer: NehariPoint,
    pub iterations: usize,
    pub tangent_residual: f64,
    pub converged: bool,
    /// Index of the start that produced the minimizer.
    pub best_start: usize,
    /// Final level of each start, `None` when it never admitted the branch.
    pub start_levels: Vec<Option<f64>>,
    /// Directions drawn again because the branch was unavailable or degenerate.
    pub resampled: usize,
    /// Accepted `Ψ±` values of the winning start when history is recorded.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub history: Vec<f64>,
}

#[cfg(test)]
pub(crate) mod tests;
