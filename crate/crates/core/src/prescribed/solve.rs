use serde::{Deserialize, Serialize};

use crate::fields::{DirichletMetric, DiscreteField};
use crate::nehari::{minimize_branch, Branch, BranchLevel, MinimizeOptions, VariationalProblem};

use super::functionals::{LambdaC, PhiLambda};
use super::h::HGroundLevel;
use super::model::PrescribedProblem;
use super::PrescribedError;

pub fn lambda_c_value(prob: &PrescribedProblem, u: &[f64], c: f64) -> Result<f64, PrescribedError> {
    LambdaC { problem: prob, c }.eval(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescribedOptions {
    pub minimize: MinimizeOptions,
    /// Bound for both certification residuals.
    pub tol: f64,
    /// Measure the gradient residual against [`residual_scale`] instead of
    /// absolutely.
    pub relative_tol: bool,
    /// Warm-started reruns with a tighter descent tolerance when the
    /// gradient residual of `Φ_λ*` misses `tol`.
    pub refinements: usize,
}

impl Default for PrescribedOptions {
    fn default() -> Self {
        Self { minimize: MinimizeOptions::default(), tol: 1e-6, relative_tol: false, refinements: 4 }
    }
}

/// `(λ*, u*)` with `Φ_λ*'(u*) = 0` and `Φ_λ*(u*) = c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySolution {
    pub c: f64,
    pub branch: Branch,
    pub lambda_star: f64,
    pub u_star: DiscreteField,
    /// Dual norm of `Φ_λ*'(u*)`.
    pub phi_residual: f64,
    /// Bound `phi_residual` was certified against.
    pub residual_bound: f64,
    /// `|Φ_λ*(u*) − c|`.
    pub energy_error: f64,
    pub certified: bool,
    pub level: BranchLevel,
}

/// Checks that `(λ, u)` solves the prescribed-energy system.
pub fn certify(prob: &PrescribedProblem, lambda: f64, u: &[f64], c: f64) -> Result<(f64, f64), PrescribedError> {
    let phi = PhiLambda { problem: prob, lambda };
    let g = phi.gradient(u)?;
    let residual = DirichletMetric::new(prob.grid()).dual_norm(&g);
    let energy_error = (phi.value(u)? - c).abs();
    Ok((residual, energy_error))
}

/// `max(1, ‖I₁'(u)‖, λ‖I₂'(u)‖)` in the dual norm: the size of the two
/// gradients that cancel at a critical point of `Φ_λ`.
pub fn residual_scale(prob: &PrescribedProblem, lambda: f64, u: &[f64]) -> Result<f64, PrescribedError> {
    let metric = DirichletMetric::new(prob.grid());
    let a = metric.dual_norm(&prob.i1_gradient(u)?);
    let b = lambda.abs() * metric.dual_norm(&prob.i2_gradient(u));
    Ok(a.max(b).max(1.0))
}

/// Minimizes `λ_c` over the requested branch and certifies the minimizer as
/// a critical point of `Φ_λ` at energy `c`.
pub fn solve_prescribed(
    prob: &PrescribedProblem,
    c: f64,
    ground: &HGroundLevel,
    branch: Branch,
    opts: &PrescribedOptions,
) -> Result<EnergySolution, PrescribedError> {
    let alpha = prob.alpha();
    if !(c < 0.0 && -alpha * c < ground.h0) {
        return Err(PrescribedError::OutOfRange { c, alpha, h0: ground.h0 });
    }
    let lc = LambdaC { problem: prob, c };
    let mut mopts = opts.minimize.clone();
    let mut level = minimize_branch(&lc, branch, &mopts)?;
    let mut u = level.minimizer.point();
    let bound = |lambda: f64, u: &[f64]| -> Result<f64, PrescribedError> {
        Ok(if opts.relative_tol { opts.tol * residual_scale(prob, lambda, u)? } else { opts.tol })
    };
    let (mut residual, mut energy_error) = certify(prob, level.level, &u, c)?;
    let mut residual_bound = bound(level.level, &u)?;
    for _ in 0..opts.refinements {
        if residual <= residual_bound {
            break;
        }
        mopts = MinimizeOptions {
            starts: 1,
            tol: 0.5 * mopts.tol * (residual_bound / residual).min(1.0),
            torsion_start: false,
            initial_directions: vec![level.minimizer.direction.values().to_vec()],
            ..mopts
        };
        let refined = minimize_branch(&lc, branch, &mopts)?;
        if refined.level > level.level {
            break;
        }
        let refined_u = refined.minimizer.point();
        let (r, e) = certify(prob, refined.level, &refined_u, c)?;
        let iterations = level.iterations + refined.iterations;
        level = BranchLevel {
            iterations,
            start_levels: level.start_levels,
            resampled: level.resampled,
            best_start: level.best_start,
            ..refined
        };
        residual_bound = bound(level.level, &refined_u)?;
        u = refined_u;
        residual = r;
        energy_error = e;
    }
    Ok(EnergySolution {
        c,
        branch,
        lambda_star: level.level,
        u_star: DiscreteField::new(*prob.grid(), u)?,
        phi_residual: residual,
        residual_bound,
        energy_error,
        certified: residual <= residual_bound && energy_error <= opts.tol,
        level,
    })
}
