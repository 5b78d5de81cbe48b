use crate::fields::{ops::dot, DiscreteField};

use super::{problem::ray_of, ray::branch_root, Branch, NehariError, NehariPoint, RayScanOptions, Sphere, VariationalProblem};

/// Everything the optimizer needs at one sphere point.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchState {
    pub t: f64,
    pub value: f64,
    pub ray_residual: f64,
    /// Size of the largest term of `Φ(tv)`; rounding in `value` is relative to it.
    pub magnitude: f64,
    /// `t·Φ'(tv)`: the differential of the 0-homogeneous extension of `Ψ±` at `v`.
    pub covector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedGradient {
    pub t: f64,
    /// Tangential part of `t·Φ'(tv)` as a covector.
    pub covector: Vec<f64>,
    /// Riemannian gradient (primal tangent vector).
    pub direction: Vec<f64>,
    /// Metric norm of the tangential part.
    pub norm: f64,
    /// `Φ'(tv)·(tv)`, zero on the Nehari set.
    pub radial: f64,
}

pub(super) fn branch_value<P: VariationalProblem + ?Sized>(
    prob: &P,
    v: &[f64],
    branch: Branch,
    scan: &RayScanOptions,
) -> Result<(f64, f64, f64), NehariError> {
    let r = branch_root(&ray_of(prob, v)?, branch, scan)?;
    Ok((r.t, r.value, r.relative_residual))
}

pub(super) fn branch_state<P: VariationalProblem + ?Sized>(
    prob: &P,
    v: &[f64],
    branch: Branch,
    scan: &RayScanOptions,
) -> Result<BranchState, NehariError> {
    let r = branch_root(&ray_of(prob, v)?, branch, scan)?;
    let (t, value, ray_residual, magnitude) = (r.t, r.value, r.relative_residual, r.magnitude);
    let u: Vec<f64> = v.iter().map(|x| t * x).collect();
    let mut covector = prob.gradient(&u)?;
    covector.iter_mut().for_each(|x| *x *= t);
    Ok(BranchState { t, value, ray_residual, magnitude, covector })
}

fn checked_sphere<P: VariationalProblem + ?Sized>(prob: &P, v: &DiscreteField) -> Result<Sphere, NehariError> {
    if v.grid() != prob.grid() {
        return Err(NehariError::Evaluation("direction lives on a different grid".into()));
    }
    let sphere = Sphere::new(prob.grid(), prob.sphere_exponent())?;
    sphere.check_unit(v.values())?;
    Ok(sphere)
}

pub(super) fn to_point(sphere: &Sphere, v: &[f64], branch: Branch, state: &BranchState) -> NehariPoint {
    NehariPoint {
        direction: DiscreteField::new(*sphere.grid(), v.to_vec()).expect("finite direction on the problem grid"),
        branch,
        t: state.t,
        value: state.value,
        residual: sphere.metric().dual_norm(&state.covector) / state.t,
        ray_residual: state.ray_residual,
    }
}

/// `m±(v) = t±(v)v` together with its value and residuals.
pub fn project_to_branch<P: VariationalProblem + ?Sized>(
    prob: &P,
    v: &DiscreteField,
    branch: Branch,
    scan: &RayScanOptions,
) -> Result<NehariPoint, NehariError> {
    let sphere = checked_sphere(prob, v)?;
    let state = branch_state(prob, v.values(), branch, scan)?;
    Ok(to_point(&sphere, v.values(), branch, &state))
}

/// `Ψ±(v) = Φ(t±(v)v)`.
pub fn reduced_value<P: VariationalProblem + ?Sized>(
    prob: &P,
    v: &DiscreteField,
    branch: Branch,
    scan: &RayScanOptions,
) -> Result<f64, NehariError> {
    checked_sphere(prob, v)?;
    Ok(branch_value(prob, v.values(), branch, scan)?.1)
}

pub fn reduced_gradient<P: VariationalProblem + ?Sized>(
    prob: &P,
    v: &DiscreteField,
    branch: Branch,
    scan: &RayScanOptions,
) -> Result<ReducedGradient, NehariError> {
    let sphere = checked_sphere(prob, v)?;
    let state = branch_state(prob, v.values(), branch, scan)?;
    let radial = dot(&state.covector, v.values());
    let tg = sphere.tangent_gradient(v.values(), &state.covector);
    Ok(ReducedGradient { t: state.t, covector: tg.covector, direction: tg.direction, norm: tg.norm, radial })
}
