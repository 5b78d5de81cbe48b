use serde::{Deserialize, Serialize};

use crate::fields::DiscreteField;
use crate::nehari::{
    minimize_branch, ray_of, scan_critical_points, Branch, BranchLevel, MinimizeOptions, RayCritical, RayProfile, RayScanOptions,
    StationaryKind,
};
use crate::roots::{bisect, log_grid};

use super::functionals::HFunctional;
use super::model::PrescribedProblem;
use super::PrescribedError;

/// Shape of `t ↦ H(tv)`: its maximizer `s(v)`, the maximum, and the roots of
/// `H(tv) = −αc` when a level is given and reachable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HProfile {
    pub s: f64,
    pub h_max: f64,
    /// `(t_c⁺, t_c⁻)`.
    pub roots: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

const MAX_EXPANSIONS: usize = 200;

fn dump(profile: &dyn RayProfile, scan: &RayScanOptions) -> String {
    log_grid(scan.t_min, scan.t_max, 17)
        .into_iter()
        .map(|t| {
            let s = profile.eval(t);
            format!("t={t:.3e}: H={:.6e}, dH={:.6e}", s.value, s.derivative)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Locates the single interior maximum of an increasing-then-decreasing ray
/// profile, and optionally the two crossings of `target`.
pub fn analyze_h_profile(
    profile: &dyn RayProfile,
    target: Option<f64>,
    scan: &RayScanOptions,
) -> Result<HProfile, PrescribedError> {
    let s = match scan_critical_points(profile, scan) {
        RayCritical::Points(p) if p.len() == 1 && p[0].kind == StationaryKind::LocalMax => p[0].t,
        other => {
            return Err(PrescribedError::NotUnimodal { shape: format!("{other:?}"), dump: dump(profile, scan) });
        }
    };
    let h_max = profile.eval(s).value;
    let Some(target) = target else {
        return Ok(HProfile { s, h_max, roots: None, note: None });
    };
    if (h_max - target).abs() <= scan.tol * h_max.abs().max(target.abs()) {
        return Err(PrescribedError::DegenerateLevel { target, h_max });
    }
    if target > h_max {
        return Ok(HProfile { s, h_max, roots: None, note: Some(format!("level {target:e} exceeds the ray maximum {h_max:e}")) });
    }
    let g = |t: f64| profile.eval(t).value - target;
    let mut lo = 0.5 * s;
    let mut n = 0;
    while g(lo) >= 0.0 {
        lo *= 0.5;
        n += 1;
        if n > MAX_EXPANSIONS || lo == 0.0 {
            return Err(PrescribedError::Bracket(format!("no left crossing of {target:e} below s = {s:e}")));
        }
    }
    let mut hi = 2.0 * s;
    n = 0;
    while g(hi) >= 0.0 {
        hi *= 2.0;
        n += 1;
        if n > MAX_EXPANSIONS || !hi.is_finite() {
            return Err(PrescribedError::Bracket(format!("no right crossing of {target:e} above s = {s:e}")));
        }
    }
    let t_plus = bisect(g, lo, s, 200);
    let t_minus = bisect(g, s, hi, 200);
    Ok(HProfile { s, h_max, roots: Some((t_plus, t_minus)), note: None })
}

/// `(H(tv), d/dt H(tv))`.
pub fn h_ray(prob: &PrescribedProblem, v: &[f64], t: f64) -> Result<(f64, f64), PrescribedError> {
    let h = HFunctional { problem: prob };
    let s = ray_of(&h, v)?.eval(t);
    Ok((s.value, s.derivative))
}

pub fn h_profile(prob: &PrescribedProblem, v: &[f64], scan: &RayScanOptions) -> Result<HProfile, PrescribedError> {
    let h = HFunctional { problem: prob };
    let ray = ray_of(&h, v)?;
    analyze_h_profile(&ray, None, scan)
}

pub fn roots_of_h(prob: &PrescribedProblem, v: &[f64], c: f64, scan: &RayScanOptions) -> Result<HProfile, PrescribedError> {
    if !(c < 0.0) {
        return Err(PrescribedError::Config(format!("energy level must be negative, got c = {c}")));
    }
    let h = HFunctional { problem: prob };
    let ray = ray_of(&h, v)?;
    analyze_h_profile(&ray, Some(-prob.alpha() * c), scan)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HGroundLevel {
    pub h0: f64,
    pub s: f64,
    pub direction: DiscreteField,
    pub level: BranchLevel,
}

/// `h₀ = inf_v max_t H(tv)`, computed by minimizing the ray maxima over the
/// sphere. The result is an upper bound for the true infimum.
pub fn h_ground_level(prob: &PrescribedProblem, opts: &MinimizeOptions) -> Result<HGroundLevel, PrescribedError> {
    let h = HFunctional { problem: prob };
    let level = minimize_branch(&h, Branch::Minus, opts)?;
    let direction = level.minimizer.direction.clone();
    let profile = h_profile(prob, direction.values(), &opts.scan())?;
    if !(level.level >= 0.0) {
        return Err(PrescribedError::Bracket(format!("negative ground level {} for H", level.level)));
    }
    Ok(HGroundLevel { h0: level.level, s: profile.s, direction, level })
}
