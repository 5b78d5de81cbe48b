//! Critical points of `t ↦ Φ(tv)` along a single ray.

use serde::{Deserialize, Serialize};

use crate::fibering::{self, pow, FiberingCoefficients, FiberingRoots, HomogeneityDegrees};
use crate::roots::{bisect, golden_max, log_grid};

use super::{Branch, NehariError};

/// `(Φ(tv), d/dt Φ(tv))` plus the magnitude of the largest contribution to
/// the derivative, used to normalize residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySample {
    pub value: f64,
    pub derivative: f64,
    pub scale: f64,
}

pub trait RayProfile {
    fn eval(&self, t: f64) -> RaySample;
}

/// How a problem exposes the fibering map along one direction.
pub enum Ray<'a> {
    /// Three-term homogeneous class with closed-form threshold and roots.
    Fibering { degrees: HomogeneityDegrees, coeffs: FiberingCoefficients, lambda: f64 },
    /// Anything else: located by scan-then-bisect on the derivative.
    Profile(Box<dyn RayProfile + Send + 'a>),
}

impl Ray<'_> {
    pub fn eval(&self, t: f64) -> RaySample {
        match self {
            Ray::Fibering { degrees, coeffs, lambda } => RaySample {
                value: fibering::phi_value(coeffs, degrees, *lambda, t).unwrap_or(f64::NAN),
                derivative: fibering::phi_prime(coeffs, degrees, *lambda, t).unwrap_or(f64::NAN),
                scale: fibering::prime_scale(coeffs, degrees, *lambda, t),
            },
            Ray::Profile(p) => p.eval(t),
        }
    }
}

impl RayProfile for Ray<'_> {
    fn eval(&self, t: f64) -> RaySample {
        Ray::eval(self, t)
    }
}

/// `Σ c_k t^{e_k}`: the ray profile of any sum of homogeneous terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSum {
    pub terms: Vec<(f64, f64)>,
}

impl PowerSum {
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        Self { terms }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * pow(t, e)).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * e * pow(t, e - 1.0)).sum()
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * e * (e - 1.0) * pow(t, e - 2.0)).sum()
    }
}

impl RayProfile for PowerSum {
    fn eval(&self, t: f64) -> RaySample {
        let mut value = 0.0;
        let mut derivative = 0.0;
        let mut scale: f64 = 0.0;
        for &(c, e) in &self.terms {
            let te = pow(t, e);
            value += c * te;
            let d = c * e * te / t;
            derivative += d;
            scale = scale.max(d.abs());
        }
        RaySample { value, derivative, scale }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryKind {
    LocalMin,
    LocalMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub t: f64,
    pub kind: StationaryKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayScanOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Relative residual / degeneracy tolerance.
    pub tol: f64,
}

impl Default for RayScanOptions {
    fn default() -> Self {
        Self { t_min: 1e-8, t_max: 1e8, points: 481, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RayCritical {
    Points(Vec<StationaryPoint>),
    Degenerate { t: f64 },
    None { max_relative_derivative: f64 },
}

/// Sign changes of the derivative on a log grid, refined by bisection. When
/// no sign change is seen, the largest normalized derivative is refined by
/// golden section to tell a narrow positive window from a tangency.
pub fn scan_critical_points<P: RayProfile + ?Sized>(profile: &P, opts: &RayScanOptions) -> RayCritical {
    let ts = log_grid(opts.t_min, opts.t_max, opts.points);
    let samples: Vec<RaySample> = ts.iter().map(|&t| profile.eval(t)).collect();
    let d = |t: f64| profile.eval(t).derivative;
    let mut points = Vec::new();
    for i in 0..ts.len() - 1 {
        let (a, b) = (samples[i].derivative, samples[i + 1].derivative);
        if !(a.is_finite() && b.is_finite()) || a == b {
            continue;
        }
        let kind = if a < 0.0 && b >= 0.0 {
            StationaryKind::LocalMin
        } else if a > 0.0 && b <= 0.0 {
            StationaryKind::LocalMax
        } else {
            continue;
        };
        let t = if b == 0.0 { ts[i + 1] } else { bisect(d, ts[i], ts[i + 1], 200) };
        points.push(StationaryPoint { t, kind });
    }
    // A zero at a grid node shows up in two consecutive intervals.
    points.dedup_by(|a, b| a.t == b.t && a.kind == b.kind);
    if !points.is_empty() {
        return RayCritical::Points(points);
    }

    let rel = |s: &RaySample| if s.scale > 0.0 { s.derivative / s.scale } else { s.derivative };
    let (imax, best) = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.derivative.is_finite())
        .map(|(i, s)| (i, rel(s)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let lo = ts[imax.saturating_sub(1)];
    let hi = ts[(imax + 1).min(ts.len() - 1)];
    let (t_star, refined) = golden_max(|t| rel(&profile.eval(t)), lo, hi, 200);
    let max_rel = refined.max(best);
    if max_rel > opts.tol {
        let t_lo = bisect(d, lo, t_star, 200);
        let t_hi = bisect(d, t_star, hi, 200);
        return RayCritical::Points(vec![
            StationaryPoint { t: t_lo, kind: StationaryKind::LocalMin },
            StationaryPoint { t: t_hi, kind: StationaryKind::LocalMax },
        ]);
    }
    if max_rel.abs() <= opts.tol {
        return RayCritical::Degenerate { t: t_star };
    }
    RayCritical::None { max_relative_derivative: max_rel }
}

/// Result of locating the requested branch on one ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchRoot {
    pub t: f64,
    pub value: f64,
    /// `|d/dt Φ(tv)| / scale` at the root.
    pub relative_residual: f64,
    /// `t·scale`: size of the largest term in `Φ(tv)`.
    pub magnitude: f64,
}

pub fn branch_root(ray: &Ray<'_>, branch: Branch, opts: &RayScanOptions) -> Result<BranchRoot, NehariError> {
    let t = match ray {
        Ray::Fibering { degrees, coeffs, lambda } => match fibering::fibering_roots(coeffs, degrees, *lambda, opts.tol)? {
            FiberingRoots::TwoRoots { t_plus, t_minus } => match branch {
                Branch::Plus => t_plus,
                Branch::Minus => t_minus,
            },
            FiberingRoots::Degenerate { t0 } => return Err(NehariError::DegenerateRay { t: t0 }),
            FiberingRoots::NoRoots { threshold } => {
                return Err(NehariError::BranchUnavailable {
                    branch,
                    detail: format!("lambda={lambda} exceeds the ray threshold {threshold}"),
                })
            }
        },
        Ray::Profile(p) => match scan_critical_points(p.as_ref(), opts) {
            RayCritical::Points(points) => pick_branch(&points, branch)?,
            RayCritical::Degenerate { t } => return Err(NehariError::DegenerateRay { t }),
            RayCritical::None { max_relative_derivative } => {
                return Err(NehariError::BranchUnavailable {
                    branch,
                    detail: format!("no stationary point; max relative derivative {max_relative_derivative:e}"),
                })
            }
        },
    };
    let s = ray.eval(t);
    let relative_residual = if s.scale > 0.0 { s.derivative.abs() / s.scale } else { s.derivative.abs() };
    Ok(BranchRoot { t, value: s.value, relative_residual, magnitude: t * s.scale })
}

fn pick_branch(points: &[StationaryPoint], branch: Branch) -> Result<f64, NehariError> {
    let first_min = points.iter().position(|p| p.kind == StationaryKind::LocalMin);
    let found = match branch {
        Branch::Plus => first_min.map(|i| points[i].t),
        Branch::Minus => {
            let start = first_min.map_or(0, |i| i + 1);
            points[start..].iter().find(|p| p.kind == StationaryKind::LocalMax).map(|p| p.t)
        }
    };
    found.ok_or_else(|| NehariError::BranchUnavailable {
        branch,
        detail: format!("stationary pattern {:?} lacks the requested branch", points.iter().map(|p| p.kind).collect::<Vec<_>>()),
    })
}
