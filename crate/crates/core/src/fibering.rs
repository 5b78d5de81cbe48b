//! Closed-form and numerical analysis of the scalar fibering map
//!
//! ```text
//! φ(t) = (1/η) E t^η − (λ/α) A t^α − (1/β) B t^β,   t > 0,
//! ```
//!
//! for functionals built from three positive homogeneous terms of degrees
//! `α < η < β` (any of which may be negative). Depending on λ relative to the
//! per-direction threshold λ(u), the map has two critical points (a local
//! minimum followed by a local maximum), a single degenerate one, or none.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots::bisect;

/// Relative width of the band around λ(u) classified as degenerate.
pub const DEFAULT_DEGENERACY_BAND: f64 = 1e-9;

const MAX_BISECTION_ITERS: usize = 200;
const MAX_DOUBLINGS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberingError {
    #[error("invalid homogeneity degrees (alpha={alpha}, eta={eta}, beta={beta}): need alpha < eta < beta, all nonzero")]
    InvalidDegrees { alpha: f64, eta: f64, beta: f64 },
    #[error("fibering coefficients must be finite and positive (e={e}, a={a}, b={b})")]
    InvalidCoefficients { e: f64, a: f64, b: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("bracket expansion failed after {doublings} doublings from t={start}")]
    BracketExpansion { start: f64, doublings: usize },
    #[error("root at t={t} has residual {residual:e} above tolerance {tol:e} (scale {scale:e})")]
    RootResidual { t: f64, residual: f64, tol: f64, scale: f64 },
    #[error("t={t} is not stationary: |φ'(t)|={residual:e} exceeds {tol:e} relative")]
    NotStationary { t: f64, residual: f64, tol: f64 },
    #[error("lambda={lambda} is not below the threshold lambda(u)={threshold}; no root pair")]
    NoRootPair { lambda: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, FiberingError>;

/// Degrees of homogeneity `(α, η, β)` of the terms `A`, `E`, `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityDegrees {
    pub alpha: f64,
    pub eta: f64,
    pub beta: f64,
}

impl HomogeneityDegrees {
    pub fn new(alpha: f64, eta: f64, beta: f64) -> Result<Self> {
        let ok = [alpha, eta, beta].iter().all(|x| x.is_finite() && *x != 0.0) && alpha < eta && eta < beta;
        if !ok {
            return Err(FiberingError::InvalidDegrees { alpha, eta, beta });
        }
        Ok(Self { alpha, eta, beta })
    }

    /// The constant `C(α, η, β)` in the threshold formula.
    pub fn threshold_constant(&self) -> f64 {
        let Self { alpha, eta, beta } = *self;
        (beta - eta) / (beta - alpha) * ((eta - alpha) / (beta - alpha)).powf((eta - alpha) / (beta - eta))
    }
}

/// Values `(E(u), A(u), B(u))` of the three terms along one direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberingCoefficients {
    pub e: f64,
    pub a: f64,
    pub b: f64,
}

impl FiberingCoefficients {
    pub fn new(e: f64, a: f64, b: f64) -> Result<Self> {
        if ![e, a, b].iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(FiberingError::InvalidCoefficients { e, a, b });
        }
        Ok(Self { e, a, b })
    }

    /// Coefficients of the ray through `s·u` given those of `u`.
    pub fn scaled(&self, deg: &HomogeneityDegrees, s: f64) -> Self {
        Self { e: self.e * pow(s, deg.eta), a: self.a * pow(s, deg.alpha), b: self.b * pow(s, deg.beta) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalThreshold {
    pub lambda_u: f64,
    pub t0: f64,
    pub c_const: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberingRoots {
    TwoRoots { t_plus: f64, t_minus: f64 },
    Degenerate { t0: f64 },
    NoRoots { threshold: f64 },
}

impl FiberingRoots {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FiberingRoots::TwoRoots { .. } => "two_roots",
            FiberingRoots::Degenerate { .. } => "degenerate",
            FiberingRoots::NoRoots { .. } => "no_roots",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    LocalMin,
    LocalMax,
    Degenerate,
}

/// Bounds on the root pair from the second-order sign identities, together
/// with the constants as originally stated, for comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootBounds {
    /// `t⁺ < (λ (β−α)/(β−η) · a/e)^{1/(η−α)}`.
    pub t_plus_upper: f64,
    /// `t⁻ ≥ ((η−α)/(β−α) · e/b)^{1/(β−η)}`, which equals `t₀`.
    pub t_minus_lower: f64,
    /// Literal upper bound with `|η−β|` in place of `η−β`; reported only.
    pub paper_t_plus_upper: f64,
    /// Literal lower bound `((β−α)/(η−α) · e/b)^{1/(β−η)}`; reported only.
    pub paper_t_minus_lower: f64,
    /// `E(t⁻u)/B(t⁻u)`, to compare with `energy_ratio_constant`.
    pub minus_energy_ratio: f64,
    /// `(β−η)/(η−α)`.
    pub energy_ratio_constant: f64,
}

/// `t^k` for `t > 0`, via `exp(k ln t)` so fractional and negative powers
/// never fault.
#[inline]
pub fn pow(t: f64, k: f64) -> f64 {
    (k * t.ln()).exp()
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(FiberingError::Domain { name, value })
    }
}

pub fn phi_value(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_positive("lambda", lambda)?;
    Ok(c.e * pow(t, d.eta) / d.eta - lambda * c.a * pow(t, d.alpha) / d.alpha - c.b * pow(t, d.beta) / d.beta)
}

/// The three terms `(t^{η−1}e, λt^{α−1}a, t^{β−1}b)` of `φ'(t)`.
fn prime_terms(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64) -> [f64; 3] {
    [c.e * pow(t, d.eta - 1.0), lambda * c.a * pow(t, d.alpha - 1.0), c.b * pow(t, d.beta - 1.0)]
}

pub fn phi_prime(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_positive("lambda", lambda)?;
    let [te, ta, tb] = prime_terms(c, d, lambda, t);
    Ok(te - ta - tb)
}

/// Magnitude used to normalize residuals of `φ'(t)`: the largest term.
pub fn prime_scale(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64) -> f64 {
    prime_terms(c, d, lambda, t).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `t² φ''(t)` from the raw second derivative. Used only for cross-checks.
pub fn phi_second_scaled(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64) -> f64 {
    (d.eta - 1.0) * c.e * pow(t, d.eta) - lambda * (d.alpha - 1.0) * c.a * pow(t, d.alpha) - (d.beta - 1.0) * c.b * pow(t, d.beta)
}

/// `t² φ''(t)` at a stationary point, with the λ-term eliminated through
/// `φ'(t) = 0`: `(η−α) e t^η − (β−α) b t^β`. Returns `(value, scale)`.
pub fn reduced_second_order(c: &FiberingCoefficients, d: &HomogeneityDegrees, t: f64) -> (f64, f64) {
    let p = (d.eta - d.alpha) * c.e * pow(t, d.eta);
    let q = (d.beta - d.alpha) * c.b * pow(t, d.beta);
    (p - q, p.abs().max(q.abs()))
}

pub fn lambda_threshold(c: &FiberingCoefficients, d: &HomogeneityDegrees) -> CriticalThreshold {
    let HomogeneityDegrees { alpha, eta, beta } = *d;
    let c_const = d.threshold_constant();
    let t0 = pow((eta - alpha) / (beta - alpha) * c.e / c.b, 1.0 / (beta - eta));
    // Logs keep the exponent bookkeeping stable for coefficients spanning many decades.
    let log_lambda = c_const.ln() + (beta - alpha) / (beta - eta) * c.e.ln() - c.a.ln() - (eta - alpha) / (beta - eta) * c.b.ln();
    CriticalThreshold { lambda_u: log_lambda.exp(), t0, c_const }
}

/// `φ'(t)/t^{α−1}`: same sign as `φ'`, better conditioned for tiny `t`.
fn normalized_prime(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64) -> f64 {
    c.e * pow(t, d.eta - d.alpha) - c.b * pow(t, d.beta - d.alpha) - lambda * c.a
}

fn normalized_prime_derivative(c: &FiberingCoefficients, d: &HomogeneityDegrees, t: f64) -> f64 {
    (d.eta - d.alpha) * c.e * pow(t, d.eta - d.alpha - 1.0) - (d.beta - d.alpha) * c.b * pow(t, d.beta - d.alpha - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOptions {
    /// Relative residual tolerance on `φ'` and relative degeneracy band on λ.
    pub tol: f64,
    pub newton_polish: bool,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_DEGENERACY_BAND, newton_polish: true }
    }
}

pub fn fibering_roots(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, tol: f64) -> Result<FiberingRoots> {
    fibering_roots_with(c, d, lambda, &RootOptions { tol, ..RootOptions::default() })
}

pub fn fibering_roots_with(
    c: &FiberingCoefficients,
    d: &HomogeneityDegrees,
    lambda: f64,
    opts: &RootOptions,
) -> Result<FiberingRoots> {
    check_positive("lambda", lambda)?;
    check_positive("tol", opts.tol)?;
    let thr = lambda_threshold(c, d);
    if (lambda - thr.lambda_u).abs() <= opts.tol * thr.lambda_u {
        return Ok(FiberingRoots::Degenerate { t0: thr.t0 });
    }
    if lambda > thr.lambda_u {
        return Ok(FiberingRoots::NoRoots { threshold: thr.lambda_u });
    }
    let g = |t: f64| normalized_prime(c, d, lambda, t);
    let t0 = thr.t0;

    let mut lo = 0.5 * t0;
    while g(lo) >= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(FiberingError::BracketExpansion { start: t0, doublings: 1074 });
        }
    }
    let mut hi = 2.0 * t0;
    let mut doublings = 1;
    while g(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(FiberingError::BracketExpansion { start: t0, doublings });
        }
    }

    let mut t_plus = bisect(g, lo, t0, MAX_BISECTION_ITERS);
    let mut t_minus = bisect(g, t0, hi, MAX_BISECTION_ITERS);
    if opts.newton_polish {
        t_plus = newton_polish(c, d, lambda, t_plus, lo, t0);
        t_minus = newton_polish(c, d, lambda, t_minus, t0, hi);
    }
    for t in [t_plus, t_minus] {
        let residual = phi_prime(c, d, lambda, t)?.abs();
        let scale = prime_scale(c, d, lambda, t);
        if residual > opts.tol * scale {
            return Err(FiberingError::RootResidual { t, residual, tol: opts.tol, scale });
        }
    }
    Ok(FiberingRoots::TwoRoots { t_plus, t_minus })
}

fn newton_polish(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64, t: f64, lo: f64, hi: f64) -> f64 {
    let mut best = t;
    let mut best_res = normalized_prime(c, d, lambda, t).abs();
    for _ in 0..2 {
        let slope = normalized_prime_derivative(c, d, best);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = best - normalized_prime(c, d, lambda, best) / slope;
        if !(next > lo && next < hi) {
            break;
        }
        let res = normalized_prime(c, d, lambda, next).abs();
        if res < best_res {
            best = next;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

/// Classifies a stationary point `t` by the sign of the reduced second-order
/// form. `tol` bounds the relative stationarity residual and the relative
/// band counted as degenerate.
pub fn classify_stationary(
    c: &FiberingCoefficients,
    d: &HomogeneityDegrees,
    lambda: f64,
    t: f64,
    tol: f64,
) -> Result<Stationarity> {
    let residual = phi_prime(c, d, lambda, t)?.abs();
    let scale = prime_scale(c, d, lambda, t);
    if residual > tol * scale {
        return Err(FiberingError::NotStationary { t, residual: residual / scale, tol });
    }
    let (form, form_scale) = reduced_second_order(c, d, t);
    Ok(if form.abs() <= tol * form_scale {
        Stationarity::Degenerate
    } else if form > 0.0 {
        Stationarity::LocalMin
    } else {
        Stationarity::LocalMax
    })
}

pub fn root_bounds(c: &FiberingCoefficients, d: &HomogeneityDegrees, lambda: f64) -> Result<RootBounds> {
    let (_, t_minus) = match fibering_roots(c, d, lambda, DEFAULT_DEGENERACY_BAND)? {
        FiberingRoots::TwoRoots { t_plus, t_minus } => (t_plus, t_minus),
        _ => {
            return Err(FiberingError::NoRootPair { lambda, threshold: lambda_threshold(c, d).lambda_u });
        }
    };
    let HomogeneityDegrees { alpha, eta, beta } = *d;
    Ok(RootBounds {
        t_plus_upper: pow(lambda * (beta - alpha) / (beta - eta) * c.a / c.e, 1.0 / (eta - alpha)),
        t_minus_lower: pow((eta - alpha) / (beta - alpha) * c.e / c.b, 1.0 / (beta - eta)),
        paper_t_plus_upper: pow(lambda * (eta - alpha) / (eta - beta).abs() * c.a / c.e, 1.0 / (eta - alpha)),
        paper_t_minus_lower: pow((beta - alpha) / (eta - alpha) * c.e / c.b, 1.0 / (beta - eta)),
        minus_energy_ratio: c.e * pow(t_minus, eta) / (c.b * pow(t_minus, beta)),
        energy_ratio_constant: (beta - eta) / (eta - alpha),
    })
}

/// One sample `(t, φ(t), φ'(t))` of a fibering curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
    pub derivative: f64,
}

/// Uniformly spaced samples of the fibering map on `[t_min, t_max]`.
pub fn sample_series(
    c: &FiberingCoefficients,
    d: &HomogeneityDegrees,
    lambda: f64,
    t_min: f64,
    t_max: f64,
    n: usize,
) -> Result<Vec<SeriesPoint>> {
    check_positive("t_min", t_min)?;
    if !(t_max > t_min) || n < 2 {
        return Err(FiberingError::Domain { name: "t_max", value: t_max });
    }
    (0..n)
        .map(|i| {
            let t = t_min + (t_max - t_min) * i as f64 / (n - 1) as f64;
            Ok(SeriesPoint { t, value: phi_value(c, d, lambda, t)?, derivative: phi_prime(c, d, lambda, t)? })
        })
        .collect()
}
