use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, map_slice, Execution};
use crate::fibering::{fibering_roots, phi_value, FiberingRoots};
use crate::nehari::{sample_directions, Branch, MinimizeOptions, Sphere};
use crate::roots::{bisect, log_grid};

use super::problem::{lambda_a_refined, solve_affine, AffineProblem, LambdaEstimate};
use super::AffineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TafOptions {
    /// Explicit sweep; when empty a geometric grid of `points` values on
    /// `[min_fraction·cap, cap]` is used, `cap = safety·estimate`.
    pub lambdas: Vec<f64>,
    pub points: usize,
    pub min_fraction: f64,
    pub safety: f64,
    pub estimate_samples: usize,
    /// Descent runs on `ln λ(v)` started from the best samples.
    pub refine_starts: usize,
    pub refine_iters: usize,
    /// Relative width at which the bisection for `λ̄` stops.
    pub bisect_tol: f64,
    pub max_bisect: usize,
    pub minimize: MinimizeOptions,
}

impl Default for TafOptions {
    fn default() -> Self {
        Self {
            lambdas: Vec::new(),
            points: 7,
            min_fraction: 0.01,
            safety: 0.9,
            estimate_samples: 100,
            refine_starts: 4,
            refine_iters: 500,
            bisect_tol: 1e-3,
            max_bisect: 60,
            minimize: MinimizeOptions { relative_tol: true, ..MinimizeOptions::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub phi_u: Option<f64>,
    pub phi_v: Option<f64>,
    pub norm_u: Option<f64>,
    pub residual_u: Option<f64>,
    pub residual_v: Option<f64>,
    pub positive_u: Option<bool>,
    pub positive_v: Option<bool>,
    pub iterations: [usize; 2],
    pub converged: [bool; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl SweepPoint {
    fn levels(&self) -> Option<(f64, f64)> {
        self.phi_u.zip(self.phi_v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBar {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub relative_width: f64,
    pub bisections: usize,
    pub located: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub expected: f64,
    pub threshold: f64,
    pub lambda_span: f64,
    pub points: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TafReport {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub estimate: LambdaEstimate,
    pub cap: f64,
    pub rows: Vec<SweepPoint>,
    /// `Φ(u) < 0 < Φ(v)` at the smallest swept `λ`.
    pub sign_pattern: bool,
    /// `Φ(u) < Φ(v)` at every solved `λ`.
    pub ordering: bool,
    pub lambda_bar: Option<LambdaBar>,
    /// Present when `q > p/2`.
    pub slope: Option<SlopeFit>,
}

fn sweep_point(base: &AffineProblem, lambda: f64, opts: &MinimizeOptions) -> SweepPoint {
    let mut row = SweepPoint {
        lambda,
        phi_u: None,
        phi_v: None,
        norm_u: None,
        residual_u: None,
        residual_v: None,
        positive_u: None,
        positive_v: None,
        iterations: [0; 2],
        converged: [false; 2],
        error: None,
    };
    let prob = match base.with_lambda(lambda) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let mut errors = Vec::new();
    match solve_affine(&prob, Branch::Plus, opts) {
        Ok(s) => {
            row.phi_u = Some(s.level.level);
            row.norm_u = Some(s.norm);
            row.residual_u = Some(s.level.minimizer.residual);
            row.positive_u = Some(s.positive);
            row.iterations[0] = s.level.iterations;
            row.converged[0] = s.level.converged;
        }
        Err(e) => errors.push(format!("plus: {e}")),
    }
    match solve_affine(&prob, Branch::Minus, opts) {
        Ok(s) => {
            row.phi_v = Some(s.level.level);
            row.residual_v = Some(s.level.minimizer.residual);
            row.positive_v = Some(s.positive);
            row.iterations[1] = s.level.iterations;
            row.converged[1] = s.level.converged;
        }
        Err(e) => errors.push(format!("minus: {e}")),
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn locate_lambda_bar(base: &AffineProblem, mut lo: f64, mut hi: f64, opts: &TafOptions) -> Result<LambdaBar, AffineError> {
    let mut n = 0;
    while (hi - lo) / lo > opts.bisect_tol && n < opts.max_bisect {
        let mid = 0.5 * (lo + hi);
        let level = solve_affine(&base.with_lambda(mid)?, Branch::Minus, &opts.minimize)?.level.level;
        if level > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        n += 1;
    }
    let relative_width = (hi - lo) / lo;
    Ok(LambdaBar { lo, hi, value: 0.5 * (lo + hi), relative_width, bisections: n, located: relative_width <= opts.bisect_tol })
}

/// Sweeps `λ` below the sampled `Λ_A` estimate, solving both branches at
/// each value, and evaluates the energy-sign, `λ̄` and norm-scaling checks.
pub fn theorem_taf_checks(base: &AffineProblem, opts: &TafOptions) -> Result<TafReport, AffineError> {
    let exec = opts.minimize.execution;
    let estimate =
        lambda_a_refined(base, opts.estimate_samples, opts.minimize.seed, exec, opts.refine_starts, opts.refine_iters)?;
    let cap = opts.safety * estimate.best();
    let mut lambdas = if opts.lambdas.is_empty() {
        if opts.points < 2 || !(opts.min_fraction > 0.0 && opts.min_fraction < 1.0) {
            return Err(AffineError::Config("a generated sweep needs points >= 2 and 0 < min_fraction < 1".into()));
        }
        log_grid(opts.min_fraction * cap, cap, opts.points)
    } else {
        opts.lambdas.clone()
    };
    lambdas.sort_by(f64::total_cmp);
    let rows = map_slice(exec, &lambdas, |&l| sweep_point(base, l, &opts.minimize));

    let sign_pattern = rows.first().and_then(SweepPoint::levels).is_some_and(|(u, v)| u < 0.0 && 0.0 < v);
    let solved: Vec<(f64, f64)> = rows.iter().filter_map(SweepPoint::levels).collect();
    let ordering = !solved.is_empty() && solved.iter().all(|(u, v)| u < v);

    let mut lambda_bar = None;
    for w in rows.windows(2) {
        if let (Some(a), Some(b)) = (w[0].phi_v, w[1].phi_v) {
            if a > 0.0 && b < 0.0 {
                lambda_bar = Some(locate_lambda_bar(base, w[0].lambda, w[1].lambda, opts)?);
                break;
            }
        }
    }

    let (p, q) = (base.p(), base.q());
    let slope = (q > 0.5 * p).then(|| {
        let first = rows.iter().find_map(|r| r.norm_u.map(|_| r.lambda));
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| Some((r.lambda, r.norm_u?)))
            .filter(|(l, _)| first.is_some_and(|f| *l <= 10.0 * f * (1.0 + 1e-12)))
            .collect();
        let expected = p / (p - q);
        let threshold = 0.8 * expected;
        if pts.len() < 2 {
            return SlopeFit { slope: f64::NAN, expected, threshold, lambda_span: 1.0, points: pts.len(), passed: false };
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        let slope = log_log_slope(&xs, &ys);
        let lambda_span = xs[xs.len() - 1] / xs[0];
        let passed = slope >= threshold && lambda_span >= 10.0 * (1.0 - 1e-9);
        SlopeFit { slope, expected, threshold, lambda_span, points: pts.len(), passed }
    });

    Ok(TafReport { p, q, r: base.r(), estimate, cap, rows, sign_pattern, ordering, lambda_bar, slope })
}

/// Ray quantities behind the `H_λ` gap: `H_λ(tv) = Φ'(tv)tv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineRayGap {
    pub t_plus: f64,
    pub s: f64,
    pub t_minus: f64,
    /// `H_λ(s(v)v)`.
    pub h_peak: f64,
    /// `Φ(s(v)v) − Φ(t⁺(v)v)`.
    pub delta: f64,
}

pub fn affine_ray_gap(prob: &AffineProblem, v: &[f64]) -> Result<Option<AffineRayGap>, AffineError> {
    let c = prob.coefficients(v)?;
    let d = prob.degrees();
    let lambda = prob.lambda();
    let FiberingRoots::TwoRoots { t_plus, t_minus } = fibering_roots(&c, &d, lambda, 1e-9)? else { return Ok(None) };
    let (p, q, r) = (prob.p(), prob.q(), prob.r());
    let h = |t: f64| c.e * t.powf(p) - lambda * c.a * t.powf(q) - c.b * t.powf(r);
    let dh = |t: f64| p * c.e * t.powf(p - 1.0) - lambda * q * c.a * t.powf(q - 1.0) - r * c.b * t.powf(r - 1.0);
    let s = bisect(dh, t_plus, t_minus, 200);
    let delta = phi_value(&c, &d, lambda, s)? - phi_value(&c, &d, lambda, t_plus)?;
    Ok(Some(AffineRayGap { t_plus, s, t_minus, h_peak: h(s), delta }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineGapReport {
    pub lambda: f64,
    pub samples: usize,
    pub missing_roots: usize,
    /// Sampled `i_λ = min H_λ(s(v)v)`.
    pub i_lambda: f64,
    /// Sampled `δ = min Φ(s(v)v) − Φ(t⁺(v)v)`.
    pub delta: f64,
}

impl AffineGapReport {
    pub fn passed(&self) -> bool {
        self.missing_roots == 0 && self.i_lambda > 0.0 && self.delta > 0.0
    }
}

pub fn affine_gap_checks(
    prob: &AffineProblem,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<AffineGapReport, AffineError> {
    let sphere = Sphere::new(crate::nehari::VariationalProblem::grid(prob), prob.p())?;
    let dirs = sample_directions(&sphere, samples, seed, true, exec);
    let gaps = map_indexed(exec, dirs.len(), |k| affine_ray_gap(prob, &dirs[k]));
    let mut rep =
        AffineGapReport { lambda: prob.lambda(), samples, missing_roots: 0, i_lambda: f64::INFINITY, delta: f64::INFINITY };
    for g in gaps {
        match g? {
            None => rep.missing_roots += 1,
            Some(g) => {
                rep.i_lambda = rep.i_lambda.min(g.h_peak);
                rep.delta = rep.delta.min(g.delta);
            }
        }
    }
    Ok(rep)
}
