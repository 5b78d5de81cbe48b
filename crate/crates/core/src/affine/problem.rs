use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Execution};
use crate::fibering::{lambda_threshold, FiberingCoefficients, HomogeneityDegrees};
use crate::fields::{
    ops::{lp_norm_pow_gradient_slice, lp_norm_pow_slice},
    Grid,
};
use crate::nehari::{
    minimize_branch, sample_directions, Branch, BranchLevel, MinimizeOptions, NehariError, Ray, Sphere, VariationalProblem,
};

use super::energy::{affine_energy, energy_and_gradient, AffineEnergyConfig};
use super::AffineError;

/// `Φ(u) = (1/p)E^p(u) − (λ/q)‖u‖_q^q − (1/r)‖u‖_r^r` with the affine energy `E`.
#[derive(Clone, Debug)]
pub struct AffineProblem {
    config: AffineEnergyConfig,
    grid: Grid,
    q: f64,
    r: f64,
    lambda: f64,
}

/// Critical exponent `2p/(2−p)` in two dimensions.
fn critical_2d(p: f64) -> f64 {
    if p >= 2.0 {
        f64::INFINITY
    } else {
        2.0 * p / (2.0 - p)
    }
}

impl AffineProblem {
    pub fn new(config: AffineEnergyConfig, grid: Grid, q: f64, r: f64, lambda: f64) -> Result<Self, AffineError> {
        if grid.dim() != 2 {
            return Err(AffineError::Config("the affine problem needs a 2-D grid".into()));
        }
        let p = config.p();
        let crit = critical_2d(p);
        if !(1.0 < q && q < p && p < r && r < crit) {
            return Err(AffineError::Config(format!(
                "affine problem needs 1 < q < p < r < {crit}, got q = {q}, p = {p}, r = {r}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(AffineError::Config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { config, grid, q, r, lambda })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, AffineError> {
        Self::new(self.config.clone(), self.grid, self.q, self.r, lambda)
    }

    pub fn config(&self) -> &AffineEnergyConfig {
        &self.config
    }

    pub fn p(&self) -> f64 {
        self.config.p()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn degrees(&self) -> HomogeneityDegrees {
        HomogeneityDegrees::new(self.q, self.p(), self.r).expect("ordering checked at construction")
    }

    /// `(E^p(v), ‖v‖_q^q, ‖v‖_r^r)`.
    pub fn coefficients(&self, v: &[f64]) -> Result<FiberingCoefficients, AffineError> {
        let e = affine_energy(&self.config, &self.grid, v)?.powf(self.p());
        let g = &self.grid;
        Ok(FiberingCoefficients::new(e, lp_norm_pow_slice(g, v, self.q), lp_norm_pow_slice(g, v, self.r))?)
    }

    pub fn phi(&self, u: &[f64]) -> Result<f64, AffineError> {
        let e = affine_energy(&self.config, &self.grid, u)?.powf(self.p());
        let g = &self.grid;
        Ok(e / self.p() - self.lambda / self.q * lp_norm_pow_slice(g, u, self.q) - lp_norm_pow_slice(g, u, self.r) / self.r)
    }

    pub fn phi_gradient(&self, u: &[f64]) -> Result<Vec<f64>, AffineError> {
        let (_, mut grad) = energy_and_gradient(&self.config, &self.grid, u)?;
        let gq = lp_norm_pow_gradient_slice(&self.grid, u, self.q);
        let gr = lp_norm_pow_gradient_slice(&self.grid, u, self.r);
        for ((x, a), b) in grad.iter_mut().zip(&gq).zip(&gr) {
            *x -= self.lambda / self.q * a + b / self.r;
        }
        Ok(grad)
    }
}

impl From<AffineError> for NehariError {
    fn from(e: AffineError) -> Self {
        match e {
            AffineError::Nehari(n) => n,
            other => NehariError::Evaluation(other.to_string()),
        }
    }
}

impl VariationalProblem for AffineProblem {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn sphere_exponent(&self) -> f64 {
        self.p()
    }

    fn value(&self, u: &[f64]) -> Result<f64, NehariError> {
        Ok(self.phi(u)?)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError> {
        Ok(self.phi_gradient(u)?)
    }

    fn ray<'a>(&'a self, v: &'a [f64]) -> Result<Option<Ray<'a>>, NehariError> {
        Ok(Some(Ray::Fibering { degrees: self.degrees(), coeffs: self.coefficients(v)?, lambda: self.lambda }))
    }
}

/// Smallest fibering threshold `λ(v)` over sampled sphere directions: an
/// upper estimate of `Λ_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
    pub argmin: usize,
    /// Smallest `λ(v)` after descending `ln λ` on the sphere from the best
    /// samples. Still an upper estimate, usually a much tighter one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub refined: Option<f64>,
}

impl LambdaEstimate {
    pub fn best(&self) -> f64 {
        self.refined.map_or(self.value, |r| r.min(self.value))
    }
}

pub fn lambda_a_estimate(
    prob: &AffineProblem,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<LambdaEstimate, AffineError> {
    if samples == 0 {
        return Err(AffineError::Config("the estimate needs at least one sample".into()));
    }
    let sphere = Sphere::new(&prob.grid, prob.p())?;
    let dirs = sample_directions(&sphere, samples, seed, true, exec);
    let deg = prob.degrees();
    let values = map_indexed(exec, dirs.len(), |k| prob.coefficients(&dirs[k]).map(|c| lambda_threshold(&c, &deg).lambda_u));
    let mut best = (f64::INFINITY, 0);
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        if v < best.0 {
            best = (v, k);
        }
    }
    Ok(LambdaEstimate { value: best.0, samples, seed, argmin: best.1, refined: None })
}

const REFINE_ARMIJO: f64 = 1e-4;

/// Descends `ln λ(v)` over the sphere from `v` and returns the final
/// threshold and direction.
pub fn refine_threshold(prob: &AffineProblem, v: &[f64], iters: usize) -> Result<(f64, Vec<f64>), AffineError> {
    let sphere = Sphere::new(&prob.grid, prob.p())?;
    let deg = prob.degrees();
    let (p, q, r) = (prob.p(), prob.q, prob.r);
    let (k1, k2) = ((r - q) / (r - p), (p - q) / (r - p));
    let log_threshold =
        |w: &[f64]| -> Result<f64, AffineError> { Ok(lambda_threshold(&prob.coefficients(w)?, &deg).lambda_u.ln()) };
    let covector = |w: &[f64]| -> Result<Vec<f64>, AffineError> {
        let (e, ge) = energy_and_gradient(&prob.config, &prob.grid, w)?;
        let a = lp_norm_pow_slice(&prob.grid, w, q);
        let b = lp_norm_pow_slice(&prob.grid, w, r);
        let ga = lp_norm_pow_gradient_slice(&prob.grid, w, q);
        let gb = lp_norm_pow_gradient_slice(&prob.grid, w, r);
        Ok(ge.iter().zip(&ga).zip(&gb).map(|((x, y), z)| k1 * p * x / e - y / a - k2 * z / b).collect())
    };
    let mut v = sphere.normalize(v).ok_or(AffineError::ZeroField)?;
    let mut f = log_threshold(&v)?;
    let mut tangent = sphere.tangent_gradient(&v, &covector(&v)?);
    let mut step = 1.0;
    for _ in 0..iters {
        if tangent.norm <= 1e-10 {
            break;
        }
        let slope = tangent.norm * tangent.norm;
        let mut s = step;
        let mut accepted = None;
        for _ in 0..60 {
            if let Some(w) = sphere.retract(&v, s, &tangent.direction) {
                if let Ok(fw) = log_threshold(&w) {
                    if fw <= f - REFINE_ARMIJO * s * slope {
                        accepted = Some((w, fw));
                        break;
                    }
                }
            }
            s *= 0.5;
        }
        let Some((w, fw)) = accepted else { break };
        v = w;
        f = fw;
        tangent = sphere.tangent_gradient(&v, &covector(&v)?);
        step = (2.0 * s).min(1e12);
    }
    Ok((f.exp(), v))
}

/// [`lambda_a_estimate`] followed by [`refine_threshold`] from the `starts`
/// best samples.
pub fn lambda_a_refined(
    prob: &AffineProblem,
    samples: usize,
    seed: u64,
    exec: Execution,
    starts: usize,
    iters: usize,
) -> Result<LambdaEstimate, AffineError> {
    let mut est = lambda_a_estimate(prob, samples, seed, exec)?;
    if starts == 0 || iters == 0 {
        return Ok(est);
    }
    let sphere = Sphere::new(&prob.grid, prob.p())?;
    let dirs = sample_directions(&sphere, samples, seed, true, exec);
    let deg = prob.degrees();
    let mut ranked: Vec<(f64, usize)> = dirs
        .iter()
        .enumerate()
        .map(|(k, d)| Ok((lambda_threshold(&prob.coefficients(d)?, &deg).lambda_u, k)))
        .collect::<Result<_, AffineError>>()?;
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let picks: Vec<usize> = ranked.iter().take(starts).map(|x| x.1).collect();
    let refined = map_indexed(exec, picks.len(), |k| refine_threshold(prob, &dirs[picks[k]], iters).map(|x| x.0));
    let mut best = f64::INFINITY;
    for r in refined {
        best = best.min(r?);
    }
    est.refined = Some(best);
    Ok(est)
}

/// A branch minimizer, flipped to be nonnegative when it is sign-definite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSolution {
    pub lambda: f64,
    pub branch: Branch,
    pub level: BranchLevel,
    /// `‖u‖ = (∫|∇u|^p)^{1/p}`, which equals the ray parameter.
    pub norm: f64,
    pub positive: bool,
}

pub fn solve_affine(prob: &AffineProblem, branch: Branch, opts: &MinimizeOptions) -> Result<AffineSolution, AffineError> {
    let mut level = minimize_branch(prob, branch, opts)?;
    let v = level.minimizer.direction.values();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tiny = 1e-8 * scale;
    let nonpositive = v.iter().all(|&x| x <= tiny);
    let nonnegative = v.iter().all(|&x| x >= -tiny);
    if nonpositive && !nonnegative {
        level.minimizer.direction = level.minimizer.direction.scaled(-1.0);
    }
    Ok(AffineSolution { lambda: prob.lambda, branch, norm: level.minimizer.t, positive: nonpositive || nonnegative, level })
}
