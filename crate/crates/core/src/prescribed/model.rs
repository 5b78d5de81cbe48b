use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::{
    ops::{
        composite_gradient_slice, composite_integral_slice, dirichlet_energy_p_slice, energy_gradient_p_slice,
        lp_norm_pow_gradient_slice, lp_norm_pow_slice,
    },
    Grid,
};

use super::PrescribedError;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A nonlinearity with its derivative and primitive `F(s) = ∫₀ˢ f`.
#[derive(Clone)]
pub struct CustomNonlinearity {
    pub name: String,
    pub f: ScalarFn,
    pub f_prime: ScalarFn,
    pub primitive: ScalarFn,
}

impl fmt::Debug for CustomNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNonlinearity").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum Nonlinearity {
    /// `f(s) = Σ c_k |s|^{r_k−2} s`, stored as `(c_k, r_k)`.
    PowerSum(Vec<(f64, f64)>),
    Custom(CustomNonlinearity),
}

impl Nonlinearity {
    pub fn power(r: f64) -> Self {
        Nonlinearity::PowerSum(vec![(1.0, r)])
    }

    pub fn f(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::PowerSum(t) => t.iter().map(|&(c, r)| c * s.abs().powf(r - 2.0) * s).sum(),
            Nonlinearity::Custom(c) => (c.f)(s),
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::PowerSum(t) => t.iter().map(|&(c, r)| c * (r - 1.0) * s.abs().powf(r - 2.0)).sum(),
            Nonlinearity::Custom(c) => (c.f_prime)(s),
        }
    }

    pub fn primitive(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::PowerSum(t) => t.iter().map(|&(c, r)| c * s.abs().powf(r) / r).sum(),
            Nonlinearity::Custom(c) => (c.primitive)(s),
        }
    }
}

/// Spot check of `s ↦ (q−1)f(s)/s − f'(s)`: decreasing for `s > 0`,
/// increasing for `s < 0`, and very negative at the ends of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub grid_points: usize,
    pub max_abs_s: f64,
    pub decreasing_on_positive: bool,
    pub increasing_on_negative: bool,
    pub value_at_max: f64,
    pub value_at_min: f64,
    /// Grid points where monotonicity failed.
    pub violations: Vec<f64>,
}

impl MonotonicityCheck {
    pub fn passed(&self) -> bool {
        self.decreasing_on_positive && self.increasing_on_negative && self.value_at_max < 0.0 && self.value_at_min < 0.0
    }
}

pub fn check_f2(q: f64, f: &Nonlinearity) -> MonotonicityCheck {
    const N: usize = 400;
    const MAX_S: f64 = 1e3;
    let g = |s: f64| (q - 1.0) * f.f(s) / s - f.f_prime(s);
    let pos: Vec<f64> = crate::roots::log_grid(1e-3, MAX_S, N);
    let mut violations: Vec<f64> = pos.windows(2).filter(|w| g(w[1]) > g(w[0])).map(|w| w[1]).collect();
    let decreasing_on_positive = violations.is_empty();
    let negative: Vec<f64> = pos.windows(2).filter(|w| g(-w[1]) > g(-w[0])).map(|w| -w[1]).collect();
    let increasing_on_negative = negative.is_empty();
    violations.extend(negative);
    MonotonicityCheck {
        grid_points: 2 * N,
        max_abs_s: MAX_S,
        decreasing_on_positive,
        increasing_on_negative,
        value_at_max: g(MAX_S),
        value_at_min: g(-MAX_S),
        violations,
    }
}

#[derive(Clone, Debug)]
pub enum Model {
    /// `I₁ = ½∫|∇u|² − ∫F(u)`, `I₂ = (1/q)∫|u|^q`.
    SemilinearCc { q: f64, f: Nonlinearity },
    /// `I₁ = (1/p)∫|∇u|^p + (1/q)∫|∇u|^q − (1/r₂)∫|u|^{r₂}`, `I₂ = (1/r₁)∫|u|^{r₁}`.
    PqLaplacian { p: f64, q: f64, r1: f64, r2: f64 },
}

/// `Φ_λ = I₁ − λI₂` on a Dirichlet grid.
#[derive(Clone, Debug)]
pub struct PrescribedProblem {
    grid: Grid,
    model: Model,
}

/// Critical Sobolev exponent `Np/(N−p)`, infinite when `p ≥ N`.
pub fn sobolev_exponent(dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    if p >= n {
        f64::INFINITY
    } else {
        n * p / (n - p)
    }
}

pub fn build_semilinear_cc(grid: Grid, q: f64, f: Nonlinearity) -> Result<PrescribedProblem, PrescribedError> {
    if !(q > 1.0 && q < 2.0) {
        return Err(PrescribedError::Config(format!("semilinear model needs 1 < q < 2, got q = {q}")));
    }
    if let Nonlinearity::PowerSum(terms) = &f {
        if terms.is_empty() {
            return Err(PrescribedError::Config("power-sum nonlinearity needs at least one term".into()));
        }
        let crit = sobolev_exponent(grid.dim(), 2.0);
        for &(c, r) in terms {
            if !(c.is_finite() && c != 0.0) {
                return Err(PrescribedError::Config(format!("nonlinearity coefficient must be finite and nonzero, got {c}")));
            }
            if !(r > 2.0 && r < crit) {
                return Err(PrescribedError::Config(format!("nonlinearity exponent must satisfy 2 < r < {crit}, got r = {r}")));
            }
        }
    }
    Ok(PrescribedProblem { grid, model: Model::SemilinearCc { q, f } })
}

pub fn build_pq_laplacian(grid: Grid, p: f64, q: f64, r1: f64, r2: f64) -> Result<PrescribedProblem, PrescribedError> {
    let crit = sobolev_exponent(grid.dim(), p);
    if !(1.0 < r1 && r1 < q && q < p && p < r2 && r2 < crit) {
        return Err(PrescribedError::Config(format!(
            "(p,q)-Laplacian needs 1 < r1 < q < p < r2 < {crit}, got r1 = {r1}, q = {q}, p = {p}, r2 = {r2}"
        )));
    }
    Ok(PrescribedProblem { grid, model: Model::PqLaplacian { p, q, r1, r2 } })
}

impl PrescribedProblem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Homogeneity of `I₂`.
    pub fn alpha(&self) -> f64 {
        match self.model {
            Model::SemilinearCc { q, .. } => q,
            Model::PqLaplacian { r1, .. } => r1,
        }
    }

    /// Leading gradient exponent, used for the sphere norm.
    pub fn leading_exponent(&self) -> f64 {
        match self.model {
            Model::SemilinearCc { .. } => 2.0,
            Model::PqLaplacian { p, .. } => p,
        }
    }

    fn nodal_f(&self, u: &[f64]) -> Result<Vec<f64>, PrescribedError> {
        let Model::SemilinearCc { f, .. } = &self.model else { unreachable!() };
        let g = composite_gradient_slice(&self.grid, u, |s| f.f(s));
        finite(g)
    }

    pub fn i1(&self, u: &[f64]) -> Result<f64, PrescribedError> {
        let g = &self.grid;
        Ok(match &self.model {
            Model::SemilinearCc { f, .. } => {
                0.5 * dirichlet_energy_p_slice(g, u, 2.0) - composite_integral_slice(g, u, |s| f.primitive(s))?
            }
            Model::PqLaplacian { p, q, r2, .. } => {
                dirichlet_energy_p_slice(g, u, *p) / p + dirichlet_energy_p_slice(g, u, *q) / q
                    - lp_norm_pow_slice(g, u, *r2) / r2
            }
        })
    }

    pub fn i1_gradient(&self, u: &[f64]) -> Result<Vec<f64>, PrescribedError> {
        let g = &self.grid;
        match &self.model {
            Model::SemilinearCc { .. } => {
                let k = energy_gradient_p_slice(g, u, 2.0)?;
                let f = self.nodal_f(u)?;
                Ok(k.iter().zip(&f).map(|(a, b)| a - b).collect())
            }
            Model::PqLaplacian { p, q, r2, .. } => {
                let a = energy_gradient_p_slice(g, u, *p)?;
                let b = energy_gradient_p_slice(g, u, *q)?;
                let c = lp_norm_pow_gradient_slice(g, u, *r2);
                Ok((0..u.len()).map(|i| a[i] + b[i] - c[i] / r2).collect())
            }
        }
    }

    pub fn i2(&self, u: &[f64]) -> f64 {
        let a = self.alpha();
        lp_norm_pow_slice(&self.grid, u, a) / a
    }

    pub fn i2_gradient(&self, u: &[f64]) -> Vec<f64> {
        let a = self.alpha();
        let mut g = lp_norm_pow_gradient_slice(&self.grid, u, a);
        g.iter_mut().for_each(|x| *x /= a);
        g
    }

    /// `H(u) = I₁'(u)u − αI₁(u)` in its expanded model form.
    pub fn h_value(&self, u: &[f64]) -> Result<f64, PrescribedError> {
        let g = &self.grid;
        Ok(match &self.model {
            Model::SemilinearCc { q, f } => {
                (2.0 - q) / 2.0 * dirichlet_energy_p_slice(g, u, 2.0)
                    + composite_integral_slice(g, u, |s| q * f.primitive(s) - f.f(s) * s)?
            }
            Model::PqLaplacian { p, q, r1, r2 } => {
                (p - r1) / p * dirichlet_energy_p_slice(g, u, *p) + (q - r1) / q * dirichlet_energy_p_slice(g, u, *q)
                    - (r2 - r1) / r2 * lp_norm_pow_slice(g, u, *r2)
            }
        })
    }

    pub fn h_gradient(&self, u: &[f64]) -> Result<Vec<f64>, PrescribedError> {
        let g = &self.grid;
        match &self.model {
            Model::SemilinearCc { q, f } => {
                let k = energy_gradient_p_slice(g, u, 2.0)?;
                let n = finite(composite_gradient_slice(g, u, |s| (q - 1.0) * f.f(s) - f.f_prime(s) * s))?;
                Ok(k.iter().zip(&n).map(|(a, b)| (2.0 - q) * a + b).collect())
            }
            Model::PqLaplacian { p, q, r1, r2 } => {
                let a = energy_gradient_p_slice(g, u, *p)?;
                let b = energy_gradient_p_slice(g, u, *q)?;
                let c = lp_norm_pow_gradient_slice(g, u, *r2);
                Ok((0..u.len()).map(|i| (p - r1) * a[i] + (q - r1) * b[i] - (r2 - r1) / r2 * c[i]).collect())
            }
        }
    }

    /// `I₁(tv) = Σ κ_j t^{d_j}` as `(κ_j, d_j)` when every term is homogeneous.
    pub fn i1_ray_terms(&self, v: &[f64]) -> Option<Vec<(f64, f64)>> {
        let g = &self.grid;
        match &self.model {
            Model::SemilinearCc { f: Nonlinearity::PowerSum(terms), .. } => {
                let mut out = vec![(0.5 * dirichlet_energy_p_slice(g, v, 2.0), 2.0)];
                out.extend(terms.iter().map(|&(c, r)| (-c * lp_norm_pow_slice(g, v, r) / r, r)));
                Some(out)
            }
            Model::SemilinearCc { .. } => None,
            Model::PqLaplacian { p, q, r2, .. } => Some(vec![
                (dirichlet_energy_p_slice(g, v, *p) / p, *p),
                (dirichlet_energy_p_slice(g, v, *q) / q, *q),
                (-lp_norm_pow_slice(g, v, *r2) / r2, *r2),
            ]),
        }
    }
}

fn finite(v: Vec<f64>) -> Result<Vec<f64>, PrescribedError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(PrescribedError::NonFinite { index }),
        None => Ok(v),
    }
}

/// `H(tv) = Σ κ_j (d_j − α) t^{d_j}` from the ray terms of `I₁`.
pub fn h_terms(i1_terms: &[(f64, f64)], alpha: f64) -> Vec<(f64, f64)> {
    i1_terms.iter().map(|&(k, d)| (k * (d - alpha), d)).collect()
}
