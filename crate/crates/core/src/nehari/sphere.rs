use crate::fields::{
    ops::{dirichlet_energy_p_slice, dot, energy_gradient_p_slice},
    DirichletMetric, Grid,
};

use super::NehariError;

/// Unit sphere of `‖u‖ = (∫|∇u|^p)^{1/p}` with the Dirichlet inner product
/// as Riemannian metric.
#[derive(Clone, Debug)]
pub struct Sphere {
    p: f64,
    metric: DirichletMetric,
}

/// A tangent vector in primal (`direction`) and covector (`K·direction`) form.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub direction: Vec<f64>,
    pub covector: Vec<f64>,
    pub norm: f64,
}

impl Sphere {
    pub fn new(grid: &Grid, p: f64) -> Result<Self, NehariError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(NehariError::InvalidOptions(format!("sphere exponent must exceed 1, got {p}")));
        }
        Ok(Self { p, metric: DirichletMetric::new(grid) })
    }

    pub fn grid(&self) -> &Grid {
        self.metric.grid()
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn metric(&self) -> &DirichletMetric {
        &self.metric
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        dirichlet_energy_p_slice(self.grid(), v, self.p).powf(1.0 / self.p)
    }

    pub fn normalize(&self, v: &[f64]) -> Option<Vec<f64>> {
        let n = self.norm(v);
        (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
    }

    pub fn check_unit(&self, v: &[f64]) -> Result<(), NehariError> {
        let norm = self.norm(v);
        if (norm - 1.0).abs() <= 1e-10 {
            Ok(())
        } else {
            Err(NehariError::NotOnSphere { norm })
        }
    }

    /// Covector normal to the sphere at `v`: the derivative of `∫|∇v|^p`.
    pub fn normal(&self, v: &[f64]) -> Vec<f64> {
        let mut g = energy_gradient_p_slice(self.grid(), v, self.p).expect("p > 1 checked at construction");
        g.iter_mut().for_each(|x| *x *= self.p);
        g
    }

    /// Riemannian gradient of a function whose differential at `v` is `covector`.
    pub fn tangent_gradient(&self, v: &[f64], covector: &[f64]) -> TangentVector {
        let n = self.normal(v);
        let g = self.metric.solve(covector);
        let m = self.metric.solve(&n);
        let nm = dot(&n, &m);
        let coef = if nm > 0.0 { dot(&n, &g) / nm } else { 0.0 };
        let direction: Vec<f64> = g.iter().zip(&m).map(|(a, b)| a - coef * b).collect();
        let covector: Vec<f64> = covector.iter().zip(&n).map(|(a, b)| a - coef * b).collect();
        let norm = dot(&direction, &covector).max(0.0).sqrt();
        TangentVector { direction, covector, norm }
    }

    /// Projects a primal vector onto the tangent space `{w : normal(v)·w = 0}`,
    /// orthogonally in the Dirichlet metric.
    pub fn project_tangent(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.normal(v);
        let m = self.metric.solve(&n);
        let nm = dot(&n, &m);
        let coef = if nm > 0.0 { dot(&n, w) / nm } else { 0.0 };
        w.iter().zip(&m).map(|(a, b)| a - coef * b).collect()
    }

    /// Retraction `(v − step·d)/‖v − step·d‖`.
    pub fn retract(&self, v: &[f64], step: f64, d: &[f64]) -> Option<Vec<f64>> {
        let w: Vec<f64> = v.iter().zip(d).map(|(a, b)| a - step * b).collect();
        self.normalize(&w)
    }
}
