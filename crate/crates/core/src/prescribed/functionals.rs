use crate::fibering::{FiberingCoefficients, HomogeneityDegrees};
use crate::fields::{ops::lp_norm_pow_slice, Grid};
use crate::nehari::{NehariError, PowerSum, Ray, VariationalProblem};

use super::model::{h_terms, Model, Nonlinearity, PrescribedProblem};
use super::PrescribedError;

impl From<PrescribedError> for NehariError {
    fn from(e: PrescribedError) -> Self {
        match e {
            PrescribedError::Nehari(n) => n,
            other => NehariError::Evaluation(other.to_string()),
        }
    }
}

fn positive_i2(prob: &PrescribedProblem, u: &[f64]) -> Result<f64, PrescribedError> {
    let value = prob.i2(u);
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PrescribedError::NonPositiveI2 { value })
    }
}

/// `Φ_λ = I₁ − λI₂` at fixed `λ`.
pub struct PhiLambda<'a> {
    pub problem: &'a PrescribedProblem,
    pub lambda: f64,
}

impl VariationalProblem for PhiLambda<'_> {
    fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    fn sphere_exponent(&self) -> f64 {
        self.problem.leading_exponent()
    }

    fn value(&self, u: &[f64]) -> Result<f64, NehariError> {
        Ok(self.problem.i1(u)? - self.lambda * self.problem.i2(u))
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError> {
        let a = self.problem.i1_gradient(u)?;
        let b = self.problem.i2_gradient(u);
        Ok(a.iter().zip(&b).map(|(x, y)| x - self.lambda * y).collect())
    }

    fn ray<'b>(&'b self, v: &'b [f64]) -> Result<Option<Ray<'b>>, NehariError> {
        let p = self.problem;
        if let Model::SemilinearCc { q, f: Nonlinearity::PowerSum(terms) } = p.model() {
            if let [(c, r)] = terms[..] {
                if c > 0.0 {
                    let g = p.grid();
                    let coeffs = FiberingCoefficients::new(
                        crate::fields::ops::dirichlet_energy_p_slice(g, v, 2.0),
                        lp_norm_pow_slice(g, v, *q),
                        c * lp_norm_pow_slice(g, v, r),
                    )?;
                    let degrees = HomogeneityDegrees::new(*q, 2.0, r)?;
                    return Ok(Some(Ray::Fibering { degrees, coeffs, lambda: self.lambda }));
                }
            }
        }
        Ok(p.i1_ray_terms(v).map(|mut t| {
            t.push((-self.lambda * p.i2(v), p.alpha()));
            Ray::Profile(Box::new(PowerSum::new(t)))
        }))
    }
}

/// `λ_c(u) = (I₁(u) − c)/I₂(u)`.
pub struct LambdaC<'a> {
    pub problem: &'a PrescribedProblem,
    pub c: f64,
}

impl LambdaC<'_> {
    pub fn eval(&self, u: &[f64]) -> Result<f64, PrescribedError> {
        let i2 = positive_i2(self.problem, u)?;
        Ok((self.problem.i1(u)? - self.c) / i2)
    }
}

impl VariationalProblem for LambdaC<'_> {
    fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    fn sphere_exponent(&self) -> f64 {
        self.problem.leading_exponent()
    }

    fn value(&self, u: &[f64]) -> Result<f64, NehariError> {
        Ok(self.eval(u)?)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError> {
        let i2 = positive_i2(self.problem, u)?;
        let lc = (self.problem.i1(u)? - self.c) / i2;
        let a = self.problem.i1_gradient(u)?;
        let b = self.problem.i2_gradient(u);
        Ok(a.iter().zip(&b).map(|(x, y)| (x - lc * y) / i2).collect())
    }

    fn ray<'b>(&'b self, v: &'b [f64]) -> Result<Option<Ray<'b>>, NehariError> {
        let p = self.problem;
        let Some(terms) = p.i1_ray_terms(v) else { return Ok(None) };
        let i2 = positive_i2(p, v)?;
        let alpha = p.alpha();
        let mut t: Vec<(f64, f64)> = terms.into_iter().map(|(k, d)| (k / i2, d - alpha)).collect();
        t.push((-self.c / i2, -alpha));
        Ok(Some(Ray::Profile(Box::new(PowerSum::new(t)))))
    }
}

/// `H(u) = I₁'(u)u − αI₁(u)`. Along each ray it increases then decreases,
/// so its ray maximum is the `minus` branch.
pub struct HFunctional<'a> {
    pub problem: &'a PrescribedProblem,
}

impl VariationalProblem for HFunctional<'_> {
    fn grid(&self) -> &Grid {
        self.problem.grid()
    }

    fn sphere_exponent(&self) -> f64 {
        self.problem.leading_exponent()
    }

    fn value(&self, u: &[f64]) -> Result<f64, NehariError> {
        Ok(self.problem.h_value(u)?)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError> {
        Ok(self.problem.h_gradient(u)?)
    }

    fn ray<'b>(&'b self, v: &'b [f64]) -> Result<Option<Ray<'b>>, NehariError> {
        Ok(self.problem.i1_ray_terms(v).map(|t| Ray::Profile(Box::new(PowerSum::new(h_terms(&t, self.problem.alpha()))))))
    }
}
