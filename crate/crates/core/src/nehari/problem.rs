use crate::fields::{ops::dot, Grid};

use super::{NehariError, Ray, RayProfile, RaySample};

/// A `C¹` functional on nodal fields whose rays have the min-then-max shape.
///
/// Evaluators must be pure: the minimizer calls them from several threads.
pub trait VariationalProblem: Sync {
    fn grid(&self) -> &Grid;

    /// Exponent `p` of the sphere norm `(∫|∇u|^p)^{1/p}`.
    fn sphere_exponent(&self) -> f64;

    fn value(&self, u: &[f64]) -> Result<f64, NehariError>;

    /// Nodal gradient (covector): `gradient(u)·w` is the directional derivative.
    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError>;

    /// Closed-form or cheap ray structure through `v`. `None` falls back to
    /// evaluating `value` and `gradient` along the ray.
    fn ray<'a>(&'a self, _v: &'a [f64]) -> Result<Option<Ray<'a>>, NehariError> {
        Ok(None)
    }

    fn is_even(&self) -> bool {
        true
    }
}

/// Ray profile built from the full evaluators.
pub struct SampledRay<'a, P: ?Sized> {
    pub problem: &'a P,
    pub direction: &'a [f64],
}

impl<P: VariationalProblem + ?Sized> RayProfile for SampledRay<'_, P> {
    fn eval(&self, t: f64) -> RaySample {
        let u: Vec<f64> = self.direction.iter().map(|x| t * x).collect();
        let (Ok(value), Ok(g)) = (self.problem.value(&u), self.problem.gradient(&u)) else {
            return RaySample { value: f64::NAN, derivative: f64::NAN, scale: f64::NAN };
        };
        let nodal: f64 = g.iter().zip(self.direction).map(|(a, b)| (a * b).abs()).sum();
        let scale = nodal.max(value.abs() / t);
        RaySample { value, derivative: dot(&g, self.direction), scale }
    }
}

pub fn ray_of<'a, P: VariationalProblem + ?Sized>(prob: &'a P, v: &'a [f64]) -> Result<Ray<'a>, NehariError> {
    Ok(match prob.ray(v)? {
        Some(r) => r,
        None => Ray::Profile(Box::new(SampledRay { problem: prob, direction: v })),
    })
}
