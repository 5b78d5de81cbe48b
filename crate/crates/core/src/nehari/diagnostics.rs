use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Execution};
use crate::fibering::pow;
use crate::fields::DiscreteField;

use super::{branch::branch_value, problem::ray_of, Branch, NehariError, Ray, RayScanOptions, Sphere, VariationalProblem};

/// Uniform nodal noise, optionally smoothed by one inverse Dirichlet solve,
/// normalized onto the sphere.
pub(super) fn random_direction(sphere: &Sphere, rng: &mut ChaCha8Rng, smoothing: bool) -> Option<Vec<f64>> {
    let raw: Vec<f64> = (0..sphere.grid().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = if smoothing { sphere.metric().solve(&raw) } else { raw };
    sphere.normalize(&v)
}

/// `count` unit-sphere directions, sample `k` drawn from stream `k` of `seed`.
pub fn sample_directions(sphere: &Sphere, count: usize, seed: u64, smoothing: bool, exec: Execution) -> Vec<Vec<f64>> {
    map_indexed(exec, count, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        loop {
            if let Some(v) = random_direction(sphere, &mut rng, smoothing) {
                return v;
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub branch: Branch,
    pub radius: f64,
    pub samples: usize,
    pub base_t: f64,
    /// `max |t±(v') − t±(v)|` over the perturbed directions.
    pub modulus: f64,
}

/// Perturbs `v` by `radius` along random smooth unit directions, renormalizes,
/// and records how far `t±` moves.
pub fn continuity_probe<P: VariationalProblem + ?Sized>(
    prob: &P,
    v: &DiscreteField,
    branch: Branch,
    radius: f64,
    samples: usize,
    seed: u64,
    scan: &RayScanOptions,
) -> Result<ContinuityReport, NehariError> {
    let sphere = Sphere::new(prob.grid(), prob.sphere_exponent())?;
    sphere.check_unit(v.values())?;
    let (base_t, _, _) = branch_value(prob, v.values(), branch, scan)?;
    let mut modulus: f64 = 0.0;
    if radius > 0.0 {
        for w in sample_directions(&sphere, samples, seed, true, Execution::Sequential) {
            let moved: Vec<f64> = v.values().iter().zip(&w).map(|(a, b)| a + radius * b).collect();
            let moved = sphere.normalize(&moved).ok_or_else(|| NehariError::Evaluation("perturbation hit zero".into()))?;
            let (t, _, _) = branch_value(prob, &moved, branch, scan)?;
            modulus = modulus.max((t - base_t).abs());
        }
    }
    Ok(ContinuityReport { branch, radius, samples, base_t, modulus })
}

/// Minimum ratios over sampled unit directions and their reciprocals, the
/// empirical constants of the growth conditions `B ≤ C E^{β/η}`,
/// `‖u‖^η ≤ C E`, `A ≤ C E^{α/η}`, `A ≤ C B^{α/β}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRatios {
    pub samples: usize,
    pub min_e_to_b: f64,
    pub min_norm_to_e: f64,
    pub min_e_to_a: f64,
    pub min_b_to_a: f64,
    pub c_e_to_b: f64,
    pub c_norm_to_e: f64,
    pub c_e_to_a: f64,
    pub c_b_to_a: f64,
}

pub fn condition_ratios<P: VariationalProblem + ?Sized>(
    prob: &P,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<ConditionRatios, NehariError> {
    if samples == 0 {
        return Err(NehariError::InvalidOptions("need at least one sample".into()));
    }
    let sphere = Sphere::new(prob.grid(), prob.sphere_exponent())?;
    let dirs = sample_directions(&sphere, samples, seed, true, exec);
    ratios_over(prob, &sphere, &dirs, exec)
}

pub(crate) fn ratios_over<P: VariationalProblem + ?Sized>(
    prob: &P,
    sphere: &Sphere,
    dirs: &[Vec<f64>],
    exec: Execution,
) -> Result<ConditionRatios, NehariError> {
    let rows = map_indexed(exec, dirs.len(), |k| -> Result<[f64; 4], NehariError> {
        let v = &dirs[k];
        let Ray::Fibering { degrees: d, coeffs: c, .. } = ray_of(prob, v)? else {
            return Err(NehariError::NoHomogeneousHint);
        };
        let norm = sphere.norm(v);
        Ok([
            pow(c.e, d.beta / d.eta) / c.b,
            pow(norm, d.eta) / c.e,
            pow(c.e, d.alpha / d.eta) / c.a,
            pow(c.b, d.alpha / d.beta) / c.a,
        ])
    });
    let mut m = [f64::INFINITY; 4];
    for r in rows {
        let r = r?;
        for i in 0..4 {
            m[i] = m[i].min(r[i]);
        }
    }
    Ok(ConditionRatios {
        samples: dirs.len(),
        min_e_to_b: m[0],
        min_norm_to_e: m[1],
        min_e_to_a: m[2],
        min_b_to_a: m[3],
        c_e_to_b: 1.0 / m[0],
        c_norm_to_e: 1.0 / m[1],
        c_e_to_a: 1.0 / m[2],
        c_b_to_a: 1.0 / m[3],
    })
}
