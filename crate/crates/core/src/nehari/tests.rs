use super::*;
use crate::fibering::{FiberingCoefficients, HomogeneityDegrees};
use crate::fields::{ops::*, Grid};
use crate::Execution;

/// `Φ(u) = ½N² − λN − ⅓N³` with `N` the Dirichlet norm: every unit ray has
/// coefficients `e = a = b = 1` for degrees `(1, 2, 3)`.
struct Radial {
    grid: Grid,
    lambda: f64,
    hint: bool,
}

impl VariationalProblem for Radial {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn sphere_exponent(&self) -> f64 {
        2.0
    }
    fn value(&self, u: &[f64]) -> Result<f64, NehariError> {
        let n = dirichlet_energy_p_slice(&self.grid, u, 2.0).sqrt();
        Ok(0.5 * n * n - self.lambda * n - n * n * n / 3.0)
    }
    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError> {
        let n = dirichlet_energy_p_slice(&self.grid, u, 2.0).sqrt();
        let k = energy_gradient_p_slice(&self.grid, u, 2.0)?;
        Ok(k.iter().map(|x| (1.0 - self.lambda / n - n) * x).collect())
    }
    fn ray<'a>(&'a self, v: &'a [f64]) -> Result<Option<Ray<'a>>, NehariError> {
        if !self.hint {
            return Ok(None);
        }
        let n = dirichlet_energy_p_slice(&self.grid, v, 2.0).sqrt();
        Ok(Some(Ray::Fibering {
            degrees: HomogeneityDegrees::new(1.0, 2.0, 3.0)?,
            coeffs: FiberingCoefficients::new(n * n, n, n * n * n)?,
            lambda: self.lambda,
        }))
    }
}

/// `½∫|∇u|² − (λ/q)∫|u|^q − (1/r)∫|u|^r`.
pub(crate) struct Cc {
    pub grid: Grid,
    pub lambda: f64,
    pub q: f64,
    pub r: f64,
    pub hint: bool,
}

impl VariationalProblem for Cc {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn sphere_exponent(&self) -> f64 {
        2.0
    }
    fn value(&self, u: &[f64]) -> Result<f64, NehariError> {
        let g = &self.grid;
        Ok(0.5 * dirichlet_energy_p_slice(g, u, 2.0)
            - self.lambda / self.q * lp_norm_pow_slice(g, u, self.q)
            - lp_norm_pow_slice(g, u, self.r) / self.r)
    }
    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>, NehariError> {
        let g = &self.grid;
        let e = energy_gradient_p_slice(g, u, 2.0)?;
        let a = lp_norm_pow_gradient_slice(g, u, self.q);
        let b = lp_norm_pow_gradient_slice(g, u, self.r);
        Ok((0..u.len()).map(|i| e[i] - self.lambda / self.q * a[i] - b[i] / self.r).collect())
    }
    fn ray<'a>(&'a self, v: &'a [f64]) -> Result<Option<Ray<'a>>, NehariError> {
        if !self.hint {
            return Ok(None);
        }
        let g = &self.grid;
        Ok(Some(Ray::Fibering {
            degrees: HomogeneityDegrees::new(self.q, 2.0, self.r)?,
            coeffs: FiberingCoefficients::new(
                dirichlet_energy_p_slice(g, v, 2.0),
                lp_norm_pow_slice(g, v, self.q),
                lp_norm_pow_slice(g, v, self.r),
            )?,
            lambda: self.lambda,
        }))
    }
}

fn cc(hint: bool) -> Cc {
    Cc { grid: Grid::unit_1d(63).unwrap(), lambda: 0.1, q: 1.5, r: 4.0, hint }
}

fn unit(prob: &dyn VariationalProblem, f: impl Fn([f64; 2]) -> f64) -> DiscreteField {
    let s = Sphere::new(prob.grid(), prob.sphere_exponent()).unwrap();
    DiscreteField::new(*prob.grid(), s.normalize(&prob.grid().sample(f)).unwrap()).unwrap()
}

fn directions(prob: &dyn VariationalProblem, count: usize, seed: u64) -> Vec<DiscreteField> {
    let s = Sphere::new(prob.grid(), prob.sphere_exponent()).unwrap();
    sample_directions(&s, count, seed, true, Execution::Sequential)
        .into_iter()
        .map(|v| DiscreteField::new(*prob.grid(), v).unwrap())
        .collect()
}

#[test]
fn quadratic_projection_with_and_without_hint() {
    let scan = RayScanOptions::default();
    for hint in [true, false] {
        let p = Radial { grid: Grid::unit_1d(15).unwrap(), lambda: 0.1875, hint };
        let v = unit(&p, |x| (std::f64::consts::PI * x[0]).sin());
        let plus = project_to_branch(&p, &v, Branch::Plus, &scan).unwrap();
        let minus = project_to_branch(&p, &v, Branch::Minus, &scan).unwrap();
        assert!((plus.t - 0.25).abs() < 1e-10 && (minus.t - 0.75).abs() < 1e-10);
        assert!((plus.value + 1.0 / 48.0).abs() < 1e-12);
        assert!(minus.value.abs() < 1e-12);
        assert!(plus.ray_residual <= 1e-9 && minus.ray_residual <= 1e-9);
        // The radial toy is critical on every ray point.
        assert!(plus.residual < 1e-10 && minus.residual < 1e-10);
    }
}

#[test]
fn projection_errors_are_typed() {
    let scan = RayScanOptions::default();
    for hint in [true, false] {
        let p = Radial { grid: Grid::unit_1d(15).unwrap(), lambda: 0.3, hint };
        let v = unit(&p, |x| x[0] * (1.0 - x[0]));
        assert!(matches!(project_to_branch(&p, &v, Branch::Plus, &scan), Err(NehariError::BranchUnavailable { .. })));
        let p = Radial { lambda: 0.25, ..p };
        assert!(matches!(project_to_branch(&p, &v, Branch::Minus, &scan), Err(NehariError::DegenerateRay { .. })));
    }
    let p = Radial { grid: Grid::unit_1d(15).unwrap(), lambda: 0.1, hint: true };
    let off = DiscreteField::new(p.grid, p.grid.sample(|x| x[0] * (1.0 - x[0]))).unwrap();
    assert!(matches!(project_to_branch(&p, &off, Branch::Plus, &scan), Err(NehariError::NotOnSphere { .. })));
}

#[test]
fn hint_and_sampled_ray_agree_on_cc() {
    let scan = RayScanOptions::default();
    let (a, b) = (cc(true), cc(false));
    for v in directions(&a, 10, 3) {
        let ray = ray_of(&a, v.values()).unwrap();
        for t in [0.1, 0.7, 2.0] {
            let u: Vec<f64> = v.values().iter().map(|x| t * x).collect();
            let direct = a.value(&u).unwrap();
            assert!((ray.eval(t).value - direct).abs() <= 1e-10 * direct.abs().max(1e-3));
        }
        for br in [Branch::Plus, Branch::Minus] {
            let x = project_to_branch(&a, &v, br, &scan).unwrap();
            let y = project_to_branch(&b, &v, br, &scan).unwrap();
            assert!((x.t - y.t).abs() <= 1e-8 * x.t, "{br}: {} vs {}", x.t, y.t);
        }
    }
}

#[test]
fn sampled_ray_derivative_matches_differences() {
    let p = cc(false);
    let v = &directions(&p, 1, 9)[0];
    let prof = SampledRay { problem: &p, direction: v.values() };
    for t in [0.2, 1.0, 3.0] {
        let h = 1e-6 * t;
        let fd = (prof.eval(t + h).value - prof.eval(t - h).value) / (2.0 * h);
        let d = prof.eval(t).derivative;
        assert!((fd - d).abs() <= 1e-5 * d.abs().max(prof.eval(t).scale));
    }
}

#[test]
fn symmetry_idempotence_and_ordering() {
    let scan = RayScanOptions::default();
    let p = cc(true);
    for v in directions(&p, 100, 5) {
        let neg = DiscreteField::new(p.grid, v.values().iter().map(|x| -x).collect()).unwrap();
        let plus = project_to_branch(&p, &v, Branch::Plus, &scan).unwrap();
        let minus = project_to_branch(&p, &v, Branch::Minus, &scan).unwrap();
        assert_eq!(project_to_branch(&p, &neg, Branch::Plus, &scan).unwrap().t, plus.t);
        assert!(plus.t < minus.t && plus.value < minus.value);
        assert!(reduced_value(&p, &v, Branch::Plus, &scan).unwrap() < reduced_value(&p, &v, Branch::Minus, &scan).unwrap());
        let s = Sphere::new(&p.grid, 2.0).unwrap();
        let again = DiscreteField::new(p.grid, s.normalize(&plus.point()).unwrap()).unwrap();
        let re = project_to_branch(&p, &again, Branch::Plus, &scan).unwrap();
        assert!((re.t - plus.t).abs() <= 1e-10 * plus.t);
    }
}

#[test]
fn reduced_gradient_matches_tangential_differences() {
    let scan = RayScanOptions::default();
    let p = cc(true);
    let s = Sphere::new(&p.grid, 2.0).unwrap();
    let dirs = directions(&p, 20, 11);
    let pert = sample_directions(&s, 20, 12, true, Execution::Sequential);
    for br in [Branch::Plus, Branch::Minus] {
        for (v, w) in dirs.iter().zip(&pert) {
            let rg = reduced_gradient(&p, v, br, &scan).unwrap();
            assert!(rg.radial.abs() <= 1e-8 * rg.norm.max(1.0));
            let w = s.project_tangent(v.values(), w);
            let eps = 1e-6;
            let at = |e: f64| {
                let x: Vec<f64> = v.values().iter().zip(&w).map(|(a, b)| a + e * b).collect();
                let x = DiscreteField::new(p.grid, s.normalize(&x).unwrap()).unwrap();
                reduced_value(&p, &x, br, &scan).unwrap()
            };
            let fd = (at(eps) - at(-eps)) / (2.0 * eps);
            let exact = dot(&rg.covector, &w);
            let scale = rg.norm * s.metric().norm(&w);
            assert!((fd - exact).abs() <= 1e-4 * scale, "{br}: fd {fd} vs {exact}");
        }
    }
}

#[test]
fn minimize_cc_levels() {
    let p = cc(true);
    let opts = MinimizeOptions { starts: 3, record_history: true, ..Default::default() };
    let plus = minimize_branch(&p, Branch::Plus, &opts).unwrap();
    let minus = minimize_branch(&p, Branch::Minus, &opts).unwrap();
    assert!(plus.converged && minus.converged);
    assert!(plus.tangent_residual <= 1e-6 && plus.minimizer.residual <= 1e-6, "{}", plus.minimizer.residual);
    assert!(plus.level < 0.0);
    assert!(plus.level < minus.level - 1e-5);
    assert_eq!(plus.level, plus.minimizer.value);
    assert!(plus.history.windows(2).all(|w| w[1] <= w[0]));
    // Evenness.
    let neg = DiscreteField::new(p.grid, plus.minimizer.direction.values().iter().map(|x| -x).collect()).unwrap();
    let again = project_to_branch(&p, &neg, Branch::Plus, &opts.scan()).unwrap();
    assert_eq!(again.value, plus.level);
    // More starts never raise the level.
    let more = minimize_branch(&p, Branch::Plus, &MinimizeOptions { starts: 6, ..opts.clone() }).unwrap();
    assert!(more.level <= plus.level);
}

#[test]
fn minimize_is_schedule_independent() {
    let p = cc(true);
    let base = MinimizeOptions { starts: 4, max_iter: 40, seed: 7, torsion_start: false, ..Default::default() };
    let a = minimize_branch(&p, Branch::Minus, &MinimizeOptions { execution: Execution::Sequential, ..base.clone() }).unwrap();
    let b = minimize_branch(&p, Branch::Minus, &MinimizeOptions { execution: Execution::Parallel, ..base }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn minimize_reports_infeasible_branch() {
    let p = Radial { grid: Grid::unit_1d(9).unwrap(), lambda: 0.3, hint: true };
    let opts = MinimizeOptions { starts: 2, max_resample: 3, ..Default::default() };
    assert!(matches!(minimize_branch(&p, Branch::Plus, &opts), Err(NehariError::InfeasibleBranch { .. })));
}

#[test]
fn continuity_moduli_shrink() {
    let scan = RayScanOptions::default();
    let p = cc(true);
    let v = &directions(&p, 1, 21)[0];
    for br in [Branch::Plus, Branch::Minus] {
        assert_eq!(continuity_probe(&p, v, br, 0.0, 8, 1, &scan).unwrap().modulus, 0.0);
        let m: Vec<f64> =
            [1e-2, 1e-3, 1e-4].iter().map(|&r| continuity_probe(&p, v, br, r, 8, 1, &scan).unwrap().modulus).collect();
        assert!(m[0] > m[1] && m[1] > m[2] && m[2] > 0.0, "{m:?}");
    }
}

#[test]
fn condition_ratios_are_positive_and_exact_for_one_sample() {
    let p = cc(true);
    let r = condition_ratios(&p, 50, 4, Execution::Parallel).unwrap();
    for x in [r.min_e_to_b, r.min_norm_to_e, r.min_e_to_a, r.min_b_to_a, r.c_e_to_b, r.c_e_to_a] {
        assert!(x.is_finite() && x > 0.0);
    }
    let one = condition_ratios(&p, 1, 4, Execution::Sequential).unwrap();
    let s = Sphere::new(&p.grid, 2.0).unwrap();
    let v = &sample_directions(&s, 1, 4, true, Execution::Sequential)[0];
    let (e, b) = (dirichlet_energy_p_slice(&p.grid, v, 2.0), lp_norm_pow_slice(&p.grid, v, 4.0));
    assert_eq!(one.min_e_to_b, crate::fibering::pow(e, 2.0) / b);
    assert!(matches!(condition_ratios(&cc(false), 3, 0, Execution::Sequential), Err(NehariError::NoHomogeneousHint)));
}
