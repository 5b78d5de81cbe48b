use std::f64::consts::PI;

use super::*;
use crate::exec::Execution;
use crate::fibering::{lambda_threshold, phi_value};
use crate::fields::{ops::*, Grid};
use crate::nehari::{sample_directions, Branch, MinimizeOptions, RayProfile, SampledRay, Sphere, VariationalProblem};

fn cfg(p: f64) -> AffineEnergyConfig {
    AffineEnergyConfig::new(p, 64).unwrap()
}

fn fields(grid: &Grid, p: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_directions(&Sphere::new(grid, p).unwrap(), n, seed, true, Execution::Sequential)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn constants() {
    assert!(rel(unit_ball_volume(1.0), 2.0) < 1e-15);
    assert!(rel(unit_ball_volume(2.0), PI) < 1e-15);
    assert!(rel(unit_ball_volume(3.0), 4.0 * PI / 3.0) < 1e-15);
    assert!(rel(gamma_2p(2.0), 4.0 * PI) < 1e-14);
    assert!(AffineEnergyConfig::new(2.0, 63).is_err());
    assert!(AffineEnergyConfig::new(2.0, 6).is_err());
    assert!(AffineEnergyConfig::new(1.0, 64).is_err());
    let g2 = Grid::unit_2d(7).unwrap();
    assert!(AffineProblem::new(cfg(2.5), Grid::unit_1d(7).unwrap(), 1.5, 4.0, 0.1).is_err());
    assert!(AffineProblem::new(cfg(2.5), g2, 2.6, 4.0, 0.1).is_err());
    // p* = 2p/(2−p) = 6 at p = 1.5.
    assert!(AffineProblem::new(cfg(1.5), g2, 1.2, 6.5, 0.1).is_err());
    assert!(AffineProblem::new(cfg(1.5), g2, 1.2, 5.5, 0.1).is_ok());
    assert!(matches!(affine_energy(&cfg(2.0), &g2, &vec![0.0; g2.len()]), Err(AffineError::ZeroField)));
}

#[test]
fn homogeneity_and_evenness() {
    let g = Grid::unit_2d(15).unwrap();
    let c = cfg(3.0);
    let prob = AffineProblem::new(c.clone(), g, 1.5, 4.0, 0.2).unwrap();
    for u in fields(&g, 3.0, 5, 1) {
        let e = affine_energy(&c, &g, &u).unwrap();
        for t in [0.5, 2.0, 10.0] {
            let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
            assert!(rel(affine_energy(&c, &g, &tu).unwrap(), t * e) < 1e-12);
        }
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_eq!(affine_energy(&c, &g, &neg).unwrap(), e);
        assert_eq!(prob.phi(&neg).unwrap(), prob.phi(&u).unwrap());
    }
}

/// For `p = 2`, `‖∇_ξ u‖² = a + ρ cos(2θ − φ)` and `∫ dθ/(a + ρ cos) = 2π/√(a² − ρ²)`.
fn isotropic_oracle(grid: &Grid, u: &[f64]) -> f64 {
    let vol = grid.cell_volume();
    let (mut kxx, mut kyy, mut kxy) = (0.0, 0.0, 0.0);
    for g in grid.cell_gradients(u) {
        kxx += vol * g[0] * g[0];
        kyy += vol * g[1] * g[1];
        kxy += vol * g[0] * g[1];
    }
    let a = 0.5 * (kxx + kyy);
    let rho = (0.25 * (kxx - kyy).powi(2) + kxy * kxy).sqrt();
    gamma_2p(2.0) * (2.0 * PI / (a * a - rho * rho).sqrt()).powf(-0.5)
}

#[test]
fn quadrature_matches_p2_oracle() {
    let g = Grid::unit_2d(15).unwrap();
    let dense = AffineEnergyConfig::new(2.0, 4096).unwrap();
    for u in fields(&g, 2.0, 10, 2) {
        let exact = isotropic_oracle(&g, &u);
        let e = affine_energy(&cfg(2.0), &g, &u).unwrap();
        assert!(rel(e, exact) < 1e-8, "{e} vs {exact}");
        assert!(rel(affine_energy(&dense, &g, &u).unwrap(), exact) < 1e-8);
    }
    // Anisotropic stretch of a smooth bump.
    let u = g.sample(|x| (PI * x[0]).sin() * (PI * x[1]).sin().powi(3) * (1.0 + 3.0 * x[0] * x[1]));
    assert!(rel(affine_energy(&cfg(2.0), &g, &u).unwrap(), isotropic_oracle(&g, &u)) < 1e-8);
}

#[test]
fn quadrature_converges_in_angle() {
    let g = Grid::unit_2d(31).unwrap();
    let u = g.sample(|x| (PI * x[0]).sin() * (PI * x[1]).sin() * (1.0 + x[0]));
    for p in [2.5, 3.0, 4.0] {
        let e64 = affine_energy(&AffineEnergyConfig::new(p, 64).unwrap(), &g, &u).unwrap();
        let e128 = affine_energy(&AffineEnergyConfig::new(p, 128).unwrap(), &g, &u).unwrap();
        assert!(rel(e64, e128) < 1e-6, "p={p}: {e64} vs {e128}");
    }
}

fn bump(angle: f64) -> impl Fn([f64; 2]) -> f64 {
    let (c, s) = (angle.cos(), angle.sin());
    move |x: [f64; 2]| {
        let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
        let (a, b) = (c * dx + s * dy, -s * dx + c * dy);
        let rho2 = (a / 0.35).powi(2) + (b / 0.2).powi(2);
        if rho2 < 1.0 {
            (1.0 - rho2).powi(4)
        } else {
            0.0
        }
    }
}

#[test]
fn rotation_invariance() {
    let g = Grid::unit_2d(127).unwrap();
    for p in [2.0, 2.5] {
        let c = AffineEnergyConfig::new(p, 64).unwrap();
        let e0 = affine_energy(&c, &g, &g.sample(bump(0.0))).unwrap();
        let e30 = affine_energy(&c, &g, &g.sample(bump(PI / 6.0))).unwrap();
        assert!(rel(e30, e0) < 1e-3, "p={p}: {e0} vs {e30}");
    }
}

#[test]
fn gradient_matches_differences() {
    let g = Grid::unit_2d(15).unwrap();
    let c = cfg(3.0);
    let us = fields(&g, 3.0, 20, 3);
    let ws = fields(&g, 3.0, 20, 4);
    for (u, w) in us.iter().zip(&ws) {
        let (ep, grad) = energy_and_gradient(&c, &g, u).unwrap();
        assert!(rel(affine_energy(&c, &g, u).unwrap().powf(3.0), ep) < 1e-13);
        let f = |s: f64| {
            let v: Vec<f64> = u.iter().zip(w).map(|(a, b)| a + s * b).collect();
            affine_energy(&c, &g, &v).unwrap().powf(3.0) / 3.0
        };
        let eps = 1e-6;
        let fd = (f(eps) - f(-eps)) / (2.0 * eps);
        let exact = dot(&grad, w);
        let scale: f64 = grad.iter().zip(w).map(|(a, b)| (a * b).abs()).sum();
        assert!((fd - exact).abs() <= 1e-4 * scale, "{fd} vs {exact}");
        // Euler identity for the p-homogeneous E^p.
        assert!(rel(dot(&grad, u), ep) < 1e-8);
    }
}

#[test]
fn problem_gradient_and_ray_paths_agree() {
    let g = Grid::unit_2d(11).unwrap();
    let prob = AffineProblem::new(cfg(2.5), g, 1.5, 4.0, 0.3).unwrap();
    for v in fields(&g, 2.5, 5, 5) {
        let ray = VariationalProblem::ray(&prob, &v).unwrap().unwrap();
        let sampled = SampledRay { problem: &prob, direction: &v };
        for t in [1e-3, 0.1, 0.5, 1.0, 3.0] {
            let (a, b) = (ray.eval(t), sampled.eval(t));
            assert!((a.value - b.value).abs() <= 1e-8 * b.scale * t.max(1.0));
            assert!((a.derivative - b.derivative).abs() <= 1e-8 * b.scale);
        }
        let w = &fields(&g, 2.5, 1, 6)[0];
        let u: Vec<f64> = v.iter().map(|x| 0.7 * x).collect();
        let grad = prob.phi_gradient(&u).unwrap();
        let eps = 1e-6;
        let at = |s: f64| prob.phi(&u.iter().zip(w).map(|(a, b)| a + s * b).collect::<Vec<_>>()).unwrap();
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        let scale: f64 = grad.iter().zip(w).map(|(a, b)| (a * b).abs()).sum();
        assert!((fd - dot(&grad, w)).abs() <= 1e-4 * scale);
    }
}

#[test]
fn lambda_estimate_properties() {
    let g = Grid::unit_2d(15).unwrap();
    let (p, q, r) = (2.5, 1.5, 4.0);
    let prob = AffineProblem::new(cfg(p), g, q, r, 0.1).unwrap();
    let exec = Execution::Parallel;
    let small = lambda_a_estimate(&prob, 20, 7, exec).unwrap();
    let large = lambda_a_estimate(&prob, 100, 7, exec).unwrap();
    assert!(small.value > 0.0 && large.value <= small.value);
    let other = lambda_a_estimate(&prob, 100, 8, exec).unwrap();
    assert!(rel(other.value, large.value) < 0.25);

    // The fibering threshold written in terms of the energy itself.
    let v = &fields(&g, p, 1, 9)[0];
    let coeffs = prob.coefficients(v).unwrap();
    let e = affine_energy(prob.config(), &g, v).unwrap();
    let cst = (r - p) / (r - q) * ((p - q) / (r - q)).powf((p - q) / (r - p));
    let display = cst * e.powf(p * (r - q) / (r - p)) / (coeffs.a * coeffs.b.powf((p - q) / (r - p)));
    assert!(rel(lambda_threshold(&coeffs, &prob.degrees()).lambda_u, display) < 1e-12);
}

#[test]
fn branches_below_threshold() {
    let g = Grid::unit_2d(9).unwrap();
    let base = AffineProblem::new(cfg(2.5), g, 1.5, 4.0, 0.1).unwrap();
    let est = lambda_a_refined(&base, 50, 1, Execution::Parallel, 2, 300).unwrap();
    assert!(est.best() <= est.value);
    let prob = base.with_lambda(0.3 * est.best()).unwrap();
    let opts = MinimizeOptions { starts: 2, relative_tol: true, ..Default::default() };
    let plus = solve_affine(&prob, Branch::Plus, &opts).unwrap();
    let minus = solve_affine(&prob, Branch::Minus, &opts).unwrap();
    assert!(plus.level.converged && minus.level.converged);
    assert!(plus.level.level < 0.0 && plus.level.level < minus.level.level);
    let m = &plus.level.minimizer;
    // ‖Φ'(u)‖ relative to the size of Φ'(u)u ~ Φ(u).
    assert!(m.residual * m.t <= 1e-5 * plus.level.level.abs(), "{}", m.residual);
    assert!(plus.positive);
    if plus.positive {
        assert!(plus.level.minimizer.direction.values().iter().all(|&x| x >= -1e-8));
    }
    let c = prob.coefficients(plus.level.minimizer.direction.values()).unwrap();
    let phi = phi_value(&c, &prob.degrees(), prob.lambda(), plus.norm).unwrap();
    assert!((phi - plus.level.level).abs() <= 1e-12 * phi.abs());

    let gaps = affine_gap_checks(&prob, 100, 3, Execution::Parallel).unwrap();
    assert!(gaps.passed(), "{gaps:?}");
}

#[test]
fn slope_fit_recovers_power_laws() {
    let xs = [0.1, 0.2, 0.5, 1.0];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
    assert!((log_log_slope(&xs, &ys) - 2.5).abs() < 1e-12);
}
