use std::sync::Arc;

use super::*;
use crate::exec::Execution;
use crate::fields::{ops::*, Grid};
use crate::nehari::{
    ray_of, sample_directions, scan_critical_points, Branch, MinimizeOptions, PowerSum, RayCritical, RayScanOptions, Sphere,
    VariationalProblem,
};

fn cc_1d() -> PrescribedProblem {
    build_semilinear_cc(Grid::unit_1d(63).unwrap(), 1.5, Nonlinearity::power(4.0)).unwrap()
}

fn pq_1d() -> PrescribedProblem {
    build_pq_laplacian(Grid::unit_1d(31).unwrap(), 3.0, 2.0, 1.5, 4.0).unwrap()
}

fn dirs(prob: &PrescribedProblem, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let s = Sphere::new(prob.grid(), prob.leading_exponent()).unwrap();
    sample_directions(&s, n, seed, true, Execution::Sequential)
}

fn scaled(v: &[f64], t: f64) -> Vec<f64> {
    v.iter().map(|x| t * x).collect()
}

/// Roots of `g` on a uniform grid over `(0, hi]`, linearly interpolated.
fn scan_roots(g: impl Fn(f64) -> f64, hi: f64, n: usize) -> Vec<f64> {
    let h = hi / n as f64;
    let mut out = Vec::new();
    let mut prev = g(h);
    for i in 2..=n {
        let t = i as f64 * h;
        let cur = g(t);
        if prev.signum() != cur.signum() {
            out.push(t - h * cur / (cur - prev));
        }
        prev = cur;
    }
    out
}

fn reference_profile() -> PowerSum {
    PowerSum::new(vec![(0.25, 2.0), (-0.625, 4.0)])
}

#[test]
fn builders_validate_exponents() {
    let g = Grid::unit_1d(15).unwrap();
    assert_eq!(cc_1d().alpha(), 1.5);
    assert!(build_semilinear_cc(g, 2.0, Nonlinearity::power(4.0)).is_err());
    assert!(build_semilinear_cc(g, 1.5, Nonlinearity::power(1.8)).is_err());
    assert!(build_semilinear_cc(g, 1.5, Nonlinearity::PowerSum(vec![])).is_err());
    assert!(build_pq_laplacian(g, 3.0, 2.0, 2.5, 4.0).is_err());
    let g2 = Grid::unit_2d(7).unwrap();
    // p* = 2p/(2−p) = 6 for p = 1.5.
    assert!(build_pq_laplacian(g2, 1.5, 1.3, 1.2, 6.5).is_err());
    assert!(build_pq_laplacian(g2, 1.5, 1.3, 1.2, 5.5).is_ok());
}

#[test]
fn h_formula_matches_euler_form() {
    for prob in [cc_1d(), pq_1d(), build_pq_laplacian(Grid::unit_2d(9).unwrap(), 3.0, 2.0, 1.5, 4.0).unwrap()] {
        for (k, v) in dirs(&prob, 20, 1).into_iter().enumerate() {
            let u = scaled(&v, 0.3 + 0.2 * k as f64);
            let direct = prob.h_value(&u).unwrap();
            let euler = dot(&prob.i1_gradient(&u).unwrap(), &u) - prob.alpha() * prob.i1(&u).unwrap();
            assert!((direct - euler).abs() <= 1e-10 * direct.abs().max(1e-12), "{direct} vs {euler}");
        }
    }
    // Homogeneous I₁ of degree α gives H ≡ 0.
    assert!(h_terms(&[(0.7, 1.5), (-2.0, 1.5)], 1.5).iter().all(|(k, _)| *k == 0.0));
}

#[test]
fn gradients_match_differences() {
    let prob = pq_1d();
    let c = -0.01;
    let lc = LambdaC { problem: &prob, c };
    let hf = HFunctional { problem: &prob };
    let phi = PhiLambda { problem: &prob, lambda: 0.3 };
    let problems: [&dyn VariationalProblem; 3] = [&lc, &hf, &phi];
    let ws = dirs(&prob, 5, 8);
    for (k, v) in dirs(&prob, 5, 7).into_iter().enumerate() {
        let u = scaled(&v, 0.8);
        for p in problems {
            let g = p.gradient(&u).unwrap();
            let w = &ws[k];
            let e = 1e-6;
            let fd = (p.value(&addv(&u, w, e)).unwrap() - p.value(&addv(&u, w, -e)).unwrap()) / (2.0 * e);
            let exact = dot(&g, w);
            let scale: f64 = g.iter().zip(w).map(|(a, b)| (a * b).abs()).sum();
            assert!((fd - exact).abs() <= 1e-5 * scale, "{fd} vs {exact}");
        }
    }
}

fn addv(u: &[f64], w: &[f64], e: f64) -> Vec<f64> {
    u.iter().zip(w).map(|(a, b)| a + e * b).collect()
}

#[test]
fn reference_profile_maximum_and_roots() {
    let scan = RayScanOptions::default();
    let p = reference_profile();
    let prof = analyze_h_profile(&p, None, &scan).unwrap();
    assert!((prof.s - 0.2f64.sqrt()).abs() < 1e-12);
    assert!((prof.h_max - 0.025).abs() < 1e-15);

    let with = analyze_h_profile(&p, Some(0.015), &scan).unwrap();
    let (tp, tm) = with.roots.unwrap();
    let oracle = scan_roots(|t| p.value(t) - 0.015, 1.0, 1_000_000);
    assert_eq!(oracle.len(), 2);
    assert!((tp - oracle[0]).abs() < 1e-8 && (tm - oracle[1]).abs() < 1e-8);
    assert!(tp < with.s && with.s < tm);

    assert!(matches!(analyze_h_profile(&p, Some(0.025), &scan), Err(PrescribedError::DegenerateLevel { .. })));
    assert!(analyze_h_profile(&p, Some(0.03), &scan).unwrap().roots.is_none());
    // Two interior maxima violate the shape condition.
    let bimodal = PowerSum::new(vec![(1.0, 2.0), (-3.0, 3.0), (2.6, 4.0), (-0.5, 6.0)]);
    assert!(matches!(analyze_h_profile(&bimodal, None, &scan), Err(PrescribedError::NotUnimodal { .. })));
}

#[test]
fn single_direction_maximum_matches_closed_form() {
    let prob = cc_1d();
    let (q, r) = (1.5, 4.0);
    for v in dirs(&prob, 5, 2) {
        let e = dirichlet_energy_p_slice(prob.grid(), &v, 2.0);
        let b = lp_norm_pow_slice(prob.grid(), &v, r);
        let s = ((2.0 - q) * e / (4.0 * (1.0 - q / r) * b)).sqrt();
        let prof = h_profile(&prob, &v, &RayScanOptions::default()).unwrap();
        assert!((prof.s - s).abs() <= 1e-8 * s);
        let hmax = (2.0 - q) / 2.0 * e * s * s + (q / r - 1.0) * b * s.powi(4);
        assert!((prof.h_max - hmax).abs() <= 1e-8 * hmax);
    }
}

#[test]
fn lambda_c_identities() {
    let prob = cc_1d();
    let c = -0.002;
    let scan = RayScanOptions::default();
    for v in dirs(&prob, 10, 3) {
        let (e, b) = (dirichlet_energy_p_slice(prob.grid(), &v, 2.0), lp_norm_pow_slice(prob.grid(), &v, 4.0));
        // I₁(tv) = 0 at t = (4E/(2B))^{1/2}.
        let u0 = scaled(&v, (2.0 * e / b).sqrt());
        assert!(prob.i1(&u0).unwrap().abs() < 1e-12 * e * 2.0 * e / b);
        let lc = lambda_c_value(&prob, &u0, c).unwrap();
        assert!((lc - (-c / prob.i2(&u0))).abs() <= 1e-7 * lc);

        let u = scaled(&v, 0.7);
        let shift = lambda_c_value(&prob, &u, c).unwrap() - lambda_c_value(&prob, &u, 2.0 * c).unwrap();
        assert!((shift - c / prob.i2(&u)).abs() <= 1e-12 * shift.abs());

        // Stationary points of λ_c along the ray are the roots of H + αc.
        let roots = roots_of_h(&prob, &v, c, &scan).unwrap().roots.unwrap();
        let lcp = LambdaC { problem: &prob, c };
        let RayCritical::Points(pts) = scan_critical_points(&ray_of(&lcp, &v).unwrap(), &scan) else { panic!() };
        assert_eq!(pts.len(), 2);
        assert!((pts[0].t - roots.0).abs() <= 1e-6 * roots.0 && (pts[1].t - roots.1).abs() <= 1e-6 * roots.1);
        for t in [roots.0, roots.1] {
            let h = 1e-6 * t;
            let d = (lambda_c_value(&prob, &scaled(&v, t + h), c).unwrap()
                - lambda_c_value(&prob, &scaled(&v, t - h), c).unwrap())
                / (2.0 * h);
            assert!(d.abs() <= 1e-6 * lambda_c_value(&prob, &scaled(&v, t), c).unwrap().abs().max(1.0));
        }
    }
    assert!(matches!(lambda_c_value(&prob, &vec![0.0; 63], c), Err(PrescribedError::NonPositiveI2 { .. })));
}

#[test]
fn f2_spot_check() {
    assert!(check_f2(1.5, &Nonlinearity::power(4.0)).passed());
    // f(s) = s³ − 5|s|s changes monotonicity of (q−1)f/s − f'.
    let bad = check_f2(1.5, &Nonlinearity::PowerSum(vec![(1.0, 4.0), (-5.0, 3.0), (4.0, 2.5)]));
    assert!(!bad.passed() && !bad.violations.is_empty());
}

#[test]
fn custom_nonlinearity_matches_power_path() {
    let g = Grid::unit_1d(31).unwrap();
    let custom = CustomNonlinearity {
        name: "cubic".into(),
        f: Arc::new(|s| s * s * s),
        f_prime: Arc::new(|s| 3.0 * s * s),
        primitive: Arc::new(|s| s.powi(4) / 4.0),
    };
    let a = build_semilinear_cc(g, 1.5, Nonlinearity::power(4.0)).unwrap();
    let b = build_semilinear_cc(g, 1.5, Nonlinearity::Custom(custom)).unwrap();
    let scan = RayScanOptions::default();
    for v in dirs(&a, 5, 4) {
        let x = roots_of_h(&a, &v, -0.003, &scan).unwrap();
        let y = roots_of_h(&b, &v, -0.003, &scan).unwrap();
        let (xr, yr) = (x.roots.unwrap(), y.roots.unwrap());
        assert!((x.s - y.s).abs() <= 1e-8 * x.s);
        assert!((xr.0 - yr.0).abs() <= 1e-8 * xr.0 && (xr.1 - yr.1).abs() <= 1e-8 * xr.1);
    }
}

fn quick_opts(seed: u64) -> MinimizeOptions {
    MinimizeOptions { starts: 3, seed, ..Default::default() }
}

#[test]
fn ground_level_and_certified_solves() {
    let prob = cc_1d();
    let g1 = h_ground_level(&prob, &quick_opts(1)).unwrap();
    let g2 = h_ground_level(&prob, &quick_opts(2)).unwrap();
    assert!(g1.h0 > 0.0);
    assert!((g1.h0 - g2.h0).abs() <= 0.01 * g1.h0);

    let c = -0.1 * g1.h0 / prob.alpha();
    let opts = PrescribedOptions { minimize: quick_opts(3), ..Default::default() };
    let plus = solve_prescribed(&prob, c, &g1, Branch::Plus, &opts).unwrap();
    let minus = solve_prescribed(&prob, c, &g1, Branch::Minus, &opts).unwrap();
    for s in [&plus, &minus] {
        assert!(s.certified, "{} {}", s.phi_residual, s.energy_error);
        assert!(s.phi_residual <= 1e-6 && s.energy_error <= 1e-6);
    }
    assert!(plus.lambda_star < minus.lambda_star);
    let neg: Vec<f64> = plus.u_star.values().iter().map(|x| -x).collect();
    let (r, e) = certify(&prob, plus.lambda_star, &neg, c).unwrap();
    assert_eq!((r, e), (plus.phi_residual, plus.energy_error));

    let out = solve_prescribed(&prob, -1.1 * g1.h0 / prob.alpha(), &g1, Branch::Plus, &opts);
    assert!(matches!(out, Err(PrescribedError::OutOfRange { .. })));
}

#[test]
fn relative_certification_on_large_scale_problem() {
    let prob = pq_1d();
    let ground = h_ground_level(&prob, &quick_opts(1)).unwrap();
    let c = -0.5 * ground.h0 / prob.alpha();
    let opts = PrescribedOptions { minimize: quick_opts(3), relative_tol: true, ..Default::default() };
    let s = solve_prescribed(&prob, c, &ground, Branch::Minus, &opts).unwrap();
    let scale = residual_scale(&prob, s.lambda_star, s.u_star.values()).unwrap();
    assert!(scale > 10.0, "{scale}");
    assert_eq!(s.residual_bound, opts.tol * scale);
    assert!(s.certified && s.phi_residual <= s.residual_bound, "{} {}", s.phi_residual, s.residual_bound);
}

#[test]
fn regime_tracks_ground_level() {
    let prob = cc_1d();
    let ground = h_ground_level(&prob, &quick_opts(5)).unwrap();
    let scan = RayScanOptions::default();
    let mut ds = dirs(&prob, 50, 6);
    ds.push(ground.direction.values().to_vec());
    let at = |f: f64| two_root_regime(&prob, -f * ground.h0 / prob.alpha(), &ds, Execution::Parallel, &scan).unwrap();
    assert!(at(0.5).all_two_roots());
    assert!(at(0.95).all_two_roots());
    let above = at(1.05);
    assert!(!above.all_two_roots() && above.rootless >= 1);
}

#[test]
fn gaps_positive_and_plus_norms_shrink() {
    let scan = RayScanOptions::default();
    // Oracle direction: the gap on one ray against a dense scan.
    let prob = cc_1d();
    let v = &dirs(&prob, 1, 9)[0];
    let c = -0.004;
    let g = ray_gaps(&prob, v, c, &scan).unwrap().unwrap();
    let target = -prob.alpha() * c;
    let hv = |t: f64| h_ray(&prob, v, t).unwrap().0;
    let roots = scan_roots(|t| hv(t) - target, 2.0 * g.t_minus, 200_000);
    let dh = scan_roots(|t| h_ray(&prob, v, t).unwrap().1, 2.0 * g.t_minus, 200_000);
    assert!((g.s_gap - (dh[0] - roots[0])).abs() < 1e-6);
    let lc = |t: f64| lambda_c_value(&prob, &scaled(v, t), c).unwrap();
    assert!((g.lambda_gap - (lc(dh[0]) - lc(roots[0]))).abs() < 1e-6 * g.lambda_gap.max(1.0));

    let pq = pq_1d();
    let ground = h_ground_level(&pq, &quick_opts(1)).unwrap();
    let c = -0.5 * ground.h0 / pq.alpha();
    let r = gap_diagnostics(&pq, c, 200, 11, Execution::Parallel, &scan).unwrap();
    assert!(r.all_positive(), "{r:?}");
    assert!(r.min_minus_mass > 0.0);

    let sups: Vec<f64> = (1..=6)
        .map(|k| {
            let c = -ground.h0 * 0.5f64.powi(k) / pq.alpha();
            gap_diagnostics(&pq, c, 40, 12, Execution::Parallel, &scan).unwrap().sup_plus_norm
        })
        .collect();
    assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
}

#[test]
fn coercivity_probe_grows() {
    let prob = cc_1d();
    let rep = coercivity_probe(&prob, -0.002, 5, &RayScanOptions::default()).unwrap();
    assert_eq!(rep.rows.len(), 6);
    assert!(rep.increasing_tail, "{:?}", rep.rows);
    assert!(rep.rows.windows(2).all(|w| w[1].minus_norm > w[0].minus_norm));
}
