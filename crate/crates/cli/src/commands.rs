use serde_json::{json, Value};

use nehari_core::affine::{affine_gap_checks, theorem_taf_checks, AffineProblem, TafReport};
use nehari_core::fibering::{
    classify_stationary, fibering_roots, lambda_threshold, phi_prime, phi_value, pow, prime_scale, root_bounds, sample_series,
    FiberingCoefficients, FiberingRoots, HomogeneityDegrees, Stationarity,
};
use nehari_core::nehari::{minimize_branch, Branch, BranchLevel, MinimizeOptions, Sphere, VariationalProblem};
use nehari_core::prescribed::{c_sweep, h_ground_level, two_root_regime, PhiLambda, PrescribedProblem};

use crate::config::*;
use crate::report::{Check, Report, Series, Timings};
use crate::Outcome;

type Numerical = Box<dyn std::error::Error>;

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Runs `body`, recording a numerical failure in the report instead of
/// propagating it.
fn guarded(
    report: &mut Report,
    series: &mut Vec<Series>,
    body: impl FnOnce(&mut Report, &mut Vec<Series>) -> Result<(), Numerical>,
) {
    if let Err(e) = body(report, series) {
        report.error = Some(e.to_string());
    }
}

pub fn fibering(src: &Source, strict: bool) -> Result<Outcome, ConfigError> {
    let cfg: FiberingConfig = src.parse()?;
    let (d, c) = cfg.validate(src)?;
    let mut report = Report::new("fibering", 0, to_value(&cfg));
    let mut series = Vec::new();
    let mut timings = Timings::default();
    timings.time("fibering", None, || guarded(&mut report, &mut series, |r, s| fibering_body(&cfg, &d, &c, r, s)));
    report.finish(strict);
    Ok(Outcome { report, series, timings })
}

/// `t` beyond which `φ' < 0` for every `λ ≥ 0`.
fn decay_onset(c: &FiberingCoefficients, d: &HomogeneityDegrees) -> f64 {
    pow(c.e / c.b, 1.0 / (d.beta - d.eta))
}

fn fibering_body(
    cfg: &FiberingConfig,
    d: &HomogeneityDegrees,
    c: &FiberingCoefficients,
    report: &mut Report,
    series: &mut Vec<Series>,
) -> Result<(), Numerical> {
    let lambda = cfg.lambda;
    let th = lambda_threshold(c, d);
    let roots = fibering_roots(c, d, lambda, cfg.tol)?;
    let bounds = match roots {
        FiberingRoots::TwoRoots { .. } => Some(root_bounds(c, d, lambda)?),
        _ => None,
    };
    let below = lambda < th.lambda_u * (1.0 - cfg.tol);
    let above = lambda > th.lambda_u * (1.0 + cfg.tol);
    let checks = &mut report.checks;
    let mut extrema = Vec::new();
    match roots {
        FiberingRoots::TwoRoots { t_plus, t_minus } => {
            checks.push(Check::holds("classification_matches_threshold", !above));
            for (name, t, want) in [("t_plus", t_plus, Stationarity::LocalMin), ("t_minus", t_minus, Stationarity::LocalMax)] {
                let res = phi_prime(c, d, lambda, t)?.abs() / prime_scale(c, d, lambda, t);
                checks.push(Check::at_most(format!("{name}.relative_residual"), res, 1e-9));
                checks.push(Check::holds(
                    format!("{name}.stationarity"),
                    classify_stationary(c, d, lambda, t, cfg.tol).ok() == Some(want),
                ));
                extrema.push((name, t, phi_value(c, d, lambda, t)?));
            }
            checks.push(Check::below("t_plus_below_t_minus", t_plus, t_minus));
            if let Some(b) = &bounds {
                checks.push(Check::below("t_plus_below_bound", t_plus, b.t_plus_upper));
                checks.push(Check::at_least("t_minus_above_bound", t_minus, b.t_minus_lower));
            }
        }
        FiberingRoots::Degenerate { .. } => checks.push(Check::holds("classification_matches_threshold", !below && !above)),
        FiberingRoots::NoRoots { .. } => checks.push(Check::holds("classification_matches_threshold", !below)),
    }

    let spec = cfg.series.clone().unwrap_or_else(|| {
        let t_max = 1.5 * decay_onset(c, d).max(th.t0);
        SeriesSpec { t_min: 1e-3 * t_max, t_max, points: 1501 }
    });
    let pts = sample_series(c, d, lambda, spec.t_min, spec.t_max, spec.points)?;
    let h = (spec.t_max - spec.t_min) / (spec.points - 1) as f64;
    let value: Vec<f64> = pts.iter().map(|p| p.value).collect();
    let local = |cmp: fn(f64, f64) -> bool| -> Vec<f64> {
        (1..pts.len() - 1).filter(|&i| cmp(value[i], value[i - 1]) && cmp(value[i], value[i + 1])).map(|i| pts[i].t).collect()
    };
    let (mins, maxs) = (local(|a, b| a < b), local(|a, b| a > b));
    let in_range = |t: f64| t > spec.t_min + h && t < spec.t_max - h;
    if let FiberingRoots::TwoRoots { t_plus, t_minus } = roots {
        if in_range(t_plus) && in_range(t_minus) {
            let near = |found: &[f64], t: f64| found.len() == 1 && (found[0] - t).abs() <= h;
            checks.push(Check::holds("series.local_min_at_t_plus", near(&mins, t_plus)));
            checks.push(Check::holds("series.local_max_at_t_minus", near(&maxs, t_minus)));
        }
    } else {
        checks.push(Check::holds("series.no_interior_extrema", mins.is_empty() && maxs.is_empty()));
    }
    if spec.t_max * 0.9 >= decay_onset(c, d) {
        let tail = &value[pts.len() - pts.len() / 10 - 1..];
        checks.push(Check::holds("series.decreasing_tail", tail.windows(2).all(|w| w[1] < w[0])));
    }
    // Centered differences of the value column at spacings h and 2h: a
    // second-order match shrinks the error by about 4 when h halves.
    let (lo, hi) = (pts.len() / 10 + 2, pts.len() - pts.len() / 10 - 2);
    let err = |k: usize| {
        (lo..hi).map(|i| ((value[i + k] - value[i - k]) / (2.0 * k as f64 * h) - pts[i].derivative).abs()).fold(0.0f64, f64::max)
    };
    let (e1, e2) = (err(1), err(2));
    let scale = pts[lo..hi].iter().map(|p| prime_scale(c, d, lambda, p.t)).fold(0.0f64, f64::max);
    if e2 > 1e-9 * scale {
        checks.push(Check::at_least("series.derivative_fd_order_ratio", e2 / e1, 3.0));
    } else {
        checks.push(Check::at_most("series.derivative_fd_error", e1 / scale, 1e-9));
    }

    let mut s = Series::new("fibering_series", &["t", "value", "derivative"]);
    s.rows = pts.iter().map(|p| vec![p.t, p.value, p.derivative]).collect();
    series.push(s);
    report.results = json!({
        "degrees": d,
        "coefficients": c,
        "lambda": lambda,
        "threshold": th,
        "roots": roots,
        "root_bounds": bounds,
        "extrema": extrema.iter().map(|(n, t, v)| json!({"root": n, "t": t, "value": v})).collect::<Vec<_>>(),
        "series": {"file": "fibering_series.csv", "t_min": spec.t_min, "t_max": spec.t_max, "points": spec.points,
                   "local_min": mins, "local_max": maxs},
    });
    Ok(())
}

pub fn solve(src: &Source, seed: Option<u64>, strict: bool) -> Result<Outcome, ConfigError> {
    let mut cfg: SolveConfig = src.parse()?;
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    let grid = grid_for(src, &cfg.grid)?;
    minimize_for(src, "solver", &cfg.solver)?;
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
        return Err(src.error_at("lambda", format!("lambda must be positive, got {}", cfg.lambda)));
    }
    let built = problem_for(src, &cfg.problem, grid, cfg.lambda)?;
    let mut report = Report::new("solve", cfg.solver.seed, to_value(&cfg));
    let mut series = Vec::new();
    let mut timings = Timings::default();
    timings.time("solve", None, || {
        guarded(&mut report, &mut series, |r, s| match &built {
            Built::Prescribed(p) => solve_body(&PhiLambda { problem: p, lambda: cfg.lambda }, &cfg.solver, r, s),
            Built::Affine(a) => solve_body(a, &cfg.solver, r, s),
        })
    });
    report.finish(strict);
    Ok(Outcome { report, series, timings })
}

fn history_series(name: &str, level: &BranchLevel) -> Option<Series> {
    if level.history.is_empty() {
        return None;
    }
    let mut s = Series::new(name, &["iteration", "value"]);
    s.rows = level.history.iter().enumerate().map(|(i, v)| vec![i as f64, *v]).collect();
    Some(s)
}

fn solve_body<P: VariationalProblem + ?Sized>(
    prob: &P,
    opts: &MinimizeOptions,
    report: &mut Report,
    series: &mut Vec<Series>,
) -> Result<(), Numerical> {
    let plus = minimize_branch(prob, Branch::Plus, opts)?;
    let minus = minimize_branch(prob, Branch::Minus, opts)?;
    for (name, l) in [("plus", &plus), ("minus", &minus)] {
        report.checks.push(Check::holds(format!("{name}.converged"), l.converged));
        report.checks.push(Check::at_most(format!("{name}.ray_residual"), l.minimizer.ray_residual, 10.0 * opts.ray_tol));
        if l.resampled > 0 {
            report.warnings.push(format!("{name}: {} start directions were redrawn", l.resampled));
        }
        series.extend(history_series(&format!("history_{name}"), l));
    }
    report.checks.push(Check::below("plus.level_negative", plus.level, 0.0));
    report.checks.push(Check::below("level_ordering", plus.level, minus.level));
    report.results = json!({"plus": plus, "minus": minus});
    Ok(())
}

pub fn prescribed(src: &Source, seed: Option<u64>, strict: bool) -> Result<Outcome, ConfigError> {
    let mut cfg: PrescribedConfig = src.parse()?;
    if let Some(s) = seed {
        cfg.solver.minimize.seed = s;
    }
    let grid = grid_for(src, &cfg.grid)?;
    minimize_for(src, "solver", &cfg.solver.minimize)?;
    if cfg.sweep.ks.is_empty() || cfg.sweep.samples == 0 {
        return Err(src.error_at("sweep", "the sweep needs at least one k and one sample"));
    }
    let prob = match problem_for(src, &cfg.problem, grid, 1.0)? {
        Built::Prescribed(p) => p,
        Built::Affine(_) => return Err(src.error_at("problem", "prescribed sweeps support semilinear_cc and pq_laplacian")),
    };
    let mut report = Report::new("prescribed", cfg.solver.minimize.seed, to_value(&cfg));
    let mut series = Vec::new();
    let mut timings = Timings::default();
    timings.time("prescribed", None, || guarded(&mut report, &mut series, |r, s| prescribed_body(&prob, &cfg, r, s)));
    report.finish(strict);
    Ok(Outcome { report, series, timings })
}

fn prescribed_body(
    prob: &PrescribedProblem,
    cfg: &PrescribedConfig,
    report: &mut Report,
    series: &mut Vec<Series>,
) -> Result<(), Numerical> {
    let opts = &cfg.solver;
    let ground = h_ground_level(prob, &opts.minimize)?;
    report.checks.push(Check::above("h0_positive", ground.h0, 0.0));
    let rows = c_sweep(prob, &ground, &cfg.sweep.ks, cfg.sweep.samples, opts)?;
    for row in &rows {
        let k = row.k;
        report.checks.push(Check::at_most(format!("k{k}.phi_residual_plus"), row.phi_residual_plus, row.residual_bound_plus));
        report.checks.push(Check::at_most(format!("k{k}.phi_residual_minus"), row.phi_residual_minus, row.residual_bound_minus));
        report.checks.push(Check::at_most(format!("k{k}.energy_error_plus"), row.energy_error_plus, opts.tol));
        report.checks.push(Check::at_most(format!("k{k}.energy_error_minus"), row.energy_error_minus, opts.tol));
        report.checks.push(Check::below(format!("k{k}.lambda_ordering"), row.lambda_plus, row.lambda_minus));
        report.checks.push(Check::at_most(format!("k{k}.rootless_directions"), row.gaps.rootless as f64, 0.0));
        report.checks.push(Check::above(format!("k{k}.min_s_gap"), row.gaps.min_s_gap, 0.0));
        report.checks.push(Check::above(format!("k{k}.min_lambda_gap"), row.gaps.min_lambda_gap, 0.0));
        report.checks.push(Check::above(format!("k{k}.min_derivative_floor"), row.gaps.min_derivative_floor, 0.0));
    }
    for w in rows.windows(2) {
        if w[1].k > w[0].k {
            report.checks.push(Check::below(
                format!("k{}.sup_plus_norm_decreases", w[1].k),
                w[1].gaps.sup_plus_norm,
                w[0].gaps.sup_plus_norm,
            ));
        }
    }
    // Two-root regime at levels straddling h₀: sampled rays plus the ground direction.
    let mut dirs = sphere_directions(prob, cfg.sweep.samples.min(50), opts.minimize.seed, opts.minimize.execution)?;
    dirs.push(ground.direction.values().to_vec());
    let scan = opts.minimize.scan();
    let mut regimes = Vec::new();
    for f in [0.5, 0.95, 1.05] {
        let c = -f * ground.h0 / prob.alpha();
        let reg = two_root_regime(prob, c, &dirs, opts.minimize.execution, &scan)?;
        let name = format!("regime_{f}");
        if f < 1.0 {
            report.checks.push(Check::at_least(format!("{name}.two_roots"), reg.two_roots as f64, reg.directions as f64));
        } else {
            report.checks.push(Check::at_least(format!("{name}.rootless"), reg.rootless as f64, 1.0));
        }
        regimes.push(reg);
    }

    let mut s = Series::new(
        "prescribed_sweep",
        &[
            "k",
            "c",
            "lambda_plus",
            "lambda_minus",
            "phi_residual_plus",
            "phi_residual_minus",
            "min_s_gap",
            "min_lambda_gap",
            "min_derivative_floor",
            "sup_plus_norm",
        ],
    );
    s.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.k as f64,
                r.c,
                r.lambda_plus,
                r.lambda_minus,
                r.phi_residual_plus,
                r.phi_residual_minus,
                r.gaps.min_s_gap,
                r.gaps.min_lambda_gap,
                r.gaps.min_derivative_floor,
                r.gaps.sup_plus_norm,
            ]
        })
        .collect();
    series.push(s);
    report.results = json!({
        "alpha": prob.alpha(),
        "h0": ground.h0,
        "s": ground.s,
        "ground_iterations": ground.level.iterations,
        "rows": rows,
        "regimes": regimes,
    });
    Ok(())
}

pub fn affine(src: &Source, seed: Option<u64>, strict: bool) -> Result<Outcome, ConfigError> {
    let mut cfg: AffineConfig = src.parse()?;
    if let Some(s) = seed {
        cfg.sweep.minimize.seed = s;
    }
    let grid = grid_for(src, &cfg.grid)?;
    minimize_for(src, "sweep", &cfg.sweep.minimize)?;
    if cfg.sweep.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(src.error_at("lambdas", "swept lambdas must be positive"));
    }
    let base = match problem_for(src, &cfg.problem, grid, 1.0)? {
        Built::Affine(a) => a,
        Built::Prescribed(_) => return Err(src.error_at("problem", "the affine sweep needs kind = \"affine\"")),
    };
    let mut report = Report::new("affine", cfg.sweep.minimize.seed, to_value(&cfg));
    let mut series = Vec::new();
    let mut timings = Timings::default();
    timings.time("affine", None, || guarded(&mut report, &mut series, |r, s| affine_body(&base, &cfg, r, s)));
    report.finish(strict);
    Ok(Outcome { report, series, timings })
}

/// Checks derived from a sweep report; shared with the acceptance suite.
pub fn taf_checks(rep: &TafReport, prefix: &str, checks: &mut Vec<Check>, warnings: &mut Vec<String>) {
    checks.push(Check::holds(format!("{prefix}sign_pattern_at_smallest_lambda"), rep.sign_pattern));
    checks.push(Check::holds(format!("{prefix}level_ordering"), rep.ordering));
    for row in &rep.rows {
        if let Some(e) = &row.error {
            warnings.push(format!("{prefix}lambda {:e}: {e}", row.lambda));
        }
        if row.converged.iter().any(|c| !c) && row.error.is_none() {
            warnings.push(format!("{prefix}lambda {:e}: a branch solve did not converge", row.lambda));
        }
        if row.positive_u == Some(false) || row.positive_v == Some(false) {
            warnings.push(format!("{prefix}lambda {:e}: a minimizer is not sign-definite", row.lambda));
        }
    }
    match &rep.lambda_bar {
        Some(b) => checks.push(Check::at_most(format!("{prefix}lambda_bar_relative_width"), b.relative_width, 1e-3)),
        None => warnings.push(format!("{prefix}no sign change of the minus-branch level in the sweep")),
    }
    if let Some(s) = &rep.slope {
        checks.push(Check::at_least(format!("{prefix}norm_slope"), s.slope, s.threshold));
        checks.push(Check::at_least(format!("{prefix}norm_slope_lambda_span"), s.lambda_span, 10.0 * (1.0 - 1e-9)));
    }
}

fn affine_body(base: &AffineProblem, cfg: &AffineConfig, report: &mut Report, series: &mut Vec<Series>) -> Result<(), Numerical> {
    let rep = theorem_taf_checks(base, &cfg.sweep)?;
    taf_checks(&rep, "", &mut report.checks, &mut report.warnings);
    let first = rep.rows.first().map(|r| r.lambda).ok_or("empty sweep")?;
    let exec = cfg.sweep.minimize.execution;
    let gaps = affine_gap_checks(&base.with_lambda(first)?, cfg.gap_samples, cfg.sweep.minimize.seed, exec)?;
    report.checks.push(Check::at_most("gap.missing_roots", gaps.missing_roots as f64, 0.0));
    report.checks.push(Check::above("gap.i_lambda", gaps.i_lambda, 0.0));
    report.checks.push(Check::above("gap.delta", gaps.delta, 0.0));

    let nan = f64::NAN;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut s = Series::new(
        "affine_sweep",
        &["lambda", "lambda_estimate", "phi_u", "phi_v", "norm_u", "phi_v_positive", "in_lambda_bar_bracket"],
    );
    s.rows = rep
        .rows
        .iter()
        .map(|r| {
            let bracket = rep.lambda_bar.as_ref().is_some_and(|b| {
                let lo_row = rep.rows.iter().rev().find(|x| x.lambda <= b.lo).map(|x| x.lambda);
                let hi_row = rep.rows.iter().find(|x| x.lambda >= b.hi).map(|x| x.lambda);
                Some(r.lambda) == lo_row || Some(r.lambda) == hi_row
            });
            vec![
                r.lambda,
                rep.estimate.best(),
                r.phi_u.unwrap_or(nan),
                r.phi_v.unwrap_or(nan),
                r.norm_u.unwrap_or(nan),
                r.phi_v.map_or(nan, |v| flag(v > 0.0)),
                flag(bracket),
            ]
        })
        .collect();
    series.push(s);
    report.results = json!({"sweep": rep, "gaps": gaps});
    Ok(())
}

/// Unit-sphere directions in the leading-exponent norm of a prescribed problem.
pub(crate) fn sphere_directions(
    prob: &PrescribedProblem,
    n: usize,
    seed: u64,
    exec: nehari_core::Execution,
) -> Result<Vec<Vec<f64>>, Numerical> {
    let sphere = Sphere::new(prob.grid(), prob.leading_exponent())?;
    Ok(nehari_core::nehari::sample_directions(&sphere, n, seed, true, exec))
}
