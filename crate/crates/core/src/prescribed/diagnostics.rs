use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Execution};
use crate::fields::ops::lp_norm_pow_slice;
use crate::nehari::{sample_directions, Branch, RayScanOptions, Sphere};

use super::functionals::LambdaC;
use super::h::{h_ray, roots_of_h, HGroundLevel};
use super::model::PrescribedProblem;
use super::solve::{solve_prescribed, PrescribedOptions};
use super::PrescribedError;

const FLOOR_POINTS: usize = 33;

/// Per-direction quantities behind the gap estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayGaps {
    pub s: f64,
    pub t_plus: f64,
    pub t_minus: f64,
    /// `s(v) − t_c⁺(v)`.
    pub s_gap: f64,
    /// `λ_c(s(v)v) − λ_c(t_c⁺(v)v)`.
    pub lambda_gap: f64,
    /// `min d/dt H(tv)` over `[t_c⁺, t_c⁺ + ε]` with `ε = (s − t_c⁺)/3`.
    pub derivative_floor: f64,
    /// `∫|t_c⁻ v|^α`.
    pub minus_mass: f64,
}

pub fn ray_gaps(prob: &PrescribedProblem, v: &[f64], c: f64, scan: &RayScanOptions) -> Result<Option<RayGaps>, PrescribedError> {
    let prof = roots_of_h(prob, v, c, scan)?;
    let Some((t_plus, t_minus)) = prof.roots else { return Ok(None) };
    let s = prof.s;
    let lc = LambdaC { problem: prob, c };
    let scaled = |t: f64| v.iter().map(|x| t * x).collect::<Vec<f64>>();
    let lambda_gap = lc.eval(&scaled(s))? - lc.eval(&scaled(t_plus))?;
    let eps = (s - t_plus) / 3.0;
    let mut derivative_floor = f64::INFINITY;
    for k in 0..FLOOR_POINTS {
        let t = t_plus + eps * k as f64 / (FLOOR_POINTS - 1) as f64;
        derivative_floor = derivative_floor.min(h_ray(prob, v, t)?.1);
    }
    let minus_mass = lp_norm_pow_slice(prob.grid(), &scaled(t_minus), prob.alpha());
    Ok(Some(RayGaps { s, t_plus, t_minus, s_gap: s - t_plus, lambda_gap, derivative_floor, minus_mass }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub c: f64,
    pub samples: usize,
    pub rootless: usize,
    pub min_s_gap: f64,
    pub min_lambda_gap: f64,
    pub min_derivative_floor: f64,
    /// `sup ‖t_c⁺(v)v‖` over the samples.
    pub sup_plus_norm: f64,
    /// `min ∫|t_c⁻(v)v|^α` over the samples.
    pub min_minus_mass: f64,
}

impl GapReport {
    pub fn all_positive(&self) -> bool {
        self.rootless == 0 && self.min_s_gap > 0.0 && self.min_lambda_gap > 0.0 && self.min_derivative_floor > 0.0
    }
}

pub fn gap_diagnostics(
    prob: &PrescribedProblem,
    c: f64,
    samples: usize,
    seed: u64,
    exec: Execution,
    scan: &RayScanOptions,
) -> Result<GapReport, PrescribedError> {
    let sphere = Sphere::new(prob.grid(), prob.leading_exponent())?;
    let dirs = sample_directions(&sphere, samples, seed, true, exec);
    let rows = map_indexed(exec, dirs.len(), |k| ray_gaps(prob, &dirs[k], c, scan));
    let mut r = GapReport {
        c,
        samples,
        rootless: 0,
        min_s_gap: f64::INFINITY,
        min_lambda_gap: f64::INFINITY,
        min_derivative_floor: f64::INFINITY,
        sup_plus_norm: 0.0,
        min_minus_mass: f64::INFINITY,
    };
    for row in rows {
        match row? {
            None => r.rootless += 1,
            Some(g) => {
                r.min_s_gap = r.min_s_gap.min(g.s_gap);
                r.min_lambda_gap = r.min_lambda_gap.min(g.lambda_gap);
                r.min_derivative_floor = r.min_derivative_floor.min(g.derivative_floor);
                r.sup_plus_norm = r.sup_plus_norm.max(g.t_plus);
                r.min_minus_mass = r.min_minus_mass.min(g.minus_mass);
            }
        }
    }
    Ok(r)
}

/// How many of the given directions admit two roots of `H(tv) = −αc`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub c: f64,
    pub target: f64,
    pub directions: usize,
    pub two_roots: usize,
    pub rootless: usize,
    pub degenerate: usize,
    pub min_h_max: f64,
}

impl RegimeReport {
    pub fn all_two_roots(&self) -> bool {
        self.two_roots == self.directions
    }
}

pub fn two_root_regime(
    prob: &PrescribedProblem,
    c: f64,
    directions: &[Vec<f64>],
    exec: Execution,
    scan: &RayScanOptions,
) -> Result<RegimeReport, PrescribedError> {
    let rows = map_indexed(exec, directions.len(), |k| roots_of_h(prob, &directions[k], c, scan));
    let mut r = RegimeReport {
        c,
        target: -prob.alpha() * c,
        directions: directions.len(),
        two_roots: 0,
        rootless: 0,
        degenerate: 0,
        min_h_max: f64::INFINITY,
    };
    for row in rows {
        match row {
            Ok(p) => {
                r.min_h_max = r.min_h_max.min(p.h_max);
                if p.roots.is_some() {
                    r.two_roots += 1;
                } else {
                    r.rootless += 1;
                }
            }
            Err(PrescribedError::DegenerateLevel { h_max, .. }) => {
                r.min_h_max = r.min_h_max.min(h_max);
                r.degenerate += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRow {
    pub frequency: u32,
    pub plus_norm: f64,
    pub plus_lambda: f64,
    pub minus_norm: f64,
    pub minus_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub c: f64,
    pub rows: Vec<CoercivityRow>,
    /// `λ_c` increases over the last two frequency doublings on both branches.
    pub increasing_tail: bool,
}

/// Follows the Nehari points of `λ_c` along `sin(2^k πx)` directions
/// (tensor products in 2-D), which converge weakly to zero.
pub fn coercivity_probe(
    prob: &PrescribedProblem,
    c: f64,
    doublings: u32,
    scan: &RayScanOptions,
) -> Result<CoercivityReport, PrescribedError> {
    let grid = prob.grid();
    let sphere = Sphere::new(grid, prob.leading_exponent())?;
    let lc = LambdaC { problem: prob, c };
    let [lx, ly] = grid.lengths();
    let dim = grid.dim();
    let mut rows = Vec::new();
    for k in 0..=doublings {
        let w = (1u64 << k) as f64 * std::f64::consts::PI;
        let raw = grid.sample(|x| {
            let a = (w * x[0] / lx).sin();
            if dim == 2 {
                a * (w * x[1] / ly).sin()
            } else {
                a
            }
        });
        let Some(v) = sphere.normalize(&raw) else { break };
        let prof = roots_of_h(prob, &v, c, scan)?;
        let Some((tp, tm)) = prof.roots else {
            return Err(PrescribedError::Bracket(format!("direction sin(2^{k} pi x) admits no Nehari points")));
        };
        let at = |t: f64| lc.eval(&v.iter().map(|x| t * x).collect::<Vec<_>>());
        rows.push(CoercivityRow {
            frequency: 1 << k,
            plus_norm: tp,
            plus_lambda: at(tp)?,
            minus_norm: tm,
            minus_lambda: at(tm)?,
        });
    }
    let n = rows.len();
    let increasing_tail = n >= 3
        && rows[n - 3].plus_lambda < rows[n - 2].plus_lambda
        && rows[n - 2].plus_lambda < rows[n - 1].plus_lambda
        && rows[n - 3].minus_lambda < rows[n - 2].minus_lambda
        && rows[n - 2].minus_lambda < rows[n - 1].minus_lambda;
    Ok(CoercivityReport { c, rows, increasing_tail })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub c: f64,
    pub h0: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub phi_residual_plus: f64,
    pub phi_residual_minus: f64,
    pub residual_bound_plus: f64,
    pub residual_bound_minus: f64,
    pub energy_error_plus: f64,
    pub energy_error_minus: f64,
    pub certified: bool,
    pub gaps: GapReport,
}

/// `c_k = −h₀ 2^{−k}/α` for each `k`: both branch levels and the gap report.
pub fn c_sweep(
    prob: &PrescribedProblem,
    ground: &HGroundLevel,
    ks: &[u32],
    samples: usize,
    opts: &PrescribedOptions,
) -> Result<Vec<SweepRow>, PrescribedError> {
    let exec = opts.minimize.execution;
    let scan = opts.minimize.scan();
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let c = -ground.h0 * 0.5f64.powi(k as i32) / prob.alpha();
        let plus = solve_prescribed(prob, c, ground, Branch::Plus, opts)?;
        let minus = solve_prescribed(prob, c, ground, Branch::Minus, opts)?;
        let gaps = gap_diagnostics(prob, c, samples, opts.minimize.seed, exec, &scan)?;
        rows.push(SweepRow {
            k,
            c,
            h0: ground.h0,
            lambda_plus: plus.lambda_star,
            lambda_minus: minus.lambda_star,
            phi_residual_plus: plus.phi_residual,
            phi_residual_minus: minus.phi_residual,
            residual_bound_plus: plus.residual_bound,
            residual_bound_minus: minus.residual_bound,
            energy_error_plus: plus.energy_error,
            energy_error_minus: minus.energy_error,
            certified: plus.certified && minus.certified,
            gaps,
        });
    }
    Ok(rows)
}
