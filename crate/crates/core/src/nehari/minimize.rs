use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Execution};
use crate::fields::ops::dot;

use super::{
    branch::{branch_state, branch_value, to_point, BranchState},
    diagnostics::random_direction,
    Branch, BranchLevel, NehariError, RayScanOptions, Sphere, TangentVector, VariationalProblem,
};

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACK: usize = 60;
const STEP_RANGE: (f64, f64) = (1e-12, 1e12);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub starts: usize,
    pub max_iter: usize,
    /// Target for the metric norm of the Riemannian gradient.
    pub tol: f64,
    /// Measure `tol` against `max(1, |Ψ|, largest term of Φ(tv))` instead of
    /// absolutely.
    pub relative_tol: bool,
    pub seed: u64,
    /// Relative root tolerance along rays.
    pub ray_tol: f64,
    /// Smooth random starts with one inverse Dirichlet solve.
    pub smoothing: bool,
    /// Use the normalized torsion function as the first random-free start.
    pub torsion_start: bool,
    /// Redraws allowed per start when the branch is unavailable.
    pub max_resample: usize,
    pub execution: Execution,
    pub record_history: bool,
    /// Caller-supplied starts, used before the torsion and random ones.
    #[serde(skip)]
    pub initial_directions: Vec<Vec<f64>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            starts: 4,
            max_iter: 2000,
            tol: 1e-6,
            relative_tol: false,
            seed: 0,
            ray_tol: 1e-9,
            smoothing: true,
            torsion_start: true,
            max_resample: 64,
            execution: Execution::default(),
            record_history: false,
            initial_directions: Vec::new(),
        }
    }
}

impl MinimizeOptions {
    pub fn scan(&self) -> RayScanOptions {
        RayScanOptions { tol: self.ray_tol, ..RayScanOptions::default() }
    }
}

struct StartOutcome {
    v: Vec<f64>,
    state: BranchState,
    iterations: usize,
    tangent_residual: f64,
    converged: bool,
    resampled: usize,
    history: Vec<f64>,
}

/// Multi-start projected-gradient descent of `Ψ±` on the unit sphere.
///
/// Each start owns a ChaCha stream keyed by `(seed, start index)`, so the
/// result does not depend on how starts are scheduled.
pub fn minimize_branch<P: VariationalProblem + ?Sized>(
    prob: &P,
    branch: Branch,
    opts: &MinimizeOptions,
) -> Result<BranchLevel, NehariError> {
    if opts.starts == 0 {
        return Err(NehariError::InvalidOptions("at least one start is required".into()));
    }
    if !(opts.tol > 0.0 && opts.ray_tol > 0.0) {
        return Err(NehariError::InvalidOptions("tolerances must be positive".into()));
    }
    let sphere = Sphere::new(prob.grid(), prob.sphere_exponent())?;
    let outcomes = map_indexed(opts.execution, opts.starts, |i| run_start(prob, &sphere, branch, opts, i));

    let mut best: Option<(usize, &StartOutcome)> = None;
    let mut resampled = 0;
    let mut start_levels = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            Ok(o) => {
                resampled += o.resampled;
                start_levels.push(Some(o.state.value));
                if best.is_none_or(|(_, b)| o.state.value < b.state.value) {
                    best = Some((i, o));
                }
            }
            Err(_) => {
                resampled += opts.max_resample + 1;
                start_levels.push(None);
            }
        }
    }
    let Some((best_start, b)) = best else {
        return Err(NehariError::InfeasibleBranch { branch, attempts: opts.starts * (opts.max_resample + 1) });
    };
    let minimizer = to_point(&sphere, &b.v, branch, &b.state);
    Ok(BranchLevel {
        branch,
        level: minimizer.value,
        minimizer,
        iterations: b.iterations,
        tangent_residual: b.tangent_residual,
        converged: b.converged,
        best_start,
        start_levels,
        resampled,
        history: b.history.clone(),
    })
}

fn start_direction(
    sphere: &Sphere,
    opts: &MinimizeOptions,
    index: usize,
    rng: &mut ChaCha8Rng,
    attempt: usize,
) -> Option<Vec<f64>> {
    if attempt == 0 {
        if let Some(v) = opts.initial_directions.get(index) {
            return sphere.normalize(v);
        }
        if opts.torsion_start && index == opts.initial_directions.len() {
            let ones = vec![1.0; sphere.grid().len()];
            return sphere.normalize(&sphere.metric().solve(&ones));
        }
    }
    random_direction(sphere, rng, opts.smoothing)
}

fn run_start<P: VariationalProblem + ?Sized>(
    prob: &P,
    sphere: &Sphere,
    branch: Branch,
    opts: &MinimizeOptions,
    index: usize,
) -> Result<StartOutcome, NehariError> {
    let scan = opts.scan();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let mut last_err = None;
    for attempt in 0..=opts.max_resample {
        let Some(v) = start_direction(sphere, opts, index, &mut rng, attempt) else { continue };
        match branch_state(prob, &v, branch, &scan) {
            Ok(state) => {
                let mut out = descend(prob, sphere, branch, opts, &scan, v, state)?;
                out.resampled = attempt;
                return Ok(out);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(NehariError::InfeasibleBranch { branch, attempts: opts.max_resample + 1 }))
}

fn descend<P: VariationalProblem + ?Sized>(
    prob: &P,
    sphere: &Sphere,
    branch: Branch,
    opts: &MinimizeOptions,
    scan: &RayScanOptions,
    mut v: Vec<f64>,
    mut state: BranchState,
) -> Result<StartOutcome, NehariError> {
    let mut tangent = sphere.tangent_gradient(&v, &state.covector);
    let mut step = 1.0;
    let mut history = if opts.record_history { vec![state.value] } else { Vec::new() };
    let mut iterations = 0;
    while iterations < opts.max_iter && !done(&tangent, &state, opts) {
        let slope = tangent.norm * tangent.norm;
        let mut s = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            if let Some(w) = sphere.retract(&v, s, &tangent.direction) {
                if let Ok((_, value, _)) = branch_value(prob, &w, branch, scan) {
                    if value <= state.value - ARMIJO * s * slope {
                        accepted = Some(w);
                        break;
                    }
                }
            }
            s *= SHRINK;
        }
        let Some(w) = accepted else { break };
        let new_state = branch_state(prob, &w, branch, scan)?;
        let new_tangent = sphere.tangent_gradient(&w, &new_state.covector);
        step = next_step(sphere, &v, &w, &tangent, &new_tangent, s);
        v = w;
        state = new_state;
        tangent = new_tangent;
        iterations += 1;
        if opts.record_history {
            history.push(state.value);
        }
    }
    Ok(StartOutcome {
        converged: done(&tangent, &state, opts),
        tangent_residual: tangent.norm,
        v,
        state,
        iterations,
        resampled: 0,
        history,
    })
}

/// Both the reduced gradient and the gradient of `Φ` at `t·v` (which is the
/// former divided by `t`) must be below the tolerance.
fn done(tangent: &TangentVector, state: &BranchState, opts: &MinimizeOptions) -> bool {
    let tol = if opts.relative_tol { opts.tol * state.value.abs().max(state.magnitude).max(1.0) } else { opts.tol };
    tangent.norm * (1.0f64).max(1.0 / state.t) <= tol
}

/// Barzilai–Borwein estimate in the Dirichlet metric, falling back to
/// doubling the accepted step when the curvature estimate is not positive.
fn next_step(sphere: &Sphere, v: &[f64], w: &[f64], old: &TangentVector, new: &TangentVector, accepted: f64) -> f64 {
    let sk: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - b).collect();
    let yk: Vec<f64> = new.covector.iter().zip(&old.covector).map(|(a, b)| a - b).collect();
    let sy = dot(&sk, &yk);
    let ss = sphere.metric().inner(&sk, &sk);
    let step = if sy > 0.0 && ss > 0.0 { ss / sy } else { 2.0 * accepted };
    step.clamp(STEP_RANGE.0, STEP_RANGE.1)
}
