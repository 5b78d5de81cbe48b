use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Execution};
use crate::fields::{ops::dirichlet_energy_p_slice, Grid};

use super::AffineError;

const DEGENERATE_RATIO: f64 = 1e-14;

/// Volume of the unit ball in `R^s` for real `s ≥ 0`.
pub fn unit_ball_volume(s: f64) -> f64 {
    PI.powf(0.5 * s) / libm::tgamma(0.5 * s + 1.0)
}

/// `γ_{N,p}` for `N = 2`.
pub fn gamma_2p(p: f64) -> f64 {
    let n = 2.0;
    let w2 = unit_ball_volume(2.0);
    (n * w2 * unit_ball_volume(p - 1.0)) * (n * w2).powf(p / n) / (2.0 * unit_ball_volume(n + p - 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineEnergyConfig {
    p: f64,
    angular_nodes: usize,
    gamma: f64,
    #[serde(default)]
    execution: Execution,
}

impl AffineEnergyConfig {
    pub fn new(p: f64, angular_nodes: usize) -> Result<Self, AffineError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(AffineError::Config(format!("affine energy needs 1 < p < inf, got p = {p}")));
        }
        if angular_nodes < 8 || !angular_nodes.is_multiple_of(2) {
            return Err(AffineError::Config(format!("angular nodes must be even and at least 8, got {angular_nodes}")));
        }
        Ok(Self { p, angular_nodes, gamma: gamma_2p(p), execution: Execution::default() })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn angular_nodes(&self) -> usize {
        self.angular_nodes
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    /// Half-circle nodes; each carries the weight of its antipode too.
    fn directions(&self) -> Vec<[f64; 2]> {
        let m = self.angular_nodes;
        (0..m / 2)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / m as f64;
                [th.cos(), th.sin()]
            })
            .collect()
    }

    fn weight(&self) -> f64 {
        2.0 * (2.0 * PI / self.angular_nodes as f64)
    }
}

#[inline]
fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if e == 1.0 {
        x
    } else {
        x.abs().powf(e) * x.signum()
    }
}

struct Quadrature {
    xi: Vec<[f64; 2]>,
    /// `‖∇_ξ u‖_p^p` per half-circle node.
    d: Vec<f64>,
    /// `Σ_m w_m ‖∇_ξ u‖_p^{−2}`.
    s: f64,
}

fn quadrature(cfg: &AffineEnergyConfig, grid: &Grid, cells: &[[f64; 2]], u: &[f64]) -> Result<Quadrature, AffineError> {
    if grid.dim() != 2 {
        return Err(AffineError::Config("the affine energy is implemented for 2-D grids".into()));
    }
    let p = cfg.p;
    let vol = grid.cell_volume();
    let xi = cfg.directions();
    let d = map_indexed(cfg.execution, xi.len(), |m| {
        let [a, b] = xi[m];
        cells.iter().map(|g| (g[0] * a + g[1] * b).abs().powf(p)).sum::<f64>() * vol
    });
    let reference = dirichlet_energy_p_slice(grid, u, p).powf(1.0 / p);
    if !(reference > 0.0) {
        return Err(AffineError::ZeroField);
    }
    let mut s = 0.0;
    for (m, &dm) in d.iter().enumerate() {
        let norm = dm.powf(1.0 / p);
        if !(norm >= DEGENERATE_RATIO * reference) {
            let angle = 2.0 * PI * m as f64 / cfg.angular_nodes as f64;
            return Err(AffineError::DegenerateDirection { angle, norm, reference });
        }
        s += cfg.weight() * norm.powi(-2);
    }
    Ok(Quadrature { xi, d, s })
}

/// `γ (∫_{S¹} ‖∇_ξ u‖_p^{−2} dσ)^{−1/2}` with trapezoidal angular quadrature.
pub fn affine_energy(cfg: &AffineEnergyConfig, grid: &Grid, u: &[f64]) -> Result<f64, AffineError> {
    let cells = grid.cell_gradients(u);
    let q = quadrature(cfg, grid, &cells, u)?;
    Ok(cfg.gamma * q.s.powf(-0.5))
}

/// Nodal gradient of `(1/p) E^p`.
pub fn affine_energy_gradient(cfg: &AffineEnergyConfig, grid: &Grid, u: &[f64]) -> Result<Vec<f64>, AffineError> {
    Ok(energy_and_gradient(cfg, grid, u)?.1)
}

/// `(E^p, ∇(1/p)E^p)` sharing one quadrature pass.
pub fn energy_and_gradient(cfg: &AffineEnergyConfig, grid: &Grid, u: &[f64]) -> Result<(f64, Vec<f64>), AffineError> {
    let p = cfg.p;
    let cells = grid.cell_gradients(u);
    let q = quadrature(cfg, grid, &cells, u)?;
    let outer = cfg.gamma.powf(p) * q.s.powf(-0.5 * p - 1.0);
    let vol = grid.cell_volume();
    let coef: Vec<f64> = q.d.iter().map(|&dm| outer * cfg.weight() * dm.powf(-2.0 / p - 1.0) * vol).collect();
    let w = map_indexed(cfg.execution, cells.len(), |c| {
        let g = cells[c];
        let mut acc = [0.0; 2];
        for (xi, k) in q.xi.iter().zip(&coef) {
            let s = k * signed_pow(g[0] * xi[0] + g[1] * xi[1], p - 1.0);
            acc[0] += s * xi[0];
            acc[1] += s * xi[1];
        }
        acc
    });
    let ep = cfg.gamma.powf(p) * q.s.powf(-0.5 * p);
    Ok((ep, grid.cell_gradients_adjoint(&w)))
}
