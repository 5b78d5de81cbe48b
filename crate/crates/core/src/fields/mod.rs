//! Uniform Dirichlet grids, nodal fields, difference stencils, and the
//! energy/norm evaluators every application module builds on.

mod grid;
pub mod io;
mod metric;
pub mod ops;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{Grid, MIN_INTERIOR_NODES};
pub use metric::DirichletMetric;
pub use ops::{composite_integral, dirichlet_energy_p, energy_gradient_p, gradient, lp_norm_pow};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values but the grid has {expected} interior nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {index}")]
    NonFiniteField { index: usize },
    #[error("integrand is not finite at node {index} (u = {value})")]
    NonFinite { index: usize, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed field file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Nodal values on the interior nodes of a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    grid: Grid,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFiniteField { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: Grid, f: F) -> Result<Self, FieldError> {
        Self::new(grid, grid.sample(f))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| t * v).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Cellwise-constant gradient of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub grid: Grid,
    pub cells: Vec<[f64; 2]>,
}
