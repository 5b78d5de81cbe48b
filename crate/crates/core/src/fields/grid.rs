use serde::{Deserialize, Serialize};

use super::FieldError;

/// Uniform tensor-product grid on `(0, Lx)` or `(0, Lx) × (0, Ly)` with
/// homogeneous Dirichlet boundary values.
///
/// Unknowns live on interior nodes; node `(i, j)` (0-based, interior) has
/// flat index `i + nx * j`. Gradients are constant per cell: segments in 1-D,
/// and in 2-D each grid square split along its anti-diagonal into a lower and
/// an upper triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    lengths: [f64; 2],
}

pub const MIN_INTERIOR_NODES: usize = 3;

impl Grid {
    pub fn new_1d(n: usize, length: f64) -> Result<Self, FieldError> {
        Self::new(1, [n, 1], [length, 1.0])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, FieldError> {
        Self::new(2, [nx, ny], [lx, ly])
    }

    pub fn unit_1d(n: usize) -> Result<Self, FieldError> {
        Self::new_1d(n, 1.0)
    }

    pub fn unit_2d(n: usize) -> Result<Self, FieldError> {
        Self::new_2d(n, n, 1.0, 1.0)
    }

    pub fn new(dim: usize, n: [usize; 2], lengths: [f64; 2]) -> Result<Self, FieldError> {
        if dim != 1 && dim != 2 {
            return Err(FieldError::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        for axis in 0..dim {
            if n[axis] < MIN_INTERIOR_NODES {
                return Err(FieldError::InvalidGrid(format!(
                    "axis {axis} needs at least {MIN_INTERIOR_NODES} interior nodes, got {}",
                    n[axis]
                )));
            }
            if !(lengths[axis] > 0.0 && lengths[axis].is_finite()) {
                return Err(FieldError::InvalidGrid(format!("axis {axis} length must be positive, got {}", lengths[axis])));
            }
        }
        let (n, lengths) = if dim == 1 { ([n[0], 1], [lengths[0], 1.0]) } else { (n, lengths) };
        Ok(Self { dim, n, lengths })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> [usize; 2] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 2] {
        self.lengths
    }

    /// Number of interior nodes (unknowns).
    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.n[0]
        } else {
            self.n[0] * self.n[1]
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.n[axis] + 1) as f64
    }

    /// Quadrature weight of an interior node.
    pub fn node_volume(&self) -> f64 {
        if self.dim == 1 {
            self.h(0)
        } else {
            self.h(0) * self.h(1)
        }
    }

    pub fn measure(&self) -> f64 {
        if self.dim == 1 {
            self.lengths[0]
        } else {
            self.lengths[0] * self.lengths[1]
        }
    }

    pub fn cell_count(&self) -> usize {
        if self.dim == 1 {
            self.n[0] + 1
        } else {
            2 * (self.n[0] + 1) * (self.n[1] + 1)
        }
    }

    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.h(0)
        } else {
            0.5 * self.h(0) * self.h(1)
        }
    }

    /// Physical coordinates of interior node `idx`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [(idx + 1) as f64 * self.h(0), 0.0]
        } else {
            let (i, j) = (idx % self.n[0], idx / self.n[0]);
            [(i + 1) as f64 * self.h(0), (j + 1) as f64 * self.h(1)]
        }
    }

    /// Samples `f` at every interior node.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.coords(k))).collect()
    }

    /// Values padded with the zero boundary ring: `(nx+2)` in 1-D,
    /// `(nx+2)(ny+2)` in 2-D.
    fn padded(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.len());
        if self.dim == 1 {
            let mut p = vec![0.0; self.n[0] + 2];
            p[1..=self.n[0]].copy_from_slice(u);
            p
        } else {
            let (nx, ny) = (self.n[0], self.n[1]);
            let w = nx + 2;
            let mut p = vec![0.0; w * (ny + 2)];
            for j in 0..ny {
                p[(j + 1) * w + 1..(j + 1) * w + 1 + nx].copy_from_slice(&u[j * nx..(j + 1) * nx]);
            }
            p
        }
    }

    /// Per-cell gradient vectors of the nodal field `u` (second component is
    /// zero in 1-D). Linear in `u`.
    pub fn cell_gradients(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let p = self.padded(u);
        let hx = self.h(0);
        if self.dim == 1 {
            return (0..=self.n[0]).map(|k| [(p[k + 1] - p[k]) / hx, 0.0]).collect();
        }
        let hy = self.h(1);
        let (nx, ny) = (self.n[0], self.n[1]);
        let w = nx + 2;
        let mut out = Vec::with_capacity(self.cell_count());
        for jj in 0..=ny {
            for ii in 0..=nx {
                let u00 = p[jj * w + ii];
                let u10 = p[jj * w + ii + 1];
                let u01 = p[(jj + 1) * w + ii];
                let u11 = p[(jj + 1) * w + ii + 1];
                out.push([(u10 - u00) / hx, (u01 - u00) / hy]);
                out.push([(u11 - u01) / hx, (u11 - u10) / hy]);
            }
        }
        out
    }

    /// Transpose of [`Grid::cell_gradients`]: maps per-cell covectors to
    /// nodal values, so that `adjoint(w)·v = Σ_cells w·∇v`.
    pub fn cell_gradients_adjoint(&self, w: &[[f64; 2]]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.cell_count());
        let hx = self.h(0);
        if self.dim == 1 {
            let n = self.n[0];
            let mut p = vec![0.0; n + 2];
            for (k, wk) in w.iter().enumerate() {
                p[k + 1] += wk[0] / hx;
                p[k] -= wk[0] / hx;
            }
            return p[1..=n].to_vec();
        }
        let hy = self.h(1);
        let (nx, ny) = (self.n[0], self.n[1]);
        let stride = nx + 2;
        let mut p = vec![0.0; stride * (ny + 2)];
        let mut c = 0;
        for jj in 0..=ny {
            for ii in 0..=nx {
                let (i00, i10, i01, i11) =
                    (jj * stride + ii, jj * stride + ii + 1, (jj + 1) * stride + ii, (jj + 1) * stride + ii + 1);
                let [ax, ay] = w[c];
                p[i10] += ax / hx;
                p[i00] -= ax / hx + ay / hy;
                p[i01] += ay / hy;
                let [bx, by] = w[c + 1];
                p[i11] += bx / hx + by / hy;
                p[i01] -= bx / hx;
                p[i10] -= by / hy;
                c += 2;
            }
        }
        let mut out = Vec::with_capacity(self.len());
        for j in 0..ny {
            out.extend_from_slice(&p[(j + 1) * stride + 1..(j + 1) * stride + 1 + nx]);
        }
        out
    }
}
