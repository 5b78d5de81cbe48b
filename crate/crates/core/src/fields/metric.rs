use super::{ops::dot, Grid};

/// The discrete Dirichlet form `⟨u, v⟩ = ∫ ∇u·∇v` (the stiffness matrix of
/// the `p = 2` energy) together with its banded Cholesky factor.
///
/// Used as the Sobolev metric for sphere-constrained descent and to measure
/// gradients in the dual norm `‖g‖_* = sqrt(gᵀ K⁻¹ g)`, which does not grow
/// with mesh refinement the way nodal Euclidean norms do.
#[derive(Clone, Debug)]
pub struct DirichletMetric {
    grid: Grid,
    bandwidth: usize,
    /// Lower band of K, row-major, `bandwidth + 1` entries per row; entry
    /// `k` of row `i` is `K(i, i - bandwidth + k)`.
    band: Vec<f64>,
    chol: Vec<f64>,
}

impl DirichletMetric {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let (bw, neighbours) = if grid.dim() == 1 {
            let h = grid.h(0);
            (1, vec![(1, 1.0 / h)])
        } else {
            let (hx, hy) = (grid.h(0), grid.h(1));
            (grid.n()[0], vec![(1, hy / hx), (grid.n()[0], hx / hy)])
        };
        let width = bw + 1;
        let mut band = vec![0.0; n * width];
        let nx = grid.n()[0];
        for i in 0..n {
            let mut diag = 0.0;
            for &(offset, coef) in &neighbours {
                diag += 2.0 * coef;
                if i >= offset {
                    // Horizontal neighbours do not wrap across rows in 2-D.
                    let wraps = grid.dim() == 2 && offset == 1 && i % nx == 0;
                    if !wraps {
                        band[i * width + bw - offset] = -coef;
                    }
                }
            }
            band[i * width + bw] = diag;
        }
        let chol = cholesky_banded(&band, n, bw);
        Self { grid: *grid, bandwidth: bw, band, chol }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let bw = self.bandwidth;
        let width = bw + 1;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = &self.band[i * width..(i + 1) * width];
            out[i] += row[bw] * u[i];
            for (k, &a) in row[..bw].iter().enumerate() {
                if a == 0.0 || i + k < bw {
                    continue;
                }
                let j = i + k - bw;
                out[i] += a * u[j];
                out[j] += a * u[i];
            }
        }
        out
    }

    /// `K⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let bw = self.bandwidth;
        let width = bw + 1;
        let l = &self.chol;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                s -= l[i * width + bw + j - i] * y[j];
            }
            y[i] = s / l[i * width + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            let j1 = (i + bw).min(n - 1);
            for j in i + 1..=j1 {
                s -= l[j * width + bw + i - j] * y[j];
            }
            y[i] = s / l[i * width + bw];
        }
        y
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.apply(b))
    }

    /// `sqrt(∫|∇u|²)`.
    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Dual norm of a nodal gradient (covector).
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        dot(g, &self.solve(g)).max(0.0).sqrt()
    }
}

fn cholesky_banded(band: &[f64], n: usize, bw: usize) -> Vec<f64> {
    let width = bw + 1;
    let mut l = vec![0.0; n * width];
    for i in 0..n {
        let j0 = i.saturating_sub(bw);
        for j in j0..=i {
            let mut s = band[i * width + bw + j - i];
            let k0 = j0.max(j.saturating_sub(bw));
            for k in k0..j {
                s -= l[i * width + bw + k - i] * l[j * width + bw + k - j];
            }
            if i == j {
                debug_assert!(s > 0.0, "stiffness matrix must be positive definite");
                l[i * width + bw] = s.sqrt();
            } else {
                l[i * width + bw + j - i] = s / l[j * width + bw];
            }
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::energy_gradient_p_slice;

    fn field(n: usize, seed: u64) -> Vec<f64> {
        (0..n).map(|k| (((k as u64 * 7919 + seed * 104729) % 1000) as f64 / 500.0) - 1.0).collect()
    }

    #[test]
    fn apply_matches_p2_energy_gradient() {
        for g in [Grid::new_1d(9, 1.3).unwrap(), Grid::new_2d(6, 5, 1.0, 0.6).unwrap()] {
            let m = DirichletMetric::new(&g);
            let u = field(g.len(), 3);
            let a = m.apply(&u);
            let b = energy_gradient_p_slice(&g, &u, 2.0).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn solve_inverts_apply() {
        for g in [Grid::unit_1d(31).unwrap(), Grid::new_2d(7, 9, 2.0, 1.0).unwrap()] {
            let m = DirichletMetric::new(&g);
            let b = field(g.len(), 11);
            let x = m.solve(&b);
            let back = m.apply(&x);
            for (p, q) in back.iter().zip(&b) {
                assert!((p - q).abs() < 1e-10);
            }
            let dn = m.dual_norm(&b);
            assert!(dn > 0.0 && (dn * dn - dot(&b, &x)).abs() < 1e-12 * dn * dn);
        }
    }
}
