//! Energy and norm evaluators on nodal fields, with their nodal gradients.
//!
//! Slice-level functions take `(&Grid, &[f64])` and are what the solvers call
//! in inner loops; the [`DiscreteField`] wrappers are the public surface.

use super::{DiscreteField, FieldError, GradientField, Grid};

#[inline]
fn norm_pow(g: [f64; 2], p: f64) -> f64 {
    let sq = g[0] * g[0] + g[1] * g[1];
    if sq == 0.0 {
        0.0
    } else if p == 2.0 {
        sq
    } else {
        sq.powf(0.5 * p)
    }
}

/// `∫ |∇u|^p` by exact integration of the cellwise-constant gradient.
pub fn dirichlet_energy_p_slice(grid: &Grid, u: &[f64], p: f64) -> f64 {
    let vol = grid.cell_volume();
    grid.cell_gradients(u).into_iter().map(|g| norm_pow(g, p)).sum::<f64>() * vol
}

/// Nodal gradient of `(1/p) ∫ |∇u|^p`, i.e. the discrete p-Laplacian in weak form.
pub fn energy_gradient_p_slice(grid: &Grid, u: &[f64], p: f64) -> Result<Vec<f64>, FieldError> {
    if !(p > 1.0) {
        return Err(FieldError::Domain(format!("energy gradient needs p > 1, got {p}")));
    }
    let vol = grid.cell_volume();
    let w: Vec<[f64; 2]> = grid
        .cell_gradients(u)
        .into_iter()
        .map(|g| {
            let sq = g[0] * g[0] + g[1] * g[1];
            if sq == 0.0 {
                [0.0, 0.0]
            } else {
                let s = if p == 2.0 { 1.0 } else { sq.powf(0.5 * (p - 2.0)) } * vol;
                [s * g[0], s * g[1]]
            }
        })
        .collect();
    Ok(grid.cell_gradients_adjoint(&w))
}

/// `‖u‖_s^s` by nodal quadrature.
pub fn lp_norm_pow_slice(grid: &Grid, u: &[f64], s: f64) -> f64 {
    let sum: f64 = if s == 2.0 { u.iter().map(|x| x * x).sum() } else { u.iter().map(|x| x.abs().powf(s)).sum() };
    sum * grid.node_volume()
}

/// Nodal gradient of `‖u‖_s^s`: `s |u|^{s−2} u` times the node weight.
pub fn lp_norm_pow_gradient_slice(grid: &Grid, u: &[f64], s: f64) -> Vec<f64> {
    let w = grid.node_volume();
    u.iter().map(|&x| if x == 0.0 { 0.0 } else { s * x.abs().powf(s - 1.0) * x.signum() * w }).collect()
}

/// `∫ g(u)`: nodal weights on interior nodes plus `g(0)` times the
/// boundary share of the measure (trapezoidal rule on the closed grid).
pub fn composite_integral_slice<G: Fn(f64) -> f64>(grid: &Grid, u: &[f64], g: G) -> Result<f64, FieldError> {
    let mut sum = 0.0;
    for (k, &x) in u.iter().enumerate() {
        let v = g(x);
        if !v.is_finite() {
            return Err(FieldError::NonFinite { index: k, value: x });
        }
        sum += v;
    }
    let g0 = g(0.0);
    if !g0.is_finite() {
        return Err(FieldError::NonFinite { index: usize::MAX, value: 0.0 });
    }
    let interior = sum * grid.node_volume();
    let boundary_share = grid.measure() - u.len() as f64 * grid.node_volume();
    Ok(if g0 == 0.0 { interior } else { interior + g0 * boundary_share })
}

/// Nodal gradient of `∫ g(u)` given `g'`.
pub fn composite_gradient_slice<G: Fn(f64) -> f64>(grid: &Grid, u: &[f64], g_prime: G) -> Vec<f64> {
    let w = grid.node_volume();
    u.iter().map(|&x| g_prime(x) * w).collect()
}

pub fn gradient(u: &DiscreteField) -> GradientField {
    GradientField { grid: *u.grid(), cells: u.grid().cell_gradients(u.values()) }
}

pub fn dirichlet_energy_p(u: &DiscreteField, p: f64) -> Result<f64, FieldError> {
    if !(p >= 1.0) {
        return Err(FieldError::Domain(format!("dirichlet energy needs p >= 1, got {p}")));
    }
    Ok(dirichlet_energy_p_slice(u.grid(), u.values(), p))
}

pub fn lp_norm_pow(u: &DiscreteField, s: f64) -> Result<f64, FieldError> {
    if !(s >= 1.0) {
        return Err(FieldError::Domain(format!("Lebesgue exponent must be >= 1, got {s}")));
    }
    Ok(lp_norm_pow_slice(u.grid(), u.values(), s))
}

pub fn composite_integral<G: Fn(f64) -> f64>(u: &DiscreteField, g: G) -> Result<f64, FieldError> {
    composite_integral_slice(u.grid(), u.values(), g)
}

pub fn energy_gradient_p(u: &DiscreteField, p: f64) -> Result<DiscreteField, FieldError> {
    let g = energy_gradient_p_slice(u.grid(), u.values(), p)?;
    DiscreteField::new(*u.grid(), g)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_1d(n: usize) -> DiscreteField {
        let g = Grid::unit_1d(n).unwrap();
        let v = g.sample(|x| (PI * x[0]).sin());
        DiscreteField::new(g, v).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_field_has_zero_energies() {
        let g = Grid::unit_2d(5).unwrap();
        let z = DiscreteField::zeros(g);
        assert_eq!(dirichlet_energy_p(&z, 2.0).unwrap(), 0.0);
        assert_eq!(lp_norm_pow(&z, 3.0).unwrap(), 0.0);
        assert!(gradient(&z).cells.iter().all(|c| c == &[0.0, 0.0]));
        assert!(energy_gradient_p(&z, 2.0).unwrap().values().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn sine_integral_identities() {
        let u = sine_1d(127);
        assert!(rel(dirichlet_energy_p(&u, 2.0).unwrap(), PI * PI / 2.0) < 1e-3);
        let grad_sum: f64 = gradient(&u).cells.iter().map(|c| c[0] * c[0]).sum::<f64>() * u.grid().cell_volume();
        assert!(rel(grad_sum, PI * PI / 2.0) < 1e-3);
        assert!(rel(lp_norm_pow(&u, 2.0).unwrap(), 0.5) < 1e-3);
        assert!(rel(lp_norm_pow(&u, 4.0).unwrap(), 3.0 / 8.0) < 1e-3);
    }

    #[test]
    fn quadrature_error_drops_by_second_order() {
        let err = |n: usize| rel(dirichlet_energy_p(&sine_1d(n), 2.0).unwrap(), PI * PI / 2.0);
        let (e1, e2) = (err(31), err(63));
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn composite_integral_examples() {
        let u = sine_1d(31);
        let a = composite_integral(&u, |s| s * s / 2.0).unwrap();
        assert_eq!(a, lp_norm_pow_slice(u.grid(), u.values(), 2.0) / 2.0);
        let one = composite_integral(&u, |_| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        let g2 = Grid::new_2d(7, 5, 2.0, 0.5).unwrap();
        let u2 = DiscreteField::zeros(g2);
        assert!((composite_integral(&u2, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        let r = 3.3;
        let c = composite_integral(&u, |s: f64| s.abs().powf(r) / r).unwrap();
        let direct = lp_norm_pow_slice(u.grid(), u.values(), r) / r;
        assert!(((c - direct) / direct).abs() < 1e-14);
        assert!(matches!(composite_integral(&u, |s| 1.0 / (s - s)), Err(FieldError::NonFinite { .. })));
    }

    #[test]
    fn p2_gradient_is_discrete_laplacian_eigenpair() {
        let n = 63;
        let u = sine_1d(n);
        let h = u.grid().h(0);
        let eig = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        let g = energy_gradient_p(&u, 2.0).unwrap();
        for (gi, ui) in g.values().iter().zip(u.values()) {
            assert!((gi / h - eig * ui).abs() <= 1e-10 * eig);
        }
        // 2-D: sin(πx) sin(πy) on the P1 triangulation gives the 5-point stencil.
        let g2 = Grid::unit_2d(15).unwrap();
        let h2 = g2.h(0);
        let v = g2.sample(|x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let eig2 = 2.0 * eig_1d(h2);
        let k = energy_gradient_p_slice(&g2, &v, 2.0).unwrap();
        for (ki, vi) in k.iter().zip(&v) {
            assert!((ki / (h2 * h2) - eig2 * vi).abs() <= 1e-10 * eig2);
        }
        assert!(energy_gradient_p(&u, 1.0).is_err());
    }

    fn eig_1d(h: f64) -> f64 {
        2.0 / (h * h) * (1.0 - (PI * h).cos())
    }
}
