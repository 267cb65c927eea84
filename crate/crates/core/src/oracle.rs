//! Classical Riemannian geometry from a base metric `g_ij(x)`, computed with
//! plain arrays from its first and second partials.
//!
//! Used as an independent reference for the d-connection pipeline: it never
//! touches N-connections, adapted frames or the engine's inversion routines.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Christoffel symbols and curvature at one point.
#[derive(Debug, Clone)]
pub struct ClassicalGeometry {
    /// `christoffel[i][j][k] = Γ^i_jk`
    pub christoffel: Tensor<f64>,
    /// `riemann[i][j][k][l] = R^i_jkl = ∂_k Γ^i_lj - ∂_l Γ^i_kj + Γ^i_km Γ^m_lj - Γ^i_lm Γ^m_kj`
    pub riemann: Tensor<f64>,
    pub ricci: Tensor<f64>,
    pub scalar: f64,
}

impl ClassicalGeometry {
    /// Riemann tensor rearranged to `[i][h][j][k] = R^i_{h k j}`, the layout
    /// of the horizontal curvature block.
    pub fn riemann_h_layout(&self) -> Tensor<f64> {
        let r = &self.riemann;
        Tensor::from_fn(r.shape(), |ix| r[[ix[0], ix[1], ix[3], ix[2]]])
    }

    /// `N^i_j = Γ^i_jk y^k` for a geodesic spray.
    pub fn spray_connection(&self, y: &[f64]) -> Tensor<f64> {
        let n = y.len();
        Tensor::from_fn(&[n, n], |ix| (0..n).map(|k| self.christoffel[[ix[0], ix[1], k]] * y[k]).sum())
    }
}

/// Evaluates the classical geometry of `metric` at `x`.
///
/// `metric` maps seeded coordinate jets to the `n × n` metric components.
pub fn classical_geometry(metric: &dyn Fn(&[Jet]) -> Result<Vec<Vec<Jet>>>, x: &[f64]) -> Result<ClassicalGeometry> {
    let n = x.len();
    let xs = Jet::seed_all(x, 2);
    let g = metric(&xs)?;
    if g.len() != n || g.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch(format!("metric must be {n} x {n}")));
    }
    let g0 = DMatrix::from_fn(n, n, |i, j| g[i][j].value());
    let gi = g0.clone().try_inverse().ok_or_else(|| Error::Domain("singular metric".into()))?;
    let mut dg = vec![vec![vec![0.0; n]; n]; n];
    let mut ddg = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                let da = g[i][j].derivative(a);
                dg[i][j][a] = da.value();
                for b in 0..n {
                    ddg[i][j][a][b] = da.derivative(b).value();
                }
            }
        }
    }
    // First-kind symbols and their partials.
    let first = |l: usize, j: usize, k: usize| 0.5 * (dg[l][k][j] + dg[j][l][k] - dg[j][k][l]);
    let dfirst = |l: usize, j: usize, k: usize, m: usize| 0.5 * (ddg[l][k][j][m] + ddg[j][l][k][m] - ddg[j][k][l][m]);
    let dgi: Vec<DMatrix<f64>> = (0..n)
        .map(|m| {
            let d = DMatrix::from_fn(n, n, |i, j| dg[i][j][m]);
            -(&gi * d * &gi)
        })
        .collect();
    let gamma: Tensor<f64> = Tensor::from_fn(&[n, n, n], |ix| (0..n).map(|l| gi[(ix[0], l)] * first(l, ix[1], ix[2])).sum());
    let dgamma: Tensor<f64> = Tensor::from_fn(&[n, n, n, n], |ix| {
        let (i, j, k, m) = (ix[0], ix[1], ix[2], ix[3]);
        (0..n).map(|l| dgi[m][(i, l)] * first(l, j, k) + gi[(i, l)] * dfirst(l, j, k, m)).sum()
    });
    let riemann = Tensor::from_fn(&[n, n, n, n], |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = dgamma[[i, l, j, k]] - dgamma[[i, k, j, l]];
        for m in 0..n {
            s += gamma[[i, k, m]] * gamma[[m, l, j]] - gamma[[i, l, m]] * gamma[[m, k, j]];
        }
        s
    });
    let ricci = Tensor::from_fn(&[n, n], |ix| (0..n).map(|k| riemann[[k, ix[0], k, ix[1]]]).sum());
    let mut scalar = 0.0;
    for i in 0..n {
        for j in 0..n {
            scalar += gi[(i, j)] * ricci[[i, j]];
        }
    }
    Ok(ClassicalGeometry { christoffel: gamma, riemann, ricci, scalar })
}

/// Round sphere `diag(1, sin² θ)` in coordinates `(θ, φ)`.
pub fn sphere_metric(x: &[Jet]) -> Result<Vec<Vec<Jet>>> {
    let s = x[0].sin();
    let z = Jet::zero(x[0].nvars(), x[0].order());
    Ok(vec![vec![Jet::constant(1.0, x[0].nvars(), x[0].order()), z.clone()], vec![z, &s * &s]])
}

/// Closed forms on the round sphere at colatitude `theta`.
pub mod sphere {
    /// `Γ^θ_φφ = -sin θ cos θ`, `Γ^φ_θφ = cot θ`, all others zero.
    pub fn christoffel(theta: f64) -> [[[f64; 2]; 2]; 2] {
        let mut g = [[[0.0; 2]; 2]; 2];
        g[0][1][1] = -theta.sin() * theta.cos();
        g[1][0][1] = theta.cos() / theta.sin();
        g[1][1][0] = g[1][0][1];
        g
    }

    /// `R^θ_φθφ = sin² θ`.
    pub fn riemann_theta_phi_theta_phi(theta: f64) -> f64 {
        theta.sin().powi(2)
    }

    pub const SCALAR: f64 = 2.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_closed_forms() {
        for theta in [0.4, 1.0, 2.3] {
            let cg = classical_geometry(&sphere_metric, &[theta, 0.7]).unwrap();
            let cf = sphere::christoffel(theta);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!((cg.christoffel[[i, j, k]] - cf[i][j][k]).abs() < 1e-14);
                    }
                }
            }
            assert!((cg.riemann[[0, 1, 0, 1]] - sphere::riemann_theta_phi_theta_phi(theta)).abs() < 1e-13);
            assert!((cg.scalar - sphere::SCALAR).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_polar_coordinates() {
        let polar = |x: &[Jet]| -> Result<Vec<Vec<Jet>>> {
            let z = Jet::zero(x[0].nvars(), x[0].order());
            Ok(vec![vec![Jet::constant(1.0, x[0].nvars(), x[0].order()), z.clone()], vec![z, &x[0] * &x[0]]])
        };
        let cg = classical_geometry(&polar, &[1.7, 0.3]).unwrap();
        assert!(cg.riemann.max_abs() < 1e-13);
        assert!((cg.christoffel[[0, 1, 1]] + 1.7).abs() < 1e-14);
    }
}
