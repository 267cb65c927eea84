//! Small dense linear algebra over plain values and jets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Largest accepted 2-norm condition number for block inversion.
pub const MAX_CONDITION: f64 = 1e12;

pub fn to_dmatrix(t: &Tensor<f64>) -> DMatrix<f64> {
    let (r, c) = (t.shape()[0], t.shape()[1]);
    DMatrix::from_fn(r, c, |i, j| t[[i, j]])
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Tensor<f64> {
    Tensor::from_fn(&[m.nrows(), m.ncols()], |i| m[(i[0], i[1])])
}

/// 2-norm condition number from singular values (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square plain matrix with the condition guard.
pub fn invert(t: &Tensor<f64>, block: &str) -> Result<Tensor<f64>> {
    let m = to_dmatrix(t);
    let cond = condition_number(&m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularBlock { block: block.into(), cond });
    }
    let inv = m.try_inverse().ok_or(Error::SingularBlock { block: block.into(), cond })?;
    Ok(from_dmatrix(&inv))
}

/// Inverse of a square matrix of jets by Gauss-Jordan elimination with partial
/// pivoting on the order-0 values.
pub fn invert_jets(a: &Tensor<Jet>, block: &str) -> Result<Tensor<Jet>> {
    let n = a.shape()[0];
    let vals = a.values();
    let cond = condition_number(&to_dmatrix(&vals));
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularBlock { block: block.into(), cond });
    }
    let proto = &a[[0, 0]];
    let (d, k) = (proto.nvars(), proto.order());
    let mut m: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| a[[i, j]].clone()).collect()).collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, d, k)).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r][col].value().abs().total_cmp(&m[s][col].value().abs()))
            .unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let r = m[col][col].recip().map_err(|_| Error::SingularBlock { block: block.into(), cond })?;
        for j in 0..n {
            m[col][j] = &m[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col].clone();
            if f.coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            for j in 0..n {
                let t = &f * &m[col][j];
                m[row][j] -= &t;
                let t = &f * &inv[col][j];
                inv[row][j] -= &t;
            }
        }
    }
    Ok(Tensor::from_fn(&[n, n], |i| inv[i[0]][i[1]].clone()))
}

/// Eigenvalues of a symmetric plain matrix, ascending.
pub fn symmetric_eigenvalues(t: &Tensor<f64>) -> Vec<f64> {
    let m = to_dmatrix(t);
    let sym = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_inverse_matches_plain_and_derivative() {
        let s = Jet::seed_all(&[0.4, 1.1], 3);
        let one = Jet::constant(1.0, 2, 3);
        let a = Tensor::from_fn(&[2, 2], |i| match (i[0], i[1]) {
            (0, 0) => &one + &(&s[0] * &s[0]),
            (0, 1) | (1, 0) => s[1].clone(),
            _ => s[0].add_scalar(3.0),
        });
        let inv = invert_jets(&a, "test").unwrap();
        let plain = invert(&a.values(), "test").unwrap();
        assert!(inv.values().max_abs_diff(&plain) < 1e-14);
        let prod = Tensor::from_fn(&[2, 2], |i| {
            (0..2).fold(Jet::zero(2, 3), |acc, k| acc + &a[[i[0], k]] * &inv[[k, i[1]]])
        });
        for (idx, v) in prod.indexed() {
            let target = if idx[0] == idx[1] { 1.0 } else { 0.0 };
            assert!((v.value() - target).abs() < 1e-14);
            assert!(v.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
        }
    }

    #[test]
    fn singular_rejected() {
        let t = Tensor::from_fn(&[2, 2], |_| 1.0);
        assert!(matches!(invert(&t, "g"), Err(Error::SingularBlock { .. })));
    }
}
