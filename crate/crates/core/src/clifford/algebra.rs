//! Real Clifford algebras over a diagonal quadratic form.
//!
//! Blades are bitmasks over the generators; bit `k` stands for `e_{k+1}`.
//! A blade bitmask always denotes the product of its generators in
//! increasing order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of generators for multivector arithmetic.
pub const MAX_GENERATORS: usize = 12;

/// Off-grade mass tolerated by the twisted-group membership test.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-10;

/// `p` generators square to `-1`, the following `q` to `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize) -> Result<Signature> {
        let n = p + q;
        if n == 0 {
            return Err(Error::UnsupportedDimension("a signature needs at least one generator".into()));
        }
        if n > MAX_GENERATORS {
            return Err(Error::UnsupportedDimension(format!("p + q = {n} exceeds {MAX_GENERATORS}")));
        }
        Ok(Signature { p, q })
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    /// `e_k^2`.
    pub fn square(&self, k: usize) -> f64 {
        if k < self.p {
            -1.0
        } else {
            1.0
        }
    }

    /// Diagonal of the quadratic form `G`, so that `u^2 = G(u)` for vectors.
    pub fn metric(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.square(k)).collect()
    }

    pub fn blade_count(&self) -> usize {
        1 << self.dim()
    }
}

/// Sign of `e_A e_B` relative to `e_{A xor B}` from reordering alone.
fn reorder_sign(a: usize, b: usize) -> f64 {
    let mut swaps = 0u32;
    let mut a = a >> 1;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `e_A e_B = blade_product(A, B).0 * e_{blade_product(A, B).1}`.
pub fn blade_product(a: usize, b: usize, sig: &Signature) -> (f64, usize) {
    let mut s = reorder_sign(a, b);
    let mut common = a & b;
    while common != 0 {
        let k = common.trailing_zeros() as usize;
        s *= sig.square(k);
        common &= common - 1;
    }
    (s, a ^ b)
}

pub fn grade(blade: usize) -> usize {
    blade.count_ones() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    sig: Signature,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(sig: Signature) -> Multivector {
        Multivector { sig, coeffs: vec![0.0; sig.blade_count()] }
    }

    pub fn scalar(v: f64, sig: Signature) -> Multivector {
        Multivector::blade(0, v, sig)
    }

    pub fn blade(mask: usize, v: f64, sig: Signature) -> Multivector {
        let mut m = Multivector::zero(sig);
        m.coeffs[mask] = v;
        m
    }

    /// Generator `e_{k+1}`.
    pub fn generator(k: usize, sig: Signature) -> Multivector {
        Multivector::blade(1 << k, 1.0, sig)
    }

    pub fn vector(components: &[f64], sig: Signature) -> Result<Multivector> {
        if components.len() != sig.dim() {
            return Err(Error::ShapeMismatch(format!("vector with {} components in dimension {}", components.len(), sig.dim())));
        }
        let mut m = Multivector::zero(sig);
        for (k, &c) in components.iter().enumerate() {
            m.coeffs[1 << k] = c;
        }
        Ok(m)
    }

    pub fn from_coeffs(coeffs: Vec<f64>, sig: Signature) -> Result<Multivector> {
        if coeffs.len() != sig.blade_count() {
            return Err(Error::ShapeMismatch(format!("{} coefficients for {} blades", coeffs.len(), sig.blade_count())));
        }
        Ok(Multivector { sig, coeffs })
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn grade_part(&self, k: usize) -> Multivector {
        let coeffs = self.coeffs.iter().enumerate().map(|(b, &c)| if grade(b) == k { c } else { 0.0 }).collect();
        Multivector { sig: self.sig, coeffs }
    }

    /// Components of the grade-1 part.
    pub fn vector_part(&self) -> Vec<f64> {
        (0..self.sig.dim()).map(|k| self.coeffs[1 << k]).collect()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Euclidean norm of the coefficients outside grade `k`.
    pub fn off_grade_norm(&self, k: usize) -> f64 {
        self.coeffs.iter().enumerate().filter(|(b, _)| grade(*b) != k).map(|(_, c)| c * c).sum::<f64>().sqrt()
    }

    fn map_blades(&self, f: impl Fn(usize) -> f64) -> Multivector {
        Multivector { sig: self.sig, coeffs: self.coeffs.iter().enumerate().map(|(b, &c)| c * f(b)).collect() }
    }

    /// Reverses the order of generator factors in every blade.
    pub fn reversion(&self) -> Multivector {
        self.map_blades(|b| {
            let k = grade(b);
            if (k * k.saturating_sub(1) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// Negates the odd grades.
    pub fn grade_involution(&self) -> Multivector {
        self.map_blades(|b| if grade(b) % 2 == 0 { 1.0 } else { -1.0 })
    }

    pub fn conjugate(&self) -> Multivector {
        self.grade_involution().reversion()
    }

    pub fn scale(&self, s: f64) -> Multivector {
        self.map_blades(|_| s)
    }

    pub fn add(&self, other: &Multivector) -> Multivector {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Multivector { sig: self.sig, coeffs }
    }

    pub fn sub(&self, other: &Multivector) -> Multivector {
        self.add(&other.scale(-1.0))
    }

    pub fn product(&self, other: &Multivector) -> Multivector {
        let mut out = vec![0.0; self.coeffs.len()];
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                let (s, c) = blade_product(a, b, &self.sig);
                out[c] += s * ca * cb;
            }
        }
        Multivector { sig: self.sig, coeffs: out }
    }

    pub fn max_abs_diff(&self, other: &Multivector) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Inverse through the spinor norm when it is a nonzero scalar,
    /// otherwise by solving the left-multiplication system.
    pub fn inverse(&self) -> Result<Multivector> {
        let s = spinor_norm(self);
        let sv = s.scalar_part();
        if sv.abs() > 0.0 && s.off_grade_norm(0) <= MEMBERSHIP_TOLERANCE * sv.abs() {
            return Ok(self.conjugate().scale(1.0 / sv));
        }
        if self.sig.dim() > 8 {
            return Err(Error::NonInvertible("spinor norm is not a scalar and the algebra is too large for a direct solve".into()));
        }
        let nb = self.sig.blade_count();
        let mut lm = DMatrix::<f64>::zeros(nb, nb);
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for b in 0..nb {
                let (s, c) = blade_product(a, b, &self.sig);
                lm[(c, b)] += s * ca;
            }
        }
        let mut rhs = DVector::<f64>::zeros(nb);
        rhs[0] = 1.0;
        let cond = crate::linalg::condition_number(&lm);
        if !(cond <= 1e12) {
            return Err(Error::NonInvertible(format!("left multiplication is singular (condition {cond:e})")));
        }
        let x = lm.lu().solve(&rhs).ok_or_else(|| Error::NonInvertible("singular left multiplication".into()))?;
        Ok(Multivector { sig: self.sig, coeffs: x.iter().cloned().collect() })
    }
}

/// `S(u) = ᵗū u`; for a vector this is `-G(u)`.
pub fn spinor_norm(u: &Multivector) -> Multivector {
    u.conjugate().product(u)
}

/// Result of the twisted-group test for one element.
#[derive(Debug, Clone)]
pub struct TwistedAction {
    pub member: bool,
    /// Largest off-grade mass of `ū e_k u⁻¹` relative to its norm.
    pub off_grade: f64,
    /// `rho[i][k]` is the `e_i` component of `ū e_k u⁻¹`.
    pub rho: DMatrix<f64>,
}

/// The twisted adjoint action `w ↦ ū w u⁻¹` on the generators.
pub fn twisted_action(u: &Multivector) -> Result<TwistedAction> {
    let sig = u.signature();
    let n = sig.dim();
    let inv = u.inverse()?;
    let ubar = u.grade_involution();
    let mut rho = DMatrix::<f64>::zeros(n, n);
    let mut off: f64 = 0.0;
    for k in 0..n {
        let img = ubar.product(&Multivector::generator(k, sig)).product(&inv);
        let scale = img.norm().max(f64::MIN_POSITIVE);
        off = off.max(img.off_grade_norm(1) / scale);
        for (i, c) in img.vector_part().into_iter().enumerate() {
            rho[(i, k)] = c;
        }
    }
    Ok(TwistedAction { member: off <= MEMBERSHIP_TOLERANCE, off_grade: off, rho })
}

/// `|ρᵀ G ρ - G|_max` for the diagonal form of the signature.
pub fn orthogonality_residual(rho: &DMatrix<f64>, sig: &Signature) -> f64 {
    let g = DMatrix::from_diagonal(&DVector::from_vec(sig.metric()));
    (rho.transpose() * &g * rho - &g).amax()
}

/// Product of the given vectors, normalized so that `|S(u)| = 1`.
pub fn versor(vectors: &[Vec<f64>], sig: Signature) -> Result<Multivector> {
    let mut u = Multivector::scalar(1.0, sig);
    for v in vectors {
        u = u.product(&Multivector::vector(v, sig)?);
    }
    let s = spinor_norm(&u).scalar_part();
    if s == 0.0 {
        return Err(Error::NonInvertible("null versor".into()));
    }
    Ok(u.scale(1.0 / s.abs().sqrt()))
}

/// `cos t + sin t e_{i} e_{j}`.
pub fn plane_rotor(i: usize, j: usize, t: f64, sig: Signature) -> Multivector {
    let mut u = Multivector::scalar(t.cos(), sig);
    let (s, mask) = blade_product(1 << i, 1 << j, &sig);
    u.coeffs[mask] += s * t.sin();
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(p: usize, q: usize) -> Signature {
        Signature::new(p, q).unwrap()
    }

    #[test]
    fn generator_relations() {
        let s = sig(1, 1);
        let e1 = Multivector::generator(0, s);
        let e2 = Multivector::generator(1, s);
        assert_eq!(e1.product(&e1), Multivector::scalar(-1.0, s));
        assert_eq!(e2.product(&e2), Multivector::scalar(1.0, s));
        assert_eq!(e1.product(&e2), e2.product(&e1).scale(-1.0));
    }

    #[test]
    fn reversion_of_trivector_flips_sign() {
        let s = sig(3, 0);
        let t = Multivector::blade(0b111, 1.0, s);
        assert_eq!(t.reversion(), t.scale(-1.0));
        let e = |k| Multivector::generator(k, s);
        assert_eq!(e(2).product(&e(1)).product(&e(0)), t.reversion());
    }

    #[test]
    fn spinor_norm_of_vector() {
        let s = sig(2, 1);
        let u = Multivector::vector(&[0.3, -1.2, 0.7], s).unwrap();
        let g: f64 = s.metric().iter().zip([0.3, -1.2, 0.7]).map(|(m, c)| m * c * c).sum();
        let n = spinor_norm(&u);
        assert!((n.scalar_part() + g).abs() < 1e-15);
        assert!(n.off_grade_norm(0) < 1e-15);
        assert_eq!(spinor_norm(&Multivector::scalar(1.0, s)).scalar_part(), 1.0);
    }

    #[test]
    fn reflection_and_rotation() {
        let s = sig(2, 0);
        let a = twisted_action(&Multivector::generator(0, s)).unwrap();
        assert!(a.member);
        assert!((a.rho[(0, 0)] + 1.0).abs() < 1e-15 && (a.rho[(1, 1)] - 1.0).abs() < 1e-15);
        let t = 0.37;
        let r = twisted_action(&plane_rotor(0, 1, t, s)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[(2.0 * t).cos(), -(2.0 * t).sin(), (2.0 * t).sin(), (2.0 * t).cos()]);
        assert!((r.rho - expect).amax() < 1e-14);
    }

    #[test]
    fn general_inverse_by_solve() {
        let s = sig(2, 1);
        let u = Multivector::from_coeffs(vec![1.0, 0.2, -0.3, 0.1, 0.5, 0.0, 0.4, 0.2], s).unwrap();
        let prod = u.product(&u.inverse().unwrap());
        assert!(prod.max_abs_diff(&Multivector::scalar(1.0, s)) < 1e-12);
    }

    #[test]
    fn non_member_detected() {
        let s = sig(3, 0);
        let u = Multivector::scalar(1.0, s).add(&Multivector::generator(0, s));
        let a = twisted_action(&u).unwrap();
        assert!(!a.member);
    }
}
