//! Complex matrix representations of Clifford algebras and their d-block sums.
//!
//! Generators are built from tensor products of Pauli matrices. For a
//! signature `(p, q)` the generator images `γ_k` satisfy
//! `γ_j γ_k + γ_k γ_j = 2 η_jk I` with `η = diag(-1 (p times), +1 (q times))`.
//! The sigma objects are `σ_k = s γ_k` and obey
//! `σ_j σ_k + σ_k σ_j = -2κ Ĝ_jk I` with the frame metric `Ĝ = -η`, where
//! `s = 1, κ = 1` by default and `s = 1/√2, κ = 1/2` in the literal mode.
//! A positive-definite frame metric therefore corresponds to `(n, 0)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::algebra::{grade, Multivector, Signature};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest signature dimension with a matrix representation.
pub const MAX_REP_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaNormalization {
    /// `σσ + σσ = -2Ĝ I`.
    #[default]
    Default,
    /// `σσ + σσ = -Ĝ I`.
    Literal,
}

impl SigmaNormalization {
    /// `κ` in `σ_j σ_k + σ_k σ_j = -2κ Ĝ_jk I`.
    pub fn kappa(self) -> f64 {
        match self {
            SigmaNormalization::Default => 1.0,
            SigmaNormalization::Literal => 0.5,
        }
    }

    fn scale(self) -> f64 {
        self.kappa().sqrt()
    }
}

/// Irreducible complex dimension `2^⌊n/2⌋`.
pub fn spinor_dimension(n: usize) -> usize {
    1 << (n / 2)
}

/// The printed dimension table; `vertical` selects the column that prints
/// `2^m` for even `m`.
pub fn table_dimension(n: usize, vertical: bool) -> usize {
    if n % 2 == 1 {
        1 << ((n - 1) / 2)
    } else if vertical {
        1 << n
    } else {
        1 << (n / 2)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli(k: usize) -> CMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        1 => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        _ => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMatrix::from_fn(ar * br, ac * bc, |r, s| a[(r / br, s / bc)] * b[(r % br, s % bc)])
}

fn kron_all(factors: &[usize]) -> CMatrix {
    factors.iter().fold(CMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, &k| kron(&acc, &pauli(k)))
}

/// Hermitian matrices squaring to the identity and anticommuting pairwise.
fn euclidean_gammas(n: usize) -> Vec<CMatrix> {
    let k = n / 2;
    let mut out = Vec::with_capacity(n);
    for j in 0..k {
        for which in [1, 2] {
            let factors: Vec<usize> = (0..k).map(|s| if s < j { 3 } else if s == j { which } else { 0 }).collect();
            out.push(kron_all(&factors));
        }
    }
    if n % 2 == 1 {
        out.push(kron_all(&vec![3; k]));
    }
    out
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

#[derive(Debug, Clone)]
pub struct SigmaRep {
    sig: Signature,
    normalization: SigmaNormalization,
    gammas: Vec<CMatrix>,
    sigmas: Vec<CMatrix>,
}

impl SigmaRep {
    pub fn new(sig: Signature, normalization: SigmaNormalization) -> Result<SigmaRep> {
        let n = sig.dim();
        if n > MAX_REP_DIM {
            return Err(Error::UnsupportedDimension(format!("matrix representations are limited to p + q ≤ {MAX_REP_DIM}, got {n}")));
        }
        let gammas: Vec<CMatrix> = euclidean_gammas(n)
            .into_iter()
            .enumerate()
            .map(|(k, g)| if sig.square(k) < 0.0 { g * c(0.0, 1.0) } else { g })
            .collect();
        let s = normalization.scale();
        let sigmas = gammas.iter().map(|g| g * c(s, 0.0)).collect();
        Ok(SigmaRep { sig, normalization, gammas, sigmas })
    }

    /// Positive-definite frame metric of dimension `n`.
    pub fn euclidean(n: usize, normalization: SigmaNormalization) -> Result<SigmaRep> {
        SigmaRep::new(Signature::new(n, 0)?, normalization)
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn normalization(&self) -> SigmaNormalization {
        self.normalization
    }

    pub fn kappa(&self) -> f64 {
        self.normalization.kappa()
    }

    pub fn n(&self) -> usize {
        self.sig.dim()
    }

    /// Spin-space dimension.
    pub fn dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    pub fn sigma(&self, k: usize) -> &CMatrix {
        &self.sigmas[k]
    }

    pub fn sigmas(&self) -> &[CMatrix] {
        &self.sigmas
    }

    /// `σ^k = Ĝ^{kk} σ_k`.
    pub fn sigma_upper(&self, k: usize) -> CMatrix {
        &self.sigmas[k] * c(self.frame_metric(k), 0.0)
    }

    /// Diagonal entry of the frame metric `Ĝ = -η`.
    pub fn frame_metric(&self, k: usize) -> f64 {
        -self.sig.square(k)
    }

    /// Algebra image of a generator.
    pub fn gamma(&self, k: usize) -> &CMatrix {
        &self.gammas[k]
    }

    /// Image of the blade `e_A` (product of generators in increasing order).
    pub fn blade_matrix(&self, mask: usize) -> CMatrix {
        let mut out = CMatrix::identity(self.dim(), self.dim());
        for k in 0..self.n() {
            if mask & (1 << k) != 0 {
                out = out * &self.gammas[k];
            }
        }
        out
    }

    /// Antisymmetrized product `σ_[k1 … kq]` for increasing indices, which
    /// equals the plain product because distinct generators anticommute.
    pub fn sigma_product(&self, mask: usize) -> CMatrix {
        let s = self.normalization.scale().powi(grade(mask) as i32);
        self.blade_matrix(mask) * c(s, 0.0)
    }

    /// `σ^[k1 … kq]` with every index raised by `Ĝ`.
    pub fn sigma_product_upper(&self, mask: usize) -> CMatrix {
        let sign: f64 = (0..self.n()).filter(|k| mask & (1 << k) != 0).map(|k| self.frame_metric(k)).product();
        self.sigma_product(mask) * c(sign, 0.0)
    }

    pub fn represent(&self, u: &Multivector) -> Result<CMatrix> {
        if u.signature() != self.sig {
            return Err(Error::ShapeMismatch("multivector signature differs from the representation".into()));
        }
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for (mask, &v) in u.coeffs().iter().enumerate() {
            if v != 0.0 {
                out += self.blade_matrix(mask) * c(v, 0.0);
            }
        }
        Ok(out)
    }

    /// `max |σ_j σ_k + σ_k σ_j + 2κ Ĝ_jk I|`.
    pub fn anticommutation_residual(&self) -> f64 {
        let n = self.n();
        let id = CMatrix::identity(self.dim(), self.dim());
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { -2.0 * self.kappa() * self.frame_metric(j) } else { 0.0 };
                let r = anticommutator(&self.sigmas[j], &self.sigmas[k]) - &id * c(target, 0.0);
                worst = worst.max(max_abs(&r));
            }
        }
        worst
    }

    /// Chirality signs of the basis spinors for even `n` (the product of all
    /// generators is diagonal in this construction).
    pub fn chirality(&self) -> Option<Vec<f64>> {
        if self.n() % 2 == 1 {
            return None;
        }
        Some((0..self.dim()).map(|i| if i.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.sig.p,
            "q": self.sig.q,
            "dimension": self.dim(),
            "normalization": self.normalization,
            "matrices": self.sigmas.iter().map(matrix_json).collect::<Vec<_>>(),
        })
    }
}

/// Row-major nested array of `[re, im]` pairs.
pub fn matrix_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..m.nrows())
        .map(|r| {
            serde_json::Value::Array(
                (0..m.ncols())
                    .map(|s| serde_json::json!([crate::report::num_value(m[(r, s)].re), crate::report::num_value(m[(r, s)].im)]))
                    .collect(),
            )
        })
        .collect();
    serde_json::Value::Array(rows)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |ρ(ab) - ρ(a)ρ(b)|` over the given pairs and, for even dimension,
/// the deviation of the blade images from trace orthonormality.
pub fn faithfulness_residual(rep: &SigmaRep, pairs: &[(Multivector, Multivector)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let lhs = rep.represent(&a.product(b))?;
        let rhs = rep.represent(a)? * rep.represent(b)?;
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    if rep.n() % 2 == 0 {
        let nb = rep.signature().blade_count();
        let mats: Vec<CMatrix> = (0..nb).map(|m| rep.blade_matrix(m)).collect();
        let nd = rep.dim() as f64;
        for a in 0..nb {
            let ad = mats[a].adjoint();
            for (b, mb) in mats.iter().enumerate() {
                let t = (&ad * mb).trace() / nd;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((t - c(target, 0.0)).norm());
            }
        }
    }
    Ok(worst)
}

/// Block-diagonal sigma objects over a horizontal and a vertical frame.
#[derive(Debug, Clone)]
pub struct DSigmaRep {
    pub h: SigmaRep,
    pub v: SigmaRep,
    combined: Vec<CMatrix>,
}

impl DSigmaRep {
    pub fn new(h: SigmaRep, v: SigmaRep) -> Result<DSigmaRep> {
        if h.normalization() != v.normalization() {
            return Err(Error::ShapeMismatch("horizontal and vertical sigma objects use different normalizations".into()));
        }
        let (nh, nv) = (h.dim(), v.dim());
        let total = nh + nv;
        let mut combined = Vec::with_capacity(h.n() + v.n());
        for s in h.sigmas() {
            let mut m = CMatrix::zeros(total, total);
            m.view_mut((0, 0), (nh, nh)).copy_from(s);
            combined.push(m);
        }
        for s in v.sigmas() {
            let mut m = CMatrix::zeros(total, total);
            m.view_mut((nh, nh), (nv, nv)).copy_from(s);
            combined.push(m);
        }
        Ok(DSigmaRep { h, v, combined })
    }

    pub fn euclidean(n: usize, m: usize, normalization: SigmaNormalization) -> Result<DSigmaRep> {
        DSigmaRep::new(SigmaRep::euclidean(n, normalization)?, SigmaRep::euclidean(m, normalization)?)
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn m(&self) -> usize {
        self.v.n()
    }

    pub fn kappa(&self) -> f64 {
        self.h.kappa()
    }

    /// `N(n) + N(m)`.
    pub fn dim(&self) -> usize {
        self.h.dim() + self.v.dim()
    }

    /// Spin dimension of the block that carries frame index `alpha`.
    pub fn block_dim(&self, alpha: usize) -> usize {
        if alpha < self.n() {
            self.h.dim()
        } else {
            self.v.dim()
        }
    }

    pub fn sigma(&self, alpha: usize) -> &CMatrix {
        &self.combined[alpha]
    }

    pub fn frame_metric(&self, alpha: usize) -> f64 {
        if alpha < self.n() {
            self.h.frame_metric(alpha)
        } else {
            self.v.frame_metric(alpha - self.n())
        }
    }

    pub fn sigma_upper(&self, alpha: usize) -> CMatrix {
        &self.combined[alpha] * c(self.frame_metric(alpha), 0.0)
    }

    /// Projector onto the spin block of frame index `alpha`.
    pub fn block_projector(&self, horizontal: bool) -> CMatrix {
        let (nh, total) = (self.h.dim(), self.dim());
        CMatrix::from_fn(total, total, |r, s| {
            let inside = if horizontal { r < nh } else { r >= nh };
            if r == s && inside {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    /// Largest entry outside the two diagonal blocks over all sigma objects.
    pub fn off_block_max(&self) -> f64 {
        let nh = self.h.dim();
        self.combined.iter().fold(0.0, |acc, m| {
            let mut w: f64 = acc;
            for r in 0..m.nrows() {
                for s in 0..m.ncols() {
                    if (r < nh) != (s < nh) {
                        w = w.max(m[(r, s)].norm());
                    }
                }
            }
            w
        })
    }

    /// `max |σ_α σ_β + σ_β σ_α + 2κ Ĝ_αβ P_α|` with `P_α` the block projector.
    pub fn anticommutation_residual(&self) -> f64 {
        let d = self.n() + self.m();
        let ph = self.block_projector(true);
        let pv = self.block_projector(false);
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let mut r = anticommutator(&self.combined[a], &self.combined[b]);
                if a == b {
                    let p = if a < self.n() { &ph } else { &pv };
                    r += p * c(2.0 * self.kappa() * self.frame_metric(a), 0.0);
                }
                worst = worst.max(max_abs(&r));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        for (n, d) in [(1, 1), (2, 2), (3, 2), (4, 4), (5, 4), (6, 8), (7, 8), (8, 16)] {
            let r = SigmaRep::euclidean(n, SigmaNormalization::Default).unwrap();
            assert_eq!(r.dim(), d);
            assert_eq!(table_dimension(n, false), d);
        }
        assert_eq!(table_dimension(4, true), 16);
    }

    #[test]
    fn anticommutation_for_mixed_signatures() {
        for (p, q) in [(3, 1), (0, 3), (2, 2), (1, 4)] {
            for norm in [SigmaNormalization::Default, SigmaNormalization::Literal] {
                let r = SigmaRep::new(Signature::new(p, q).unwrap(), norm).unwrap();
                assert!(r.anticommutation_residual() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_cap() {
        let sig = Signature::new(8, 5);
        assert!(sig.is_err());
        let sig = Signature::new(6, 5).unwrap();
        assert!(matches!(SigmaRep::new(sig, SigmaNormalization::Default), Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn d_sigma_blocks() {
        let d = DSigmaRep::euclidean(3, 2, SigmaNormalization::Default).unwrap();
        assert_eq!(d.dim(), 4);
        assert_eq!(d.off_block_max(), 0.0);
        assert!(d.anticommutation_residual() < 1e-14);
    }

    #[test]
    fn chirality_anticommutes_with_generators() {
        let r = SigmaRep::euclidean(4, SigmaNormalization::Default).unwrap();
        let ch = r.chirality().unwrap();
        let g = CMatrix::from_fn(4, 4, |i, j| if i == j { c(ch[i], 0.0) } else { c(0.0, 0.0) });
        for k in 0..4 {
            assert!(max_abs(&anticommutator(&g, r.sigma(k))) < 1e-15);
        }
    }
}
