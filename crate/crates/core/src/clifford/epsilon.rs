//! Spinor metrics extracted from the finite sum over antisymmetrized sigma
//! products, and the mod-8 symmetry classes of `σ_[i…j]` with both spinor
//! indices raised.
//!
//! Index conventions: a sigma matrix entry `[k][i]` is `(σ)_k^{·i}`. The sums
//!
//! `(±)E_km^ij = Σ_q (±1)^q κ^{-q} Σ_{i1<…<iq} (σ_[i1…iq])_k^{·i} (σ^[i1…iq])_m^{·j}`
//!
//! are reshaped to a matrix with rows `(k, m)` and columns `(i, j)` and
//! factorized through the leading singular pair.

use num_complex::Complex64;
use serde::Serialize;

use super::algebra::grade;
use super::rep::{max_abs, CMatrix, SigmaRep};
use crate::error::{Error, Result};

/// Bound on the factorization residual.
pub const FACTORIZATION_BOUND: f64 = 1e-9;

/// Largest `n` accepted by the epsilon construction.
pub const MAX_EPSILON_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    Symmetric,
    Antisymmetric,
    /// Blocks between opposite chiralities related by `A^{IJ'} = s A^{J'I}`.
    MixedChirality,
    Vanishing,
}

/// One factorized sum.
#[derive(Debug, Clone)]
pub struct EpsilonPair {
    pub sign: i8,
    /// `ε_km`, normalized to Frobenius norm `√N` with its first significant
    /// entry (row-major) real and positive.
    pub lower: CMatrix,
    /// `ε^ij`, the inverse transpose of `ε_km`.
    pub upper: CMatrix,
    /// `E = scale · ε_km ε^ij`.
    pub scale: f64,
    pub residual: f64,
    pub class: SymmetryClass,
}

#[derive(Debug, Clone)]
pub struct EpsilonObjects {
    pub n: usize,
    /// Spin dimension.
    pub dim: usize,
    pub plus: Option<EpsilonPair>,
    pub minus: Option<EpsilonPair>,
    /// Largest singular value of each vanishing sum relative to the norm
    /// of the other one.
    pub vanishing_level: f64,
}

impl EpsilonObjects {
    /// The factorized spinor metric used for index gymnastics: the `(+)`
    /// pair when present, otherwise the `(-)` pair.
    pub fn primary(&self) -> &EpsilonPair {
        self.plus.as_ref().or(self.minus.as_ref()).expect("at least one sum factorizes")
    }

    pub fn max_residual(&self) -> f64 {
        [&self.plus, &self.minus].iter().filter_map(|p| p.as_ref()).fold(0.0, |m, p| m.max(p.residual))
    }

    /// `½(ε₊ ± ε₋)` for even `n`, upper indices.
    pub fn combined_upper(&self) -> Option<(CMatrix, CMatrix)> {
        let (p, m) = (self.plus.as_ref()?, self.minus.as_ref()?);
        let half = Complex64::new(0.5, 0.0);
        Some(((&p.upper + &m.upper) * half, (&p.upper - &m.upper) * half))
    }
}

/// The raw sum as an `N² × N²` matrix.
pub fn e_sum(rep: &SigmaRep, sign: f64) -> CMatrix {
    let nd = rep.dim();
    let kappa = rep.kappa();
    let mut e = CMatrix::zeros(nd * nd, nd * nd);
    for mask in 0..rep.signature().blade_count() {
        let q = grade(mask) as i32;
        let w = Complex64::new(sign.powi(q) * kappa.powi(-q), 0.0);
        let lo = rep.sigma_product(mask);
        let up = rep.sigma_product_upper(mask);
        for k in 0..nd {
            for i in 0..nd {
                let a = lo[(k, i)] * w;
                if a.norm() == 0.0 {
                    continue;
                }
                for m in 0..nd {
                    for j in 0..nd {
                        e[(k * nd + m, i * nd + j)] += a * up[(m, j)];
                    }
                }
            }
        }
    }
    e
}

fn reshape(v: &[Complex64], nd: usize) -> CMatrix {
    CMatrix::from_fn(nd, nd, |r, s| v[r * nd + s])
}

fn outer(lower: &CMatrix, upper: &CMatrix) -> CMatrix {
    let nd = lower.nrows();
    CMatrix::from_fn(nd * nd, nd * nd, |r, s| lower[(r / nd, r % nd)] * upper[(s / nd, s % nd)])
}

/// Symmetric, antisymmetric or neither (returned as `None`).
pub fn classify(a: &CMatrix, tol: f64) -> Option<SymmetryClass> {
    let scale = max_abs(a);
    if scale <= tol {
        return Some(SymmetryClass::Vanishing);
    }
    let t = a.transpose();
    if max_abs(&(a - &t)) <= tol * scale {
        Some(SymmetryClass::Symmetric)
    } else if max_abs(&(a + &t)) <= tol * scale {
        Some(SymmetryClass::Antisymmetric)
    } else {
        None
    }
}

fn factorize(e: &CMatrix, nd: usize, sign: i8) -> Result<EpsilonPair> {
    let svd = e.clone().svd(true, true);
    let sv = &svd.singular_values;
    let lead = (0..sv.len()).max_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
    let u = svd.u.as_ref().unwrap().column(lead).iter().cloned().collect::<Vec<_>>();
    let mut lower = reshape(&u, nd) * Complex64::new((nd as f64).sqrt(), 0.0);
    let big = max_abs(&lower);
    if let Some(first) = lower.transpose().iter().find(|z| z.norm() > 1e-8 * big).cloned() {
        let phase = first.conj() / first.norm();
        lower *= phase;
    }
    let upper = lower
        .clone()
        .try_inverse()
        .ok_or(Error::FactorizationFailure { residual: f64::INFINITY, bound: FACTORIZATION_BOUND })?
        .transpose();
    let basis = outer(&lower, &upper);
    let num: Complex64 = basis.iter().zip(e.iter()).map(|(b, x)| b.conj() * x).sum();
    let den: f64 = basis.iter().map(|b| b.norm_sqr()).sum();
    let coef = num / den;
    let residual = max_abs(&(e - &basis * coef));
    let class = classify(&lower, 1e-10).unwrap_or(SymmetryClass::MixedChirality);
    if residual > FACTORIZATION_BOUND {
        return Err(Error::FactorizationFailure { residual, bound: FACTORIZATION_BOUND });
    }
    Ok(EpsilonPair { sign, lower, upper, scale: coef.re, residual, class })
}

pub fn epsilon_objects(rep: &SigmaRep) -> Result<EpsilonObjects> {
    let n = rep.n();
    if n > MAX_EPSILON_DIM {
        return Err(Error::UnsupportedDimension(format!("epsilon objects are built for n ≤ {MAX_EPSILON_DIM}, got {n}")));
    }
    let nd = rep.dim();
    let plus = e_sum(rep, 1.0);
    let minus = e_sum(rep, -1.0);
    let size = max_abs(&plus).max(max_abs(&minus));
    let vanishes = |e: &CMatrix| max_abs(e) <= 1e-12 * size;
    let mut level: f64 = 0.0;
    let mut pick = |e: &CMatrix, s: i8| -> Result<Option<EpsilonPair>> {
        if vanishes(e) {
            level = level.max(max_abs(e) / size);
            Ok(None)
        } else {
            factorize(e, nd, s).map(Some)
        }
    };
    let plus = pick(&plus, 1)?;
    let minus = pick(&minus, -1)?;
    Ok(EpsilonObjects { n, dim: nd, plus, minus, vanishing_level: level })
}

/// `(σ_[I])^{kl} = ε^{km} (σ_[I])_m^{·l}`.
pub fn raised_sigma_product(rep: &SigmaRep, eps_upper: &CMatrix, mask: usize) -> CMatrix {
    eps_upper * rep.sigma_product(mask)
}

/// Outcome of the symmetry test for one `(n, q)`.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub n: usize,
    pub q: usize,
    pub expected: SymmetryClass,
    /// Sign `s` of `A^{IJ'} = s A^{J'I}` for the mixed-chirality class.
    pub mixed_sign: Option<i8>,
    pub observed: Option<SymmetryClass>,
    pub residual: f64,
    pub pass: bool,
}

/// Class predicted by the mod-8 table for `σ_[i…j]` with `q` indices.
pub fn expected_class(n: usize, q: usize) -> SymmetryClass {
    let r = (n as i64 - 2 * q as i64).rem_euclid(8);
    if n % 2 == 1 {
        match r {
            1 | 7 => SymmetryClass::Symmetric,
            _ => SymmetryClass::Antisymmetric,
        }
    } else {
        match r {
            0 => SymmetryClass::Symmetric,
            4 => SymmetryClass::Antisymmetric,
            _ => SymmetryClass::MixedChirality,
        }
    }
}

/// Sign printed for the mixed class: `+` for `n + 2q ≡ 6`, `-` for `n + 2q ≡ 2 (mod 8)`.
pub fn expected_mixed_sign(n: usize, q: usize) -> Option<i8> {
    match (n + 2 * q) % 8 {
        6 => Some(1),
        2 => Some(-1),
        _ => None,
    }
}

fn sub_block(a: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |r, s| a[(rows[r], cols[s])])
}

/// Checks every `σ_[i…j]` with `q` indices against the mod-8 table.
///
/// Odd `n` uses the full spin space. Even `n` splits it by chirality; the
/// same-chirality blocks carry the symmetric and antisymmetric classes and
/// the opposite-chirality blocks the mixed class, the rest vanishing.
pub fn sigma_symmetry_check(rep: &SigmaRep, eps: &EpsilonObjects, q: usize) -> SymmetryReport {
    let n = rep.n();
    let expected = expected_class(n, q);
    let eu = &eps.primary().upper;
    let masks: Vec<usize> = (0..rep.signature().blade_count()).filter(|&m| grade(m) == q).collect();
    let tol = 1e-10;
    let mut residual: f64 = 0.0;
    let mut observed: Option<SymmetryClass> = None;
    let mut mixed_sign: Option<i8> = None;
    let mut consistent = true;
    let merge = |obs: Option<SymmetryClass>, observed: &mut Option<SymmetryClass>| match (obs, *observed) {
        (None, _) => false,
        (Some(SymmetryClass::Vanishing), _) => true,
        (Some(c), None) => {
            *observed = Some(c);
            true
        }
        (Some(c), Some(o)) => c == o,
    };
    match rep.chirality() {
        None => {
            for &mask in &masks {
                let a = raised_sigma_product(rep, eu, mask);
                let t = a.transpose();
                let r = match expected {
                    SymmetryClass::Symmetric => max_abs(&(&a - &t)),
                    _ => max_abs(&(&a + &t)),
                };
                residual = residual.max(r);
                consistent &= merge(classify(&a, tol), &mut observed);
            }
        }
        Some(ch) => {
            let plus: Vec<usize> = (0..ch.len()).filter(|&i| ch[i] > 0.0).collect();
            let minus: Vec<usize> = (0..ch.len()).filter(|&i| ch[i] < 0.0).collect();
            for &mask in &masks {
                let a = raised_sigma_product(rep, eu, mask);
                let scale = max_abs(&a);
                let same = [sub_block(&a, &plus, &plus), sub_block(&a, &minus, &minus)];
                let cross = [sub_block(&a, &plus, &minus), sub_block(&a, &minus, &plus)];
                match expected {
                    SymmetryClass::MixedChirality => {
                        residual = residual.max(same.iter().fold(0.0, |m, b| m.max(max_abs(b))));
                        let (ab, ba) = (&cross[0], cross[1].transpose());
                        let s = if max_abs(&(ab - &ba)) <= max_abs(&(ab + &ba)) { 1 } else { -1 };
                        let r = max_abs(&(ab - &ba * Complex64::new(s as f64, 0.0)));
                        residual = residual.max(r);
                        if r <= tol * scale.max(1.0) {
                            match mixed_sign {
                                None => mixed_sign = Some(s),
                                Some(prev) => consistent &= prev == s,
                            }
                            consistent &= merge(Some(SymmetryClass::MixedChirality), &mut observed);
                        } else {
                            consistent = false;
                        }
                    }
                    _ => {
                        residual = residual.max(cross.iter().fold(0.0, |m, b| m.max(max_abs(b))));
                        for b in &same {
                            let t = b.transpose();
                            let r = match expected {
                                SymmetryClass::Symmetric => max_abs(&(b - &t)),
                                _ => max_abs(&(b + &t)),
                            };
                            residual = residual.max(r);
                            consistent &= merge(classify(b, tol), &mut observed);
                        }
                    }
                }
            }
        }
    }
    let pass = consistent && observed == Some(expected) && residual <= tol;
    SymmetryReport { n, q, expected, mixed_sign, observed, residual, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::rep::SigmaNormalization;

    fn rep(n: usize) -> SigmaRep {
        SigmaRep::euclidean(n, SigmaNormalization::Default).unwrap()
    }

    #[test]
    fn two_dimensional_factorization() {
        let e = epsilon_objects(&rep(2)).unwrap();
        for p in [e.plus.as_ref().unwrap(), e.minus.as_ref().unwrap()] {
            assert!((p.scale - 2.0).abs() < 1e-12);
            assert!(p.residual < 1e-12);
        }
        let (sum, diff) = e.combined_upper().unwrap();
        assert!(max_abs(&sum) > 0.0 && max_abs(&diff) > 0.0);
    }

    #[test]
    fn odd_dimensions_keep_one_sum() {
        for (n, surviving) in [(3, 1), (5, -1), (7, 1)] {
            let e = epsilon_objects(&rep(n)).unwrap();
            let p = e.primary();
            assert_eq!(p.sign, surviving);
            assert!((p.scale - 2.0 * e.dim as f64).abs() < 1e-9);
            assert!(e.vanishing_level < 1e-12);
        }
    }

    #[test]
    fn scale_is_independent_of_normalization() {
        let lit = SigmaRep::euclidean(4, SigmaNormalization::Literal).unwrap();
        let a = epsilon_objects(&lit).unwrap();
        let b = epsilon_objects(&rep(4)).unwrap();
        assert!((a.primary().scale - b.primary().scale).abs() < 1e-12);
    }

    #[test]
    fn mod_eight_classes() {
        for n in 1..=6 {
            let r = rep(n);
            let e = epsilon_objects(&r).unwrap();
            for q in 0..=3.min(n) {
                let rep = sigma_symmetry_check(&r, &e, q);
                assert!(rep.pass, "n={n} q={q}: {rep:?}");
                if rep.expected == SymmetryClass::MixedChirality {
                    assert_eq!(rep.mixed_sign, expected_mixed_sign(n, q));
                }
            }
        }
        assert_eq!(expected_class(3, 0), SymmetryClass::Antisymmetric);
        assert_eq!(expected_class(5, 0), SymmetryClass::Antisymmetric);
        assert_eq!(expected_class(4, 2), SymmetryClass::Symmetric);
    }
}
