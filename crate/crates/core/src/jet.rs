//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `f_α = ∂^α f / α!` of a scalar
//! function for every multi-index with `|α| ≤ K`. Coefficients are kept in a
//! graded order (all degree-0 entries, then degree 1, and so on), so the jet of
//! order `K-1` is a prefix of the jet of order `K` in the same variables.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 6;

/// Largest supported number of variables.
pub const MAX_VARS: usize = 24;

/// Precomputed index tables shared by every jet with the same `(d, K)`.
pub struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    rank: HashMap<Vec<u8>, usize>,
    degree_start: Vec<usize>,
    mul_table: Vec<(u32, u32, u32)>,
    deriv_table: Vec<Vec<(u32, u32, f64)>>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut indices: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for deg in 0..=order {
            degree_start.push(indices.len());
            let mut cur = vec![0u8; nvars];
            enumerate_degree(nvars, deg, 0, &mut cur, &mut indices);
        }
        degree_start.push(indices.len());
        let rank: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        let mut mul_table = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            let da: usize = a.iter().map(|&v| v as usize).sum();
            for (j, b) in indices.iter().enumerate() {
                let db: usize = b.iter().map(|&v| v as usize).sum();
                if da + db > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                mul_table.push((i as u32, j as u32, rank[&sum] as u32));
            }
        }

        let mut deriv_table = vec![Vec::new(); nvars];
        if order >= 1 {
            for (v, table) in deriv_table.iter_mut().enumerate() {
                for (dst, a) in indices.iter().enumerate() {
                    let deg: usize = a.iter().map(|&x| x as usize).sum();
                    if deg + 1 > order {
                        continue;
                    }
                    let mut up = a.clone();
                    up[v] += 1;
                    let src = rank[&up];
                    table.push((src as u32, dst as u32, up[v] as f64));
                }
            }
        }

        Layout { nvars, order, indices, rank, degree_start, mul_table, deriv_table }
    }

    /// Number of coefficients, `C(d+K, K)`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True only for a layout without coefficients, which cannot occur.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Multi-index stored at a rank.
    pub fn multi_index(&self, rank: usize) -> &[u8] {
        &self.indices[rank]
    }

    /// Rank of a multi-index, if it is within the truncation order.
    pub fn rank_of(&self, alpha: &[u8]) -> Option<usize> {
        self.rank.get(alpha).copied()
    }

    /// Number of coefficients with total degree at most `deg`.
    pub fn prefix_len(&self, deg: usize) -> usize {
        self.degree_start[deg.min(self.order) + 1]
    }
}

fn enumerate_degree(nvars: usize, remaining: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == nvars {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k as u8;
        enumerate_degree(nvars, remaining - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone()
}

/// Truncated Taylor expansion of a scalar function at an implicit base point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(d={}, K={}, ", self.nvars(), self.order())?;
        f.debug_list().entries(self.coeffs.iter()).finish()?;
        write!(f, ")")
    }
}

impl Jet {
    /// Jet of a constant function.
    pub fn constant(value: f64, nvars: usize, order: usize) -> Jet {
        let layout = layout(nvars, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// Jet of zero.
    pub fn zero(nvars: usize, order: usize) -> Jet {
        Jet::constant(0.0, nvars, order)
    }

    /// Jet of the coordinate function `u_i` at `u_i = value` (index is 1-based).
    pub fn seed_variable(index: usize, value: f64, nvars: usize, order: usize) -> Result<Jet> {
        if nvars == 0 || nvars > MAX_VARS {
            return Err(Error::Dimension(format!("jet variable count {nvars} outside 1..={MAX_VARS}")));
        }
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Dimension(format!("jet order {order} outside 1..={MAX_ORDER}")));
        }
        if index == 0 || index > nvars {
            return Err(Error::IndexOutOfRange { index, len: nvars });
        }
        Ok(Jet::seed0(index - 1, value, nvars, order))
    }

    /// Zero-based seed used internally; no validation beyond debug assertions.
    pub(crate) fn seed0(var: usize, value: f64, nvars: usize, order: usize) -> Jet {
        debug_assert!(var < nvars);
        let mut j = Jet::constant(value, nvars, order);
        if order >= 1 {
            let mut alpha = vec![0u8; nvars];
            alpha[var] = 1;
            let r = j.layout.rank_of(&alpha).expect("degree-1 index");
            j.coeffs[r] = 1.0;
        }
        j
    }

    /// Jets of all coordinates at a point, each seeded in its own direction.
    pub fn seed_all(point: &[f64], order: usize) -> Vec<Jet> {
        let d = point.len();
        point.iter().enumerate().map(|(i, &v)| Jet::seed0(i, v, d, order)).collect()
    }

    /// Build a jet from raw coefficients in graded order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        let layout = layout(nvars, order);
        if coeffs.len() != layout.len() {
            return Err(Error::Dimension(format!(
                "expected {} jet coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout, coeffs })
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Order-0 coefficient.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient `f_α`.
    pub fn coefficient(&self, alpha: &[u8]) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.coeffs[self.layout.rank_of(alpha).unwrap()])
    }

    /// The partial derivative `∂^α f = α! f_α`.
    pub fn extract_partial(&self, alpha: &[u8]) -> Result<f64> {
        let c = self.coefficient(alpha)?;
        let fact: f64 = alpha.iter().map(|&k| factorial(k as usize)).product();
        Ok(c * fact)
    }

    fn check_alpha(&self, alpha: &[u8]) -> Result<()> {
        if alpha.len() != self.nvars() {
            return Err(Error::Dimension(format!(
                "multi-index has {} entries, jet has {} variables",
                alpha.len(),
                self.nvars()
            )));
        }
        let deg: usize = alpha.iter().map(|&k| k as usize).sum();
        if deg > self.order() {
            return Err(Error::OrderExceeded { requested: deg, order: self.order() });
        }
        Ok(())
    }

    /// First partial derivative with respect to every variable.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars())
            .map(|v| if self.order() >= 1 { self.coeffs[1 + v] } else { 0.0 })
            .collect()
    }

    /// Jet of `∂f/∂u_v` (zero-based `v`); its order is one less.
    pub fn derivative(&self, v: usize) -> Jet {
        let k = self.order();
        if k == 0 {
            return Jet::zero(self.nvars(), 0);
        }
        let lower = layout(self.nvars(), k - 1);
        let mut coeffs = vec![0.0; lower.len()];
        for &(src, dst, fac) in &self.layout.deriv_table[v] {
            coeffs[dst as usize] = fac * self.coeffs[src as usize];
        }
        Jet { layout: lower, coeffs }
    }

    /// Drop all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let lower = layout(self.nvars(), order);
        let coeffs = self.coeffs[..lower.len()].to_vec();
        Jet { layout: lower, coeffs }
    }

    fn common(&self, other: &Jet) -> usize {
        assert_eq!(self.nvars(), other.nvars(), "jet variable count mismatch");
        self.order().min(other.order())
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let k = self.common(other);
        let lay = if self.order() == k { self.layout.clone() } else { other.layout.clone() };
        let coeffs = (0..lay.len()).map(|i| f(self.coeffs[i], other.coeffs[i])).collect();
        Jet { layout: lay, coeffs }
    }

    /// Truncated product.
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let k = self.common(other);
        let lay = if self.order() == k { self.layout.clone() } else { other.layout.clone() };
        let mut coeffs = vec![0.0; lay.len()];
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &(i, j, r) in &lay.mul_table {
            coeffs[r as usize] += a[i as usize] * b[j as usize];
        }
        Jet { layout: lay, coeffs }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Nilpotent part (the jet with its order-0 coefficient removed).
    fn nilpotent(&self) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        h
    }

    /// Evaluate `Σ_k c_k h^k` with `h` the nilpotent part of `self`.
    fn compose(&self, series: &[f64]) -> Jet {
        let h = self.nilpotent();
        let k = self.order();
        let mut acc = Jet::constant(series[k], self.nvars(), k);
        for c in series[..k].iter().rev() {
            acc = acc.mul_jet(&h).add_scalar(*c);
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let a = self.value().exp();
        let series: Vec<f64> = (0..=self.order()).map(|k| a / factorial(k)).collect();
        self.compose(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::Domain(format!("log of non-positive value {a}")));
        }
        let mut series = vec![a.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * a.powi(k as i32)));
        }
        Ok(self.compose(&series))
    }

    /// Real power `a^r` for positive `a` via the binomial series.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let a = self.value();
        if !(a > 0.0) {
            return Err(Error::Domain(format!("real power of non-positive value {a}")));
        }
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                binom *= (r - (k as f64 - 1.0)) / k as f64;
            }
            series.push(binom * a.powf(r - k as f64));
        }
        Ok(self.compose(&series))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a < 0.0 {
            return Err(Error::Domain(format!("sqrt of negative value {a}")));
        }
        if a == 0.0 {
            if self.coeffs.iter().all(|&c| c == 0.0) {
                return Ok(self.clone());
            }
            return Err(Error::Domain("sqrt is not differentiable at 0".into()));
        }
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(Error::Domain(format!("division by {a}")));
        }
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut t = 1.0 / a;
        for _ in 0..=self.order() {
            series.push(t);
            t *= -1.0 / a;
        }
        Ok(self.compose(&series))
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.order()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        let series: Vec<f64> = (0..=self.order()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose(&series)
    }

    pub fn tan(&self) -> Result<Jet> {
        let c = self.cos();
        if c.value().abs() < 1e-300 {
            return Err(Error::Domain("tan at a pole".into()));
        }
        self.sin().div_jet(&c)
    }

    pub fn abs(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 {
            return Err(Error::Domain("abs is not differentiable at 0".into()));
        }
        Ok(if a > 0.0 { self.clone() } else { -self })
    }

    /// Integer power by repeated squaring; negative exponents go through `recip`.
    pub fn powi(&self, e: i64) -> Result<Jet> {
        if e < 0 {
            return self.recip()?.powi(-e);
        }
        let mut result = Jet::constant(1.0, self.nvars(), self.order());
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    /// Largest absolute coefficient difference (orders truncated to the smaller).
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        let k = self.common(other);
        let n = layout(self.nvars(), k).len();
        (0..n).map(|i| (self.coeffs[i] - other.coeffs[i]).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}
impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}
impl Add<&Jet> for Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        &self + rhs
    }
}
impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}
impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}
impl Sub<&Jet> for Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        &self - rhs
    }
}
impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}
impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}
impl Mul<&Jet> for Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}
impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order() >= self.order() {
            assert_eq!(self.nvars(), rhs.nvars(), "jet variable count mismatch");
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a += b;
            }
        } else {
            *self = &*self + rhs;
        }
    }
}
impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order() >= self.order() {
            assert_eq!(self.nvars(), rhs.nvars(), "jet variable count mismatch");
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a -= b;
            }
        } else {
            *self = &*self - rhs;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_count_is_binomial() {
        for d in 1..6 {
            for k in 0..=MAX_ORDER {
                let n = Jet::zero(d, k).coeffs().len();
                let expect = (1..=k).fold(1usize, |acc, i| acc * (d + i) / i);
                assert_eq!(n, expect);
            }
        }
    }

    #[test]
    fn seed_and_square() {
        let u = Jet::seed_variable(1, 3.0, 2, 2).unwrap();
        assert_eq!(u.coefficient(&[0, 0]).unwrap(), 3.0);
        assert_eq!(u.coefficient(&[1, 0]).unwrap(), 1.0);
        let sq = &u * &u;
        assert_eq!(sq.coefficient(&[0, 0]).unwrap(), 9.0);
        assert_eq!(sq.coefficient(&[1, 0]).unwrap(), 6.0);
        assert_eq!(sq.coefficient(&[2, 0]).unwrap(), 1.0);
        assert_eq!(sq.extract_partial(&[2, 0]).unwrap(), 2.0);
        assert_eq!(sq.extract_partial(&[0, 0]).unwrap(), 9.0);
        assert!(Jet::seed_variable(3, 1.0, 2, 2).is_err());
        assert!(sq.extract_partial(&[2, 1]).is_err());
    }

    #[test]
    fn mixed_product() {
        let u = Jet::seed_variable(1, 2.0, 2, 2).unwrap();
        let v = Jet::seed_variable(2, 5.0, 2, 2).unwrap();
        let p = &u * &v;
        assert_eq!(p.coefficient(&[1, 1]).unwrap(), 1.0);
        assert_eq!(p.extract_partial(&[1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn trilinear_partial() {
        let s = Jet::seed_all(&[0.3, -1.2, 2.0], 3);
        let p = &(&s[0] * &s[1]) * &s[2];
        assert_eq!(p.extract_partial(&[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn sqrt_first_order() {
        let u = Jet::seed_variable(1, 4.0, 1, 3).unwrap();
        let r = u.sqrt().unwrap();
        assert!((r.coefficient(&[1]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn derivative_and_truncate() {
        let s = Jet::seed_all(&[1.5, 0.5], 4);
        let f = (&s[0] * &s[0]) * &s[1];
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 3);
        assert!((fx.value() - 2.0 * 1.5 * 0.5).abs() < 1e-15);
        assert!((fx.extract_partial(&[1, 1]).unwrap() - 2.0).abs() < 1e-15);
        let t = f.truncate(2);
        assert_eq!(t.coeffs(), &f.coeffs()[..t.coeffs().len()]);
    }

    #[test]
    fn univariate_series_match_closed_forms() {
        let x = Jet::seed_variable(1, 0.7, 1, 5).unwrap();
        let e = x.exp();
        let l = x.ln().unwrap();
        let s = x.sin();
        let c = x.cos();
        let t = x.tan().unwrap();
        for k in 0..=5u8 {
            let dk = |f: &Jet| f.extract_partial(&[k]).unwrap();
            assert!((dk(&e) - 0.7f64.exp()).abs() < 1e-12);
            let sin_k = [0.7f64.sin(), 0.7f64.cos(), -0.7f64.sin(), -0.7f64.cos()][k as usize % 4];
            assert!((dk(&s) - sin_k).abs() < 1e-12);
            let cos_k = [0.7f64.cos(), -0.7f64.sin(), -0.7f64.cos(), 0.7f64.sin()][k as usize % 4];
            assert!((dk(&c) - cos_k).abs() < 1e-12);
            if k >= 1 {
                let lk = (-1f64).powi(k as i32 - 1) * factorial(k as usize - 1) / 0.7f64.powi(k as i32);
                assert!((dk(&l) - lk).abs() < 1e-9 * lk.abs().max(1.0));
            }
        }
        let sec2 = 1.0 / 0.7f64.cos().powi(2);
        assert!((t.extract_partial(&[1]).unwrap() - sec2).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let x = Jet::seed_variable(1, -1.0, 1, 2).unwrap();
        assert!(x.ln().is_err());
        assert!(x.sqrt().is_err());
        assert!(Jet::seed_variable(1, 0.0, 1, 2).unwrap().abs().is_err());
        assert!(Jet::seed_variable(1, 0.0, 1, 2).unwrap().recip().is_err());
        assert_eq!(x.abs().unwrap().value(), 1.0);
    }

    #[test]
    fn negative_integer_power() {
        let x = Jet::seed_variable(1, 2.0, 1, 3).unwrap();
        let p = x.powi(-2).unwrap();
        assert!((p.value() - 0.25).abs() < 1e-15);
        assert!((p.extract_partial(&[1]).unwrap() + 0.25).abs() < 1e-15);
        let q = Jet::seed_variable(1, -2.0, 1, 3).unwrap().powi(3).unwrap();
        assert!((q.value() + 8.0).abs() < 1e-15);
    }
}
