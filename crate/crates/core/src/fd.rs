//! Central finite-difference oracle.
//!
//! This module exists to cross-check the jet engine. Nothing in the geometry
//! pipeline calls it.

use crate::error::{Error, Result};
use crate::expr::ScalarField;

/// Step configuration for [`fd_oracle`].
#[derive(Debug, Clone, Copy)]
pub struct FdSpec {
    /// Base step `h`; the step used for a partial of total order `k` is
    /// `h · 10^((k-1)/2)`.
    pub h: f64,
    /// Number of Richardson extrapolation levels over the steps
    /// `h, h/2, h/4, ...`; each level removes the next even power of `h`.
    pub richardson: u8,
}

impl Default for FdSpec {
    fn default() -> Self {
        FdSpec { h: 1e-3, richardson: 3 }
    }
}

impl FdSpec {
    pub fn step_for_order(&self, k: usize) -> f64 {
        self.h * 10f64.powf((k.max(1) as f64 - 1.0) / 2.0)
    }
}

/// Approximate `∂^α f` at `point` by nested central differences (`|α| ≤ 3`).
pub fn fd_oracle(f: &ScalarField, point: &[f64], alpha: &[u8], spec: FdSpec) -> Result<f64> {
    fd_generic(&|p: &[f64]| f.value_at(p), point, alpha, spec)
}

/// Same as [`fd_oracle`] for an arbitrary closure.
pub fn fd_generic(f: &dyn Fn(&[f64]) -> Result<f64>, point: &[f64], alpha: &[u8], spec: FdSpec) -> Result<f64> {
    if !(spec.h > 0.0) {
        return Err(Error::Domain("finite-difference step must be positive".into()));
    }
    if alpha.len() != point.len() {
        return Err(Error::Dimension(format!("multi-index length {} vs point length {}", alpha.len(), point.len())));
    }
    let order: usize = alpha.iter().map(|&a| a as usize).sum();
    if order > 3 {
        return Err(Error::OrderExceeded { requested: order, order: 3 });
    }
    let h = spec.step_for_order(order);
    let mut pt = point.to_vec();
    let levels = if order == 0 { 0 } else { spec.richardson as usize };
    let mut table = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        table.push(nested(f, &mut pt, &mut alpha.to_vec(), h / (1u32 << k) as f64)?);
    }
    for level in 1..=levels {
        let factor = 4f64.powi(level as i32);
        for k in (level..=levels).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    Ok(table[levels])
}

fn nested(f: &dyn Fn(&[f64]) -> Result<f64>, pt: &mut [f64], alpha: &mut [u8], h: f64) -> Result<f64> {
    let Some(v) = alpha.iter().position(|&a| a > 0) else {
        return f(pt);
    };
    alpha[v] -= 1;
    let x0 = pt[v];
    pt[v] = x0 + h;
    let plus = nested(f, pt, alpha, h);
    pt[v] = x0 - h;
    let minus = nested(f, pt, alpha, h);
    pt[v] = x0;
    alpha[v] += 1;
    Ok((plus? - minus?) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::{parse, VarContext, Variance};

    #[test]
    fn quadratic_and_sine() {
        let c = Arc::new(VarContext::new(1, 1, Variance::Vector).unwrap());
        let f = parse("y1^2", &c).unwrap();
        let spec = FdSpec { h: 1e-3, richardson: 0 };
        assert!((fd_oracle(&f, &[0.0, 0.7], &[0, 2], spec).unwrap() - 2.0).abs() < 1e-6);
        let s = parse("sin(x1)", &c).unwrap();
        let spec = FdSpec { h: 1e-4, richardson: 0 };
        assert!((fd_oracle(&s, &[0.0, 0.0], &[1, 0], spec).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn domain_violation_propagates() {
        let c = Arc::new(VarContext::new(1, 1, Variance::Vector).unwrap());
        let f = parse("log(x1)", &c).unwrap();
        assert!(fd_oracle(&f, &[1e-5, 0.0], &[1, 0], FdSpec::default()).is_err());
    }
}
