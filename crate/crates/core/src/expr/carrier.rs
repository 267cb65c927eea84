use crate::error::{Error, Result};
use crate::jet::Jet;

/// Scalar type an expression can be evaluated over.
pub trait Carrier: Clone {
    /// A constant of the same kind (same jet shape) as `self`.
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn powi(&self, k: i64) -> Result<Self>;
    fn sqrt(&self) -> Result<Self>;
    fn exp(&self) -> Result<Self>;
    fn log(&self) -> Result<Self>;
    fn sin(&self) -> Result<Self>;
    fn cos(&self) -> Result<Self>;
    fn tan(&self) -> Result<Self>;
    fn abs(&self) -> Result<Self>;
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} produced a non-finite value")))
    }
}

impl Carrier for f64 {
    fn constant_like(&self, c: f64) -> f64 {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn div(&self, o: &f64) -> Result<f64> {
        if *o == 0.0 {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(self / o)
    }
    fn powi(&self, k: i64) -> Result<f64> {
        if k < 0 && *self == 0.0 {
            return Err(Error::Domain("negative power of zero".into()));
        }
        finite(f64::powi(*self, k as i32), "power")
    }
    fn sqrt(&self) -> Result<f64> {
        if *self < 0.0 {
            return Err(Error::Domain(format!("sqrt of negative value {self}")));
        }
        Ok(f64::sqrt(*self))
    }
    fn exp(&self) -> Result<f64> {
        finite(f64::exp(*self), "exp")
    }
    fn log(&self) -> Result<f64> {
        if *self <= 0.0 {
            return Err(Error::Domain(format!("log of non-positive value {self}")));
        }
        Ok(f64::ln(*self))
    }
    fn sin(&self) -> Result<f64> {
        Ok(f64::sin(*self))
    }
    fn cos(&self) -> Result<f64> {
        Ok(f64::cos(*self))
    }
    fn tan(&self) -> Result<f64> {
        finite(f64::tan(*self), "tan")
    }
    fn abs(&self) -> Result<f64> {
        Ok(f64::abs(*self))
    }
}

impl Carrier for Jet {
    fn constant_like(&self, c: f64) -> Jet {
        Jet::constant(c, self.nvars(), self.order())
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn add(&self, o: &Jet) -> Jet {
        self + o
    }
    fn sub(&self, o: &Jet) -> Jet {
        self - o
    }
    fn mul(&self, o: &Jet) -> Jet {
        self * o
    }
    fn neg(&self) -> Jet {
        -self
    }
    fn div(&self, o: &Jet) -> Result<Jet> {
        self.div_jet(o)
    }
    fn powi(&self, k: i64) -> Result<Jet> {
        Jet::powi(self, k)
    }
    fn sqrt(&self) -> Result<Jet> {
        Jet::sqrt(self)
    }
    fn exp(&self) -> Result<Jet> {
        Ok(Jet::exp(self))
    }
    fn log(&self) -> Result<Jet> {
        self.ln()
    }
    fn sin(&self) -> Result<Jet> {
        Ok(Jet::sin(self))
    }
    fn cos(&self) -> Result<Jet> {
        Ok(Jet::cos(self))
    }
    fn tan(&self) -> Result<Jet> {
        Jet::tan(self)
    }
    fn abs(&self) -> Result<Jet> {
        Jet::abs(self)
    }
}
