//! Dense row-major arrays of arbitrary rank.

use std::ops::{Index, IndexMut};

use serde::{Serialize, Serializer};

use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Clone> Tensor<T> {
    pub fn filled(shape: &[usize], v: T) -> Tensor<T> {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![v; len] }
    }
}

impl<T> Tensor<T> {
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Tensor<T> {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn try_from_fn<E>(shape: &[usize], mut f: impl FnMut(&[usize]) -> Result<T, E>) -> Result<Tensor<T>, E> {
        let mut err = None;
        let t = Tensor::from_fn(shape, |i| match f(i) {
            Ok(v) => Some(v),
            Err(e) => {
                if err.is_none() {
                    err = Some(e);
                }
                None
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(Tensor { shape: t.shape, data: t.data.into_iter().map(|v| v.unwrap()).collect() })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (i, (&k, &s)) in idx.iter().zip(&self.shape).enumerate() {
            debug_assert!(k < s, "index {k} out of bounds {s} on axis {i}");
            off = off * s + k;
        }
        off
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(f).collect() }
    }

    /// Iterate over `(multi-index, value)` pairs in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = (Vec<usize>, &T)> {
        let shape = self.shape.clone();
        self.data.iter().enumerate().map(move |(mut flat, v)| {
            let mut idx = vec![0; shape.len()];
            for d in (0..shape.len()).rev() {
                idx[d] = flat % shape[d];
                flat /= shape[d];
            }
            (idx, v)
        })
    }
}

impl<T> Index<&[usize]> for Tensor<T> {
    type Output = T;
    fn index(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }
}

impl<T> IndexMut<&[usize]> for Tensor<T> {
    fn index_mut(&mut self, idx: &[usize]) -> &mut T {
        let o = self.offset(idx);
        &mut self.data[o]
    }
}

impl<T, const N: usize> Index<[usize; N]> for Tensor<T> {
    type Output = T;
    fn index(&self, idx: [usize; N]) -> &T {
        &self.data[self.offset(&idx)]
    }
}

impl<T, const N: usize> IndexMut<[usize; N]> for Tensor<T> {
    fn index_mut(&mut self, idx: [usize; N]) -> &mut T {
        let o = self.offset(&idx);
        &mut self.data[o]
    }
}

impl Tensor<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor<f64>) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Nested JSON-style rows.
    pub fn to_nested(&self) -> serde_json::Value {
        fn build(shape: &[usize], data: &[f64]) -> serde_json::Value {
            if shape.is_empty() {
                return crate::report::num_value(data[0]);
            }
            let stride: usize = shape[1..].iter().product();
            serde_json::Value::Array((0..shape[0]).map(|i| build(&shape[1..], &data[i * stride..(i + 1) * stride])).collect())
        }
        build(&self.shape, &self.data)
    }
}

impl Tensor<Jet> {
    /// Order-0 values.
    pub fn values(&self) -> Tensor<f64> {
        self.map(|j| j.value())
    }

    /// Jets of `∂/∂u_v` of every entry.
    pub fn derivative(&self, v: usize) -> Tensor<Jet> {
        self.map(|j| j.derivative(v))
    }
}

impl Serialize for Tensor<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = Tensor::from_fn(&[2, 3, 4], |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64);
        assert_eq!(t[[1, 2, 3]], 123.0);
        assert_eq!(t.data()[5], 11.0);
        let (idx, v) = t.indexed().nth(17).unwrap();
        assert_eq!(t[idx.as_slice()], *v);
    }
}
