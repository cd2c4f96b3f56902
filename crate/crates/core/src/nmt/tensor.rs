//! Row-major dense matrices and the handful of BLAS-2 kernels the model needs.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
        Tensor { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// `y += A x`
pub fn gemv_add(a: &Tensor, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.cols, x.len());
    debug_assert_eq!(a.rows, y.len());
    for (r, yr) in y.iter_mut().enumerate() {
        *yr += dot(a.row(r), x);
    }
}

/// `x += A^T y`
pub fn gemv_t_add(a: &Tensor, y: &[f64], x: &mut [f64]) {
    debug_assert_eq!(a.cols, x.len());
    debug_assert_eq!(a.rows, y.len());
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        axpy(yr, a.row(r), x);
    }
}

/// `A += y x^T`
pub fn outer_add(a: &mut Tensor, y: &[f64], x: &[f64]) {
    debug_assert_eq!(a.cols, x.len());
    debug_assert_eq!(a.rows, y.len());
    for (r, &yr) in y.iter().enumerate() {
        if yr == 0.0 {
            continue;
        }
        axpy(yr, x, a.row_mut(r));
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
