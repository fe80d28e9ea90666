//! Feedforward network primitives with hand-derived gradients.
//!
//! Everything is generic over [`Real`] so training can run in `f32` while
//! gradient checks run the very same code in `f64`.

mod adam;
pub mod checkpoint;
mod loss;
mod mlp;
mod student;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

pub use adam::{clip_grad_norm, AdamState};
pub use loss::{bce_loss, bce_with_logit, sigmoid, softplus, BCE_CLAMP};
pub use mlp::{Mlp, MlpForward};
pub use student::{Embeddings, StudentModel};

use crate::graph::{FeatureMatrix, NodeId};

/// Floating point scalar used by the network code.
pub trait Real:
    num_traits::Float
    + Default
    + Debug
    + Send
    + Sync
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + 'static
{
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

/// Anything exposing its trainable tensors as flat slices in a fixed order.
///
/// Gradients use the same type as the parameters they belong to.
pub trait Parameters<T: Real> {
    fn visit(&self, f: &mut dyn FnMut(&[T]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s| n += s.len());
        n
    }

    /// Flattened copy of every parameter.
    fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |s| out.extend_from_slice(s));
        out
    }

    fn fill(&mut self, value: T) {
        self.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v = value));
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |s| ok &= s.iter().all(|v| v.is_finite()));
        ok
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
        Matrix { rows, cols, data }
    }

    /// Copies the feature rows of `nodes`, converted to `T`.
    pub fn gather(x: &FeatureMatrix, nodes: &[NodeId]) -> Self {
        let mut data = Vec::with_capacity(nodes.len() * x.dim());
        for &n in nodes {
            data.extend(x.row(n as usize).iter().map(|&v| T::of(f64::from(v))));
        }
        Matrix::from_vec(nodes.len(), x.dim(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[inline]
pub(crate) fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    // Eight independent partial sums let the compiler vectorise the loop.
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = acc.iter().copied().sum::<T>();
    for k in chunks * 8..a.len() {
        s += a[k] * b[k];
    }
    s
}
