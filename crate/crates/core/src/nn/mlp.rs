use rand::Rng;

use super::{axpy, dot, Matrix, Parameters, Real};
use crate::error::{Error, Result};

/// Multi-layer perceptron: affine layers with ReLU between them and an
/// identity output.
///
/// Layer `l` maps `dims[l]` inputs to `dims[l + 1]` outputs. Its weight is
/// stored input-major (`w[k * out + o]`) so that the forward pass can skip
/// zero inputs, which matters for sparse bag-of-words features.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    dims: Vec<usize>,
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
}

/// Activations of one batched forward pass.
///
/// `acts[0]` is the input, `acts[l + 1]` the output of layer `l` (after ReLU
/// for hidden layers).
#[derive(Debug, Clone)]
pub struct MlpForward<T> {
    acts: Vec<Matrix<T>>,
}

impl<T: Real> MlpForward<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.acts.last().unwrap()
    }

    pub fn into_output(mut self) -> Matrix<T> {
        self.acts.pop().unwrap()
    }

    /// Pre-ReLU values are not kept; hidden activations are.
    pub fn hidden(&self) -> &[Matrix<T>] {
        &self.acts[1..self.acts.len() - 1]
    }
}

impl<T: Real> Mlp<T> {
    /// Kaiming-style uniform init, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`; zero biases.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut m = Self::zeros(dims)?;
        for (l, w) in m.weights.iter_mut().enumerate() {
            let bound = (6.0 / dims[l] as f64).sqrt();
            for v in w.iter_mut() {
                *v = T::of(rng.gen_range(-bound..bound));
            }
        }
        Ok(m)
    }

    /// All-zero network with the given shape.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("an MLP needs at least an input and an output dimension"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::invalid(format!("zero-width layer in {dims:?}")));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            weights: dims.windows(2).map(|w| vec![T::zero(); w[0] * w[1]]).collect(),
            biases: dims[1..].iter().map(|&d| vec![T::zero(); d]).collect(),
        })
    }

    /// Assembles a network from explicit tensors (input-major weights).
    pub fn from_parts(dims: Vec<usize>, weights: Vec<Vec<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        let shape = Self::zeros(&dims)?;
        for l in 0..shape.num_layers() {
            if weights.get(l).map(Vec::len) != Some(shape.weights[l].len()) {
                return Err(Error::DimensionMismatch {
                    expected: shape.weights[l].len(),
                    actual: weights.get(l).map_or(0, Vec::len),
                });
            }
            if biases.get(l).map(Vec::len) != Some(shape.biases[l].len()) {
                return Err(Error::DimensionMismatch {
                    expected: shape.biases[l].len(),
                    actual: biases.get(l).map_or(0, Vec::len),
                });
            }
        }
        if weights.len() != shape.num_layers() || biases.len() != shape.num_layers() {
            return Err(Error::invalid("layer count does not match dims"));
        }
        Ok(Mlp {
            dims,
            weights,
            biases,
        })
    }

    /// Same shape, all zeros. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.dims).unwrap()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn weight(&self, layer: usize) -> &[T] {
        &self.weights[layer]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut [T] {
        &mut self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &[T] {
        &self.biases[layer]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [T] {
        &mut self.biases[layer]
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Real>(&self) -> Mlp<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::of(x.f64())).collect();
        Mlp {
            dims: self.dims.clone(),
            weights: self.weights.iter().map(conv).collect(),
            biases: self.biases.iter().map(conv).collect(),
        }
    }

    /// Batched forward pass, keeping activations for [`Mlp::backward`].
    pub fn forward(&self, x: Matrix<T>) -> Result<MlpForward<T>> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x);
        for l in 0..self.num_layers() {
            let mut y = self.affine(l, acts.last().unwrap());
            if l + 1 < self.num_layers() {
                for v in y.data.iter_mut() {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
            }
            acts.push(y);
        }
        Ok(MlpForward { acts })
    }

    /// Forward pass for a single input vector.
    pub fn forward_one(&self, x: &[T]) -> Result<Vec<T>> {
        let m = Matrix::from_vec(1, x.len(), x.to_vec());
        Ok(self.forward(m)?.into_output().data)
    }

    fn affine(&self, l: usize, x: &Matrix<T>) -> Matrix<T> {
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        let (w, b) = (&self.weights[l], &self.biases[l]);
        let mut y = Matrix::zeros(x.rows(), n_out);
        for r in 0..x.rows() {
            let yr = y.row_mut(r);
            yr.copy_from_slice(b);
            for (k, &a) in x.row(r).iter().enumerate() {
                if a != T::zero() {
                    axpy(yr, a, &w[k * n_out..(k + 1) * n_out]);
                }
            }
        }
        debug_assert_eq!(x.cols(), n_in);
        y
    }

    /// Accumulates parameter gradients into `grads` given `d_out`, the loss
    /// gradient with respect to the network output.
    pub fn backward(&self, fwd: &MlpForward<T>, d_out: Matrix<T>, grads: &mut Mlp<T>) {
        let mut delta = d_out;
        for l in (0..self.num_layers()).rev() {
            let x = &fwd.acts[l];
            let n_out = self.dims[l + 1];
            let (gw, gb) = (&mut grads.weights[l], &mut grads.biases[l]);
            for r in 0..x.rows() {
                let dr = delta.row(r);
                axpy(gb, T::one(), dr);
                for (k, &a) in x.row(r).iter().enumerate() {
                    if a != T::zero() {
                        axpy(&mut gw[k * n_out..(k + 1) * n_out], a, dr);
                    }
                }
            }
            if l == 0 {
                break;
            }
            // x is a ReLU output: the gradient passes only where x > 0.
            let w = &self.weights[l];
            let mut prev = Matrix::zeros(x.rows(), self.dims[l]);
            for r in 0..x.rows() {
                let dr = delta.row(r);
                let pr = prev.row_mut(r);
                for (k, &a) in x.row(r).iter().enumerate() {
                    if a > T::zero() {
                        pr[k] = dot(dr, &w[k * n_out..(k + 1) * n_out]);
                    }
                }
            }
            delta = prev;
        }
    }
}

impl<T: Real> Parameters<T> for Mlp<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T])) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            f(w);
            f(b);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            f(w);
            f(b);
        }
    }
}
