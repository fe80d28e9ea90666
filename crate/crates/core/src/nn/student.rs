use rand::Rng;

use super::{loss::sigmoid, Matrix, Mlp, MlpForward, Parameters, Real};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, NodeId};

/// Student link predictor: an MLP node encoder with a Hadamard decoder,
/// `q(i, j) = sigmoid(u · (z_i ⊙ z_j) + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentModel<T = f32> {
    pub encoder: Mlp<T>,
    pub decoder_weight: Vec<T>,
    pub decoder_bias: T,
}

impl<T: Real> StudentModel<T> {
    /// Encoder `[input_dim, hidden; layers]` with a freshly initialised decoder.
    pub fn new(input_dim: usize, hidden: usize, layers: usize, rng: &mut impl Rng) -> Result<Self> {
        if layers == 0 {
            return Err(Error::invalid("student encoder needs at least one layer"));
        }
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat(hidden).take(layers));
        let encoder = Mlp::new(&dims, rng)?;
        let bound = 1.0 / (hidden as f64).sqrt();
        let decoder_weight = (0..hidden).map(|_| T::of(rng.gen_range(-bound..bound))).collect();
        Ok(StudentModel {
            encoder,
            decoder_weight,
            decoder_bias: T::zero(),
        })
    }

    pub fn from_parts(encoder: Mlp<T>, decoder_weight: Vec<T>, decoder_bias: T) -> Result<Self> {
        if decoder_weight.len() != encoder.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: encoder.output_dim(),
                actual: decoder_weight.len(),
            });
        }
        Ok(StudentModel {
            encoder,
            decoder_weight,
            decoder_bias,
        })
    }

    pub fn zeros_like(&self) -> Self {
        StudentModel {
            encoder: self.encoder.zeros_like(),
            decoder_weight: vec![T::zero(); self.decoder_weight.len()],
            decoder_bias: T::zero(),
        }
    }

    pub fn cast<U: Real>(&self) -> StudentModel<U> {
        StudentModel {
            encoder: self.encoder.cast(),
            decoder_weight: self.decoder_weight.iter().map(|v| U::of(v.f64())).collect(),
            decoder_bias: U::of(self.decoder_bias.f64()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    /// Encodes a batch of feature rows.
    pub fn embed(&self, x: Matrix<T>) -> Result<MlpForward<T>> {
        self.encoder.forward(x)
    }

    /// Decoder logit for two embeddings.
    #[inline]
    pub fn logit(&self, za: &[T], zb: &[T]) -> T {
        let mut s = self.decoder_bias;
        for ((&u, &a), &b) in self.decoder_weight.iter().zip(za).zip(zb) {
            s += u * (a * b);
        }
        s
    }

    /// Link probability for one pair of feature vectors. Symmetric in its
    /// arguments.
    pub fn predict(&self, xi: &[T], xj: &[T]) -> Result<f64> {
        for x in [xi, xj] {
            if x.len() != self.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    actual: x.len(),
                });
            }
        }
        let mut data = xi.to_vec();
        data.extend_from_slice(xj);
        let z = self.embed(Matrix::from_vec(2, xi.len(), data))?.into_output();
        Ok(sigmoid(self.logit(z.row(0), z.row(1)).f64()))
    }

    /// Back-propagates per-pair logit gradients into `grads`.
    ///
    /// `pairs` index rows of the forward batch; `d_logits[p]` is the loss
    /// gradient with respect to the logit of pair `p`.
    pub fn backward_pairs(
        &self,
        fwd: &MlpForward<T>,
        pairs: &[(usize, usize)],
        d_logits: &[T],
        grads: &mut StudentModel<T>,
    ) {
        let z = fwd.output();
        let mut dz = Matrix::zeros(z.rows(), z.cols());
        for (&(a, b), &g) in pairs.iter().zip(d_logits) {
            if g == T::zero() {
                continue;
            }
            grads.decoder_bias += g;
            let (za, zb) = (z.row(a), z.row(b));
            for k in 0..za.len() {
                let u = self.decoder_weight[k];
                grads.decoder_weight[k] += g * za[k] * zb[k];
                dz.row_mut(a)[k] += g * u * zb[k];
                dz.row_mut(b)[k] += g * u * za[k];
            }
        }
        self.encoder.backward(fwd, dz, &mut grads.encoder);
    }

    /// Embeds every node, for evaluation.
    pub fn embed_all(&self, x: &FeatureMatrix) -> Result<Embeddings<T>> {
        const CHUNK: usize = 2048;
        if x.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.dim(),
            });
        }
        let nodes: Vec<NodeId> = (0..x.num_nodes() as NodeId).collect();
        let mut data = Vec::with_capacity(x.num_nodes() * self.encoder.output_dim());
        for chunk in nodes.chunks(CHUNK) {
            let out = self.embed(Matrix::gather(x, chunk))?.into_output();
            data.extend_from_slice(out.data());
        }
        Ok(Embeddings {
            z: Matrix::from_vec(x.num_nodes(), self.encoder.output_dim(), data),
            decoder_weight: self.decoder_weight.clone(),
            decoder_bias: self.decoder_bias,
        })
    }
}

impl<T: Real> Parameters<T> for StudentModel<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T])) {
        self.encoder.visit(f);
        f(&self.decoder_weight);
        f(std::slice::from_ref(&self.decoder_bias));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        self.encoder.visit_mut(f);
        f(&mut self.decoder_weight);
        f(std::slice::from_mut(&mut self.decoder_bias));
    }
}

/// Precomputed node embeddings of a frozen student.
#[derive(Debug, Clone)]
pub struct Embeddings<T> {
    z: Matrix<T>,
    decoder_weight: Vec<T>,
    decoder_bias: T,
}

impl<T: Real> Embeddings<T> {
    pub fn num_nodes(&self) -> usize {
        self.z.rows()
    }

    pub fn logit(&self, i: NodeId, j: NodeId) -> f64 {
        let (za, zb) = (self.z.row(i as usize), self.z.row(j as usize));
        let mut s = self.decoder_bias.f64();
        for ((&u, &a), &b) in self.decoder_weight.iter().zip(za).zip(zb) {
            s += (u * (a * b)).f64();
        }
        s
    }

    pub fn prob(&self, i: NodeId, j: NodeId) -> f64 {
        sigmoid(self.logit(i, j))
    }

    pub fn score_pairs(&self, pairs: &[(NodeId, NodeId)]) -> Vec<f64> {
        pairs.iter().map(|&(i, j)| self.prob(i, j)).collect()
    }
}
