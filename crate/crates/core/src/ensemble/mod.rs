//! Gated ensemble of heuristic-distilled students.
//!
//! A gating MLP reads only the symmetric pair features `[x_i ⊙ x_j ; x_i + x_j]`
//! and emits one raw weight per student. The fused score is
//! `clamp(Σ_h w_h q_h, ε, 1 − ε)`, trained with BCE plus `λ · Σ_h |w_h|`
//! while the students stay frozen.

pub mod checkpoint;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::data::{sample_training_negatives, EdgeSplit};
use crate::error::{Error, Result};
use crate::eval::{hits_at_k, DEFAULT_K};
use crate::graph::{Edge, FeatureMatrix, Graph};
use crate::nn::{clip_grad_norm, AdamState, Embeddings, Matrix, Mlp, Parameters, Real, StudentModel};
use crate::seed;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_GATE_HIDDEN: usize = 128;

/// `[x_i ⊙ x_j ; x_i + x_j]`, invariant under swapping `i` and `j`.
pub fn gate_features<T: Real>(xi: &[T], xj: &[T]) -> Result<Vec<T>> {
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            actual: xj.len(),
        });
    }
    let mut out = Vec::with_capacity(2 * xi.len());
    out.extend(xi.iter().zip(xj).map(|(&a, &b)| a * b));
    out.extend(xi.iter().zip(xj).map(|(&a, &b)| a + b));
    Ok(out)
}

/// Gate input rows for a list of node pairs.
pub fn pair_feature_matrix<T: Real>(x: &FeatureMatrix, pairs: &[Edge]) -> Matrix<T> {
    let d = x.dim();
    let mut m = Matrix::zeros(pairs.len(), 2 * d);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let (xi, xj) = (x.row(i as usize), x.row(j as usize));
        let row = m.row_mut(r);
        for k in 0..d {
            let (a, b) = (xi[k], xj[k]);
            if a != 0.0 || b != 0.0 {
                row[k] = T::of(f64::from(a * b));
                row[d + k] = T::of(f64::from(a + b));
            }
        }
    }
    m
}

/// Clamped weighted sum of student probabilities.
#[inline]
pub fn fuse(w: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let s: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
    s.clamp(epsilon, 1.0 - epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateModel<T = f32> {
    pub mlp: Mlp<T>,
    /// Student labels in output order.
    pub labels: Vec<String>,
    pub epsilon: f64,
}

impl<T: Real> GateModel<T> {
    /// Gate MLP `[2F, hidden, H]`. The output layer starts near zero with bias
    /// `1/H`, so an untrained gate averages the students.
    pub fn new(feature_dim: usize, hidden: usize, labels: Vec<String>, rng: &mut impl Rng) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("gate needs at least one student"));
        }
        let h = labels.len();
        let mut mlp = Mlp::new(&[2 * feature_dim, hidden, h], rng)?;
        let last = mlp.num_layers() - 1;
        mlp.weight_mut(last).iter_mut().for_each(|w| *w *= T::of(0.01));
        mlp.bias_mut(last).iter_mut().for_each(|b| *b = T::of(1.0 / h as f64));
        Ok(GateModel {
            mlp,
            labels,
            epsilon: DEFAULT_EPSILON,
        })
    }

    pub fn num_students(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.mlp.input_dim() / 2
    }

    /// Raw per-student weights for one pair.
    pub fn weights(&self, xi: &[T], xj: &[T]) -> Result<Vec<f64>> {
        let f = gate_features(xi, xj)?;
        Ok(self.mlp.forward_one(&f)?.iter().map(|v| v.f64()).collect())
    }

    pub fn cast<U: Real>(&self) -> GateModel<U> {
        GateModel {
            mlp: self.mlp.cast(),
            labels: self.labels.clone(),
            epsilon: self.epsilon,
        }
    }
}

/// Fused link probability of one pair. Student passes run in parallel.
pub fn ensemble_predict(gate: &GateModel<f32>, students: &[StudentModel<f32>], xi: &[f32], xj: &[f32]) -> Result<f64> {
    if students.len() != gate.num_students() {
        return Err(Error::invalid(format!(
            "gate expects {} students, got {}",
            gate.num_students(),
            students.len()
        )));
    }
    let (w, q) = rayon::join(
        || gate.weights(xi, xj),
        || students.par_iter().map(|s| s.predict(xi, xj)).collect::<Result<Vec<f64>>>(),
    );
    Ok(fuse(&w?, &q?, gate.epsilon))
}

/// Frozen students (as node embeddings) plus a gate, for batch scoring.
pub struct Ensemble {
    pub gate: GateModel<f32>,
    pub students: Vec<Embeddings<f32>>,
}

const SCORE_CHUNK: usize = 1024;

impl Ensemble {
    pub fn new(gate: GateModel<f32>, students: &[StudentModel<f32>], x: &FeatureMatrix) -> Result<Self> {
        if students.len() != gate.num_students() {
            return Err(Error::invalid(format!(
                "gate expects {} students, got {}",
                gate.num_students(),
                students.len()
            )));
        }
        if gate.feature_dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: gate.feature_dim(),
                actual: x.dim(),
            });
        }
        let students = students.par_iter().map(|s| s.embed_all(x)).collect::<Result<_>>()?;
        Ok(Ensemble { gate, students })
    }

    /// Row-major `pairs × students` matrix of student probabilities.
    pub fn student_scores(&self, pairs: &[Edge]) -> Vec<f64> {
        student_matrix(&self.students, pairs)
    }

    pub fn score_pairs(&self, x: &FeatureMatrix, pairs: &[Edge]) -> Result<Vec<f64>> {
        let h = self.students.len();
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(SCORE_CHUNK) {
            let q = self.student_scores(chunk);
            let w = self.gate.mlp.forward(pair_feature_matrix(x, chunk))?.into_output();
            for r in 0..chunk.len() {
                let wr: Vec<f64> = w.row(r).iter().map(|v| v.f64()).collect();
                out.push(fuse(&wr, &q[r * h..(r + 1) * h], self.gate.epsilon));
            }
        }
        Ok(out)
    }

    /// Mean gate weight per student over `pairs`.
    pub fn mean_weights(&self, x: &FeatureMatrix, pairs: &[Edge]) -> Result<Vec<f64>> {
        let h = self.students.len();
        let mut acc = vec![0.0; h];
        for chunk in pairs.chunks(SCORE_CHUNK) {
            let w = self.gate.mlp.forward(pair_feature_matrix(x, chunk))?.into_output();
            for r in 0..chunk.len() {
                for (a, v) in acc.iter_mut().zip(w.row(r)) {
                    *a += v.f64();
                }
            }
        }
        Ok(acc.into_iter().map(|a| a / pairs.len().max(1) as f64).collect())
    }
}

fn student_matrix(students: &[Embeddings<f32>], pairs: &[Edge]) -> Vec<f64> {
    let mut q = Vec::with_capacity(pairs.len() * students.len());
    for &(i, j) in pairs {
        q.extend(students.iter().map(|s| s.prob(i, j)));
    }
    q
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GateLoss {
    pub bce: f64,
    /// Mean over examples of `Σ_h |w_h|`.
    pub l1: f64,
    pub total: f64,
}

/// Gate objective on a batch: mean BCE of the clamped fused score plus
/// `lambda` times the mean L1 norm of the gate outputs.
///
/// `q` is row-major `rows × H`. The clamp has zero gradient outside
/// `[ε, 1 − ε]`, and `|w|` uses the zero subgradient at 0.
pub fn gate_objective<T: Real>(
    mlp: &Mlp<T>,
    features: Matrix<T>,
    q: &[f64],
    labels: &[f64],
    lambda: f64,
    epsilon: f64,
    grads: Option<&mut Mlp<T>>,
) -> Result<GateLoss> {
    let n = features.rows();
    let h = mlp.output_dim();
    if labels.len() != n || q.len() != n * h {
        return Err(Error::DimensionMismatch {
            expected: n * h,
            actual: q.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("empty gate batch"));
    }
    let fwd = mlp.forward(features)?;
    let w = fwd.output();
    let inv = 1.0 / n as f64;
    let mut loss = GateLoss::default();
    let mut d_out = Matrix::<T>::zeros(n, h);
    for r in 0..n {
        let (wr, qr, y) = (w.row(r), &q[r * h..(r + 1) * h], labels[r]);
        let s: f64 = wr.iter().zip(qr).map(|(a, b)| a.f64() * b).sum();
        let f = s.clamp(epsilon, 1.0 - epsilon);
        loss.bce -= inv * (y * f.ln() + (1.0 - y) * (1.0 - f).ln());
        let ds = if s > epsilon && s < 1.0 - epsilon {
            (f - y) / (f * (1.0 - f))
        } else {
            0.0
        };
        let dr = d_out.row_mut(r);
        for k in 0..h {
            let wk = wr[k].f64();
            loss.l1 += inv * wk.abs();
            let sign = if wk > 0.0 {
                1.0
            } else if wk < 0.0 {
                -1.0
            } else {
                0.0
            };
            dr[k] = T::of(inv * (ds * qr[k] + lambda * sign));
        }
    }
    loss.total = loss.bce + lambda * loss.l1;
    if let Some(g) = grads {
        mlp.backward(&fwd, d_out, g);
    }
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub epsilon: f64,
    pub eval_k: usize,
    pub max_grad_norm: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            lambda: 0.1,
            lr: 1e-3,
            epochs: 100,
            batch_size: 1024,
            hidden: DEFAULT_GATE_HIDDEN,
            epsilon: DEFAULT_EPSILON,
            eval_k: DEFAULT_K,
            max_grad_norm: 1.0,
            patience: 0,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub const LAMBDA_GRID: [f64; 3] = [0.0, 0.1, 1.0];

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be finite and non-negative"));
        }
        if !(self.lr > 0.0) || self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 || self.eval_k == 0 {
            return Err(Error::invalid("lr, epochs, batch_size, hidden and eval_k must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) || !(self.max_grad_norm > 0.0) {
            return Err(Error::invalid("epsilon must lie in (0, 0.5) and max_grad_norm be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateEpochLog {
    pub epoch: usize,
    pub loss: GateLoss,
    pub valid_hits: f64,
}

impl GateEpochLog {
    pub const TSV_HEADER: &'static str = "epoch\tbce\tl1\ttotal\tvalid_hits";

    pub fn tsv(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.epoch, self.loss.bce, self.loss.l1, self.loss.total, self.valid_hits
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainedGate {
    pub gate: GateModel<f32>,
    pub history: Vec<GateEpochLog>,
    pub best_epoch: usize,
    pub best_valid: f64,
}

/// Trains the gate over at least two frozen students.
pub fn train_gate(
    g_train: &Graph,
    x: &FeatureMatrix,
    students: &[StudentModel<f32>],
    labels: &[String],
    split: &EdgeSplit,
    cfg: &EnsembleConfig,
) -> Result<TrainedGate> {
    if students.len() < 2 {
        return Err(Error::invalid(format!(
            "an ensemble needs at least 2 students, got {}",
            students.len()
        )));
    }
    train_gate_with(g_train, x, students, labels, split, cfg, &mut |_| {})
}

/// As [`train_gate`] but also accepts a single student (a gated rescaling
/// of that student) and reports every epoch.
pub fn train_gate_with(
    g_train: &Graph,
    x: &FeatureMatrix,
    students: &[StudentModel<f32>],
    labels: &[String],
    split: &EdgeSplit,
    cfg: &EnsembleConfig,
    on_epoch: &mut dyn FnMut(&GateEpochLog),
) -> Result<TrainedGate> {
    cfg.validate()?;
    if students.is_empty() || labels.len() != students.len() {
        return Err(Error::invalid("need one label per student and at least one student"));
    }
    x.check_rows(g_train.num_nodes())?;
    if split.train.is_empty() {
        return Err(Error::invalid("no training edges"));
    }
    if split.valid_neg.len() < cfg.eval_k || split.valid_pos.is_empty() {
        return Err(Error::invalid(format!(
            "validation needs positives and at least {} negatives",
            cfg.eval_k
        )));
    }
    let mut gate = GateModel::<f32>::new(
        x.dim(),
        cfg.hidden,
        labels.to_vec(),
        &mut seed::rng(seed::derive(cfg.seed, "gate-init")),
    )?;
    gate.epsilon = cfg.epsilon;
    let embeddings: Vec<Embeddings<f32>> = students.par_iter().map(|s| s.embed_all(x)).collect::<Result<_>>()?;

    let valid = |gate: &GateModel<f32>| -> Result<f64> {
        let score = |pairs: &[Edge]| -> Result<Vec<f64>> {
            let q = student_matrix(&embeddings, pairs);
            let w = gate.mlp.forward(pair_feature_matrix(x, pairs))?.into_output();
            let h = embeddings.len();
            Ok((0..pairs.len())
                .map(|r| {
                    let wr: Vec<f64> = w.row(r).iter().map(|v| v.f64()).collect();
                    fuse(&wr, &q[r * h..(r + 1) * h], gate.epsilon)
                })
                .collect())
        };
        hits_at_k(&score(&split.valid_pos)?, &score(&split.valid_neg)?, cfg.eval_k)
    };

    let mut grads = gate.mlp.zeros_like();
    let mut adam = AdamState::new(cfg.lr);
    let neg_seed = seed::derive(cfg.seed, "gate-negatives");
    let order_seed = seed::derive(cfg.seed, "gate-order");
    let mut best = (valid(&gate)?, 0usize, gate.clone());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut pos = split.train.clone();
    let n_batches = pos.len().div_ceil(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        let mut rng = seed::rng(seed::derive_index(order_seed, epoch as u64));
        pos.shuffle(&mut rng);
        let neg = sample_training_negatives(g_train, pos.len(), neg_seed, epoch as u64)?;
        let mut sum = GateLoss::default();
        for b in 0..n_batches {
            let lo = b * cfg.batch_size;
            let hi = ((b + 1) * cfg.batch_size).min(pos.len());
            let mut pairs = Vec::with_capacity(2 * (hi - lo));
            let mut labels = Vec::with_capacity(2 * (hi - lo));
            for i in lo..hi {
                pairs.push(pos[i]);
                labels.push(1.0);
                pairs.push(neg[i]);
                labels.push(0.0);
            }
            let q = student_matrix(&embeddings, &pairs);
            grads.fill(0.0);
            let l = gate_objective(
                &gate.mlp,
                pair_feature_matrix(x, &pairs),
                &q,
                &labels,
                cfg.lambda,
                cfg.epsilon,
                Some(&mut grads),
            )?;
            clip_grad_norm(&mut grads, cfg.max_grad_norm);
            adam.step(&mut gate.mlp, &grads)?;
            sum.bce += l.bce;
            sum.l1 += l.l1;
            sum.total += l.total;
        }
        let inv = 1.0 / n_batches as f64;
        let loss = GateLoss {
            bce: sum.bce * inv,
            l1: sum.l1 * inv,
            total: sum.total * inv,
        };
        if !loss.total.is_finite() {
            return Err(Error::Degenerate(format!("gate loss diverged at epoch {epoch}")));
        }
        let valid_hits = valid(&gate)?;
        let log = GateEpochLog {
            epoch,
            loss,
            valid_hits,
        };
        on_epoch(&log);
        history.push(log);
        if valid_hits > best.0 {
            best = (valid_hits, epoch, gate.clone());
        } else if cfg.patience > 0 && epoch - best.1 >= cfg.patience {
            break;
        }
    }
    Ok(TrainedGate {
        gate: best.2,
        history,
        best_epoch: best.1,
        best_valid: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_examples() {
        assert_eq!(gate_features(&[1.0f64, 2.0], &[3.0, 4.0]).unwrap(), vec![3.0, 8.0, 4.0, 6.0]);
        assert_eq!(
            gate_features(&[0.0f64, 0.0], &[3.0, 4.0]).unwrap(),
            vec![0.0, 0.0, 3.0, 4.0]
        );
        let (a, b) = ([0.5f64, -1.0, 2.0], [1.5, 0.25, -3.0]);
        assert_eq!(gate_features(&a, &b).unwrap(), gate_features(&b, &a).unwrap());
        assert!(gate_features(&[1.0f64], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fuse_examples() {
        assert!((fuse(&[0.5, 0.5], &[0.8, 0.4], 1e-6) - 0.6).abs() < 1e-15);
        assert_eq!(fuse(&[0.0, 0.0], &[0.8, 0.4], 1e-6), 1e-6);
        assert_eq!(fuse(&[0.0, 1.0], &[0.8, 0.4], 1e-6), 0.4);
        assert_eq!(fuse(&[5.0, 5.0], &[0.8, 0.4], 1e-6), 1.0 - 1e-6);
    }

    fn tiny_features() -> FeatureMatrix {
        FeatureMatrix::new(4, 3, vec![1., 0., 1., 0., 1., 1., 1., 1., 0., 0., 0., 1.]).unwrap()
    }

    #[test]
    fn untrained_gate_averages_and_is_symmetric() {
        let x = tiny_features();
        let mut rng = seed::rng(1);
        let students: Vec<StudentModel<f32>> = (0..3).map(|_| StudentModel::new(3, 8, 2, &mut rng).unwrap()).collect();
        let gate = GateModel::<f32>::new(3, 16, vec!["a".into(), "b".into(), "c".into()], &mut rng).unwrap();
        let (xi, xj) = (x.row(0), x.row(1));
        let p = ensemble_predict(&gate, &students, xi, xj).unwrap();
        assert_eq!(p, ensemble_predict(&gate, &students, xj, xi).unwrap());
        let mean: f64 = students.iter().map(|s| s.predict(xi, xj).unwrap()).sum::<f64>() / 3.0;
        assert!((p - mean).abs() < 0.05, "{p} vs {mean}");
        assert!(ensemble_predict(&gate, &students[..2], xi, xj).is_err());

        let ens = Ensemble::new(gate.clone(), &students, &x).unwrap();
        let batch = ens.score_pairs(&x, &[(0, 1), (1, 0), (2, 3)]).unwrap();
        assert!((batch[0] - p).abs() < 1e-6);
        assert_eq!(batch[0], batch[1]);
    }

    #[test]
    fn one_hot_gate_selects_student() {
        let x = tiny_features();
        let mut rng = seed::rng(2);
        let students: Vec<StudentModel<f32>> = (0..2).map(|_| StudentModel::new(3, 8, 2, &mut rng).unwrap()).collect();
        let mut gate = GateModel::<f32>::new(3, 4, vec!["a".into(), "b".into()], &mut rng).unwrap();
        let last = gate.mlp.num_layers() - 1;
        gate.mlp.weight_mut(last).iter_mut().for_each(|w| *w = 0.0);
        gate.mlp.bias_mut(last).copy_from_slice(&[0.0, 1.0]);
        let p = ensemble_predict(&gate, &students, x.row(2), x.row(3)).unwrap();
        assert!((p - students[1].predict(x.row(2), x.row(3)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn objective_l1_and_clamp() {
        let mut mlp = Mlp::<f64>::zeros(&[2, 2]).unwrap();
        mlp.bias_mut(0).copy_from_slice(&[0.5, -0.25]);
        let feats = Matrix::from_vec(2, 2, vec![0.0; 4]);
        let q = [0.8, 0.4, 0.6, 0.2];
        let l = gate_objective(&mlp, feats, &q, &[1.0, 0.0], 2.0, 1e-6, None).unwrap();
        assert!((l.l1 - 0.75).abs() < 1e-15);
        let bce = -(0.3f64.ln() + (1.0 - 0.25f64).ln()) / 2.0;
        assert!((l.bce - bce).abs() < 1e-12);
        assert!((l.total - (bce + 1.5)).abs() < 1e-12);
    }
}
