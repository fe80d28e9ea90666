use super::loss::{distribution_with_grad, ranking_with_grad};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, NodeId};
use crate::nn::{bce_with_logit, sigmoid, Matrix, Real, StudentModel};

/// Weights and shape parameters of `L = L_BCE + α·L_R + β·L_D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub temperature: f64,
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::invalid("alpha and beta must be finite and non-negative"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta must be positive"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        Ok(())
    }

    pub fn distills(&self) -> bool {
        self.alpha > 0.0 || self.beta > 0.0
    }
}

/// One anchor's context inside a batch; indices refer to batch rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTerm {
    pub anchor: usize,
    pub context: Vec<usize>,
    pub teacher: Vec<f64>,
}

/// A mini-batch: the distinct nodes it touches plus labelled pairs and
/// distillation contexts over those nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub nodes: Vec<NodeId>,
    pub pairs: Vec<(usize, usize)>,
    pub labels: Vec<f64>,
    pub contexts: Vec<ContextTerm>,
}

/// Builds batches, mapping node ids to batch rows without rehashing.
pub struct BatchBuilder {
    slot: Vec<u32>,
    batch: Batch,
}

impl BatchBuilder {
    pub fn new(num_nodes: usize) -> Self {
        BatchBuilder {
            slot: vec![u32::MAX; num_nodes],
            batch: Batch::default(),
        }
    }

    fn row(&mut self, v: NodeId) -> usize {
        let s = &mut self.slot[v as usize];
        if *s == u32::MAX {
            *s = self.batch.nodes.len() as u32;
            self.batch.nodes.push(v);
        }
        *s as usize
    }

    pub fn pair(&mut self, u: NodeId, v: NodeId, label: f64) {
        let (a, b) = (self.row(u), self.row(v));
        self.batch.pairs.push((a, b));
        self.batch.labels.push(label);
    }

    pub fn context(&mut self, anchor: NodeId, context: &[NodeId], teacher: Vec<f64>) {
        let a = self.row(anchor);
        let context = context.iter().map(|&c| self.row(c)).collect();
        self.batch.contexts.push(ContextTerm {
            anchor: a,
            context,
            teacher,
        });
    }

    /// Returns the batch and resets the builder.
    pub fn finish(&mut self) -> Batch {
        for &v in &self.batch.nodes {
            self.slot[v as usize] = u32::MAX;
        }
        std::mem::take(&mut self.batch)
    }
}

/// Loss components of one evaluation of the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    /// Mean BCE over labelled pairs.
    pub bce: f64,
    /// Mean per-anchor ranking loss.
    pub ranking: f64,
    /// Mean per-anchor distribution loss.
    pub distribution: f64,
    pub total: f64,
}

/// Evaluates the combined objective on `batch` and, when `grads` is given,
/// accumulates its gradient.
///
/// BCE is averaged over pairs; the distillation terms are averaged over
/// anchors and skipped entirely when their weight is zero.
pub fn student_objective<T: Real>(
    model: &StudentModel<T>,
    x: &FeatureMatrix,
    batch: &Batch,
    w: &LossWeights,
    grads: Option<&mut StudentModel<T>>,
) -> Result<LossParts> {
    w.validate()?;
    let fwd = model.embed(Matrix::gather(x, &batch.nodes))?;
    let z = fwd.output();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(batch.pairs.len());
    let mut d_logits: Vec<f64> = Vec::with_capacity(batch.pairs.len());
    let mut parts = LossParts::default();

    if !batch.pairs.is_empty() {
        let inv = 1.0 / batch.pairs.len() as f64;
        for (&(a, b), &y) in batch.pairs.iter().zip(&batch.labels) {
            let (l, d) = bce_with_logit(model.logit(z.row(a), z.row(b)).f64(), y);
            parts.bce += l * inv;
            pairs.push((a, b));
            d_logits.push(d * inv);
        }
    }

    let (use_r, use_d) = (w.alpha > 0.0, w.beta > 0.0);
    if (use_r || use_d) && !batch.contexts.is_empty() {
        let inv = 1.0 / batch.contexts.len() as f64;
        let mut q = Vec::new();
        let mut dq = Vec::new();
        for term in &batch.contexts {
            q.clear();
            q.extend(
                term.context
                    .iter()
                    .map(|&c| sigmoid(model.logit(z.row(term.anchor), z.row(c)).f64())),
            );
            dq.clear();
            dq.resize(q.len(), 0.0);
            if use_r {
                let mut g = vec![0.0; q.len()];
                parts.ranking += inv * ranking_with_grad(&term.teacher, &q, w.delta, Some(&mut g))?;
                for (d, g) in dq.iter_mut().zip(&g) {
                    *d += w.alpha * inv * g;
                }
            }
            if use_d {
                let mut g = vec![0.0; q.len()];
                parts.distribution +=
                    inv * distribution_with_grad(&term.teacher, &q, w.temperature, Some(&mut g))?;
                for (d, g) in dq.iter_mut().zip(&g) {
                    *d += w.beta * inv * g;
                }
            }
            for ((&c, &qi), &d) in term.context.iter().zip(&q).zip(&dq) {
                if d != 0.0 {
                    pairs.push((term.anchor, c));
                    d_logits.push(d * qi * (1.0 - qi));
                }
            }
        }
    }
    parts.total = parts.bce + w.alpha * parts.ranking + w.beta * parts.distribution;
    if let Some(g) = grads {
        let d: Vec<T> = d_logits.iter().map(|&v| T::of(v)).collect();
        model.backward_pairs(&fwd, &pairs, &d, g);
    }
    Ok(parts)
}
