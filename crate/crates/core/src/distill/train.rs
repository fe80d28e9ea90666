use rand::seq::SliceRandom;

use super::context::ContextConfig;
use super::guidance::{GuidanceConfig, GuidanceSet};
use super::objective::{student_objective, BatchBuilder, LossParts, LossWeights};
use crate::data::{sample_training_negatives, EdgeSplit};
use crate::error::{Error, Result};
use crate::eval::{hits_at_k, DEFAULT_K};
use crate::graph::{Edge, FeatureMatrix, Graph};
use crate::nn::{clip_grad_norm, AdamState, Embeddings, Parameters, StudentModel};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct DistillConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub temperature: f64,
    pub context: ContextConfig,
    /// Context draws pooled per anchor when guidance is built.
    pub pool_rounds: usize,
    pub lr: f64,
    pub epochs: usize,
    /// Positive training edges per mini-batch (negatives match 1:1).
    pub batch_size: usize,
    pub hidden: usize,
    pub layers: usize,
    pub eval_k: usize,
    pub max_grad_norm: f64,
    /// Stop after this many epochs without a validation improvement; 0 disables.
    pub patience: usize,
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            alpha: 1.0,
            beta: 1.0,
            delta: 0.1,
            temperature: 1.0,
            context: ContextConfig::default(),
            pool_rounds: 4,
            lr: 1e-3,
            epochs: 200,
            batch_size: 1024,
            hidden: 256,
            layers: 2,
            eval_k: DEFAULT_K,
            max_grad_norm: 1.0,
            patience: 0,
            seed: 0,
        }
    }
}

impl DistillConfig {
    pub const ALPHA_GRID: [f64; 4] = [0.0, 0.001, 1.0, 10.0];
    pub const BETA_GRID: [f64; 4] = [0.0, 0.001, 1.0, 10.0];
    pub const DELTA_GRID: [f64; 3] = [0.05, 0.1, 0.2];

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
            temperature: self.temperature,
        }
    }

    pub fn guidance_config(&self) -> GuidanceConfig {
        GuidanceConfig {
            context: self.context,
            pool_rounds: self.pool_rounds,
        }
    }

    /// Context nodes used per anchor and epoch.
    pub fn context_size(&self) -> usize {
        self.context.num_nearby + self.context.num_random
    }

    pub fn validate(&self) -> Result<()> {
        self.weights().validate()?;
        self.context.validate()?;
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::invalid("epochs, batch_size, hidden and layers must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.eval_k == 0 || !(self.max_grad_norm > 0.0) || self.pool_rounds == 0 {
            return Err(Error::invalid("eval_k, max_grad_norm and pool_rounds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: LossParts,
    pub valid_hits: f64,
}

impl EpochLog {
    /// `epoch bce ranking distribution total valid_hits`, tab separated.
    pub fn tsv(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.epoch,
            self.loss.bce,
            self.loss.ranking,
            self.loss.distribution,
            self.loss.total,
            self.valid_hits
        )
    }

    pub const TSV_HEADER: &'static str = "epoch\tbce\tranking\tdistribution\ttotal\tvalid_hits";
}

#[derive(Debug, Clone)]
pub struct TrainedStudent {
    pub model: StudentModel<f32>,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_valid: f64,
}

pub fn edge_scores(emb: &Embeddings<f32>, edges: &[Edge]) -> Vec<f64> {
    emb.score_pairs(edges)
}

/// Validation Hits@K of a student on a split.
pub fn validation_hits(model: &StudentModel<f32>, x: &FeatureMatrix, split: &EdgeSplit, k: usize) -> Result<f64> {
    let emb = model.embed_all(x)?;
    hits_at_k(
        &edge_scores(&emb, &split.valid_pos),
        &edge_scores(&emb, &split.valid_neg),
        k,
    )
}

pub fn train_student(
    g_train: &Graph,
    x: &FeatureMatrix,
    guidance: &GuidanceSet,
    split: &EdgeSplit,
    cfg: &DistillConfig,
) -> Result<TrainedStudent> {
    train_student_with(g_train, x, guidance, split, cfg, &mut |_| {})
}

/// [`train_student`] with a per-epoch callback.
pub fn train_student_with(
    g_train: &Graph,
    x: &FeatureMatrix,
    guidance: &GuidanceSet,
    split: &EdgeSplit,
    cfg: &DistillConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainedStudent> {
    cfg.validate()?;
    x.check_rows(g_train.num_nodes())?;
    if split.train.is_empty() {
        return Err(Error::invalid("no training edges"));
    }
    if guidance.is_empty() {
        return Err(Error::invalid("guidance set is empty"));
    }
    guidance.validate(g_train.num_nodes())?;
    if split.valid_neg.len() < cfg.eval_k || split.valid_pos.is_empty() {
        return Err(Error::invalid(format!(
            "validation needs positives and at least {} negatives",
            cfg.eval_k
        )));
    }

    let weights = cfg.weights();
    let mut model = StudentModel::<f32>::new(
        x.dim(),
        cfg.hidden,
        cfg.layers,
        &mut seed::rng(seed::derive(cfg.seed, "init")),
    )?;
    let mut grads = model.zeros_like();
    let mut adam = AdamState::new(cfg.lr);
    let neg_seed = seed::derive(cfg.seed, "negatives");
    let order_seed = seed::derive(cfg.seed, "order");
    let mut builder = BatchBuilder::new(g_train.num_nodes());

    let mut best = (validation_hits(&model, x, split, cfg.eval_k)?, 0usize, model.clone());
    let mut history = Vec::with_capacity(cfg.epochs);
    let n_batches = split.train.len().div_ceil(cfg.batch_size);
    let mut anchors: Vec<usize> = (0..guidance.len()).collect();
    let mut pos = split.train.clone();

    for epoch in 1..=cfg.epochs {
        let mut rng = seed::rng(seed::derive_index(order_seed, epoch as u64));
        pos.shuffle(&mut rng);
        let neg = sample_training_negatives(g_train, pos.len(), neg_seed, epoch as u64)?;
        anchors.shuffle(&mut rng);
        let per_batch = anchors.len().div_ceil(n_batches);
        let mut sum = LossParts::default();

        for b in 0..n_batches {
            let range = b * cfg.batch_size..((b + 1) * cfg.batch_size).min(pos.len());
            for i in range {
                builder.pair(pos[i].0, pos[i].1, 1.0);
                builder.pair(neg[i].0, neg[i].1, 0.0);
            }
            if weights.distills() {
                let lo = (b * per_batch).min(anchors.len());
                let hi = ((b + 1) * per_batch).min(anchors.len());
                for &a in &anchors[lo..hi] {
                    let rec = &guidance.records[a];
                    let (ctx, p) = rec.subsample(cfg.context_size(), &mut rng);
                    builder.context(rec.anchor, &ctx, p);
                }
            }
            let batch = builder.finish();
            grads.fill(0.0);
            let parts = student_objective(&model, x, &batch, &weights, Some(&mut grads))?;
            clip_grad_norm(&mut grads, cfg.max_grad_norm);
            adam.step(&mut model, &grads)?;
            sum.bce += parts.bce;
            sum.ranking += parts.ranking;
            sum.distribution += parts.distribution;
            sum.total += parts.total;
        }
        let inv = 1.0 / n_batches as f64;
        let loss = LossParts {
            bce: sum.bce * inv,
            ranking: sum.ranking * inv,
            distribution: sum.distribution * inv,
            total: sum.total * inv,
        };
        if !loss.total.is_finite() {
            return Err(Error::Degenerate(format!("loss diverged at epoch {epoch}")));
        }
        let valid_hits = validation_hits(&model, x, split, cfg.eval_k)?;
        let log = EpochLog {
            epoch,
            loss,
            valid_hits,
        };
        on_epoch(&log);
        history.push(log);
        if valid_hits > best.0 {
            best = (valid_hits, epoch, model.clone());
        } else if cfg.patience > 0 && epoch - best.1 >= cfg.patience {
            break;
        }
    }
    Ok(TrainedStudent {
        model: best.2,
        history,
        best_epoch: best.1,
        best_valid: best.0,
    })
}
