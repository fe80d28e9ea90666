use super::{Parameters, Real};
use crate::error::{Error, Result};

/// Adam optimiser state. Moments are kept in `f64`.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `params` from `grads`.
    pub fn step<T: Real, P: Parameters<T>>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let mut g: Vec<Vec<f64>> = Vec::new();
        grads.visit(&mut |s| g.push(s.iter().map(|v| v.f64()).collect()));
        if self.first.is_empty() {
            self.first = g.iter().map(|s| vec![0.0; s.len()]).collect();
            self.second = self.first.clone();
        }
        let mut shape_ok = self.first.len() == g.len();
        let mut idx = 0;
        params.visit(&mut |s| {
            shape_ok &= g.get(idx).map(Vec::len) == Some(s.len())
                && self.first.get(idx).map(Vec::len) == Some(s.len());
            idx += 1;
        });
        if !shape_ok || idx != g.len() {
            return Err(Error::invalid("Adam: parameter and gradient shapes differ"));
        }

        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let (first, second) = (&mut self.first, &mut self.second);
        let mut idx = 0;
        params.visit_mut(&mut |s| {
            let (m, v, gs) = (&mut first[idx], &mut second[idx], &g[idx]);
            for k in 0..s.len() {
                let gk = gs[k];
                m[k] = b1 * m[k] + (1.0 - b1) * gk;
                v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
                let mhat = m[k] / c1;
                let vhat = v[k] / c2;
                s[k] -= T::of(lr * mhat / (vhat.sqrt() + eps));
            }
            idx += 1;
        });
        Ok(())
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<T: Real, P: Parameters<T>>(grads: &mut P, max_norm: f64) -> f64 {
    let mut sq = 0.0f64;
    grads.visit(&mut |s| sq += s.iter().map(|v| v.f64() * v.f64()).sum::<f64>());
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = T::of(max_norm / norm);
        grads.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v *= scale));
    }
    norm
}
