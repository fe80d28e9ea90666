//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use linkdistill::graph::Graph;
use linkdistill::Edge;
use rand::Rng;

/// Adjacency sets built straight from an edge list.
pub struct NaiveGraph {
    pub adj: Vec<BTreeSet<usize>>,
}

impl NaiveGraph {
    pub fn new(n: usize, edges: &[Edge]) -> Self {
        let mut adj = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            let (u, v) = (u as usize, v as usize);
            if u != v {
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
        NaiveGraph { adj }
    }

    fn common(&self, i: usize, j: usize) -> Vec<usize> {
        self.adj[i].intersection(&self.adj[j]).copied().collect()
    }

    pub fn cn(&self, i: usize, j: usize) -> f64 {
        self.common(i, j).len() as f64
    }

    pub fn aa(&self, i: usize, j: usize) -> f64 {
        self.common(i, j).iter().map(|&k| 1.0 / (self.adj[k].len() as f64).ln()).sum()
    }

    pub fn ra(&self, i: usize, j: usize) -> f64 {
        self.common(i, j).iter().map(|&k| 1.0 / self.adj[k].len() as f64).sum()
    }

    /// Full single-source BFS distance.
    pub fn distance(&self, i: usize, j: usize) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[i] = 0;
        let mut q = VecDeque::from([i]);
        while let Some(u) = q.pop_front() {
            if u == j {
                return Some(dist[u]);
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        None
    }

    /// BFS distances from `i` to every node.
    pub fn distances_from(&self, i: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.adj.len()];
        dist[i] = Some(0);
        let mut q = VecDeque::from([i]);
        while let Some(u) = q.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    q.push_back(w);
                }
            }
        }
        dist
    }

    pub fn csp_from_distance(d: Option<usize>, tau: u32) -> f64 {
        let tau = tau as usize;
        1.0 / d.map_or(tau, |d| d.min(tau)) as f64
    }

    pub fn csp(&self, i: usize, j: usize, tau: u32) -> f64 {
        let tau = tau as usize;
        match self.distance(i, j) {
            Some(d) => 1.0 / d.min(tau) as f64,
            None => 1.0 / tau as f64,
        }
    }
}

pub fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> (Graph, Vec<Edge>) {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let (g, _) = Graph::from_edges(n, &edges).unwrap();
    (g, edges)
}

/// Hits@K by fully sorting the negatives.
pub fn hits_full_sort(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let kth = sorted[k - 1];
    pos.iter().filter(|&&p| p > kth).count() as f64 / pos.len() as f64
}

/// MRR by ranking each positive within its sorted negative list.
pub fn mrr_full_sort(pos: &[f64], negs: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (p, n) in pos.iter().zip(negs) {
        let mut sorted = n.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let rank = 1 + sorted.iter().take_while(|&&x| x > *p).count();
        total += 1.0 / rank as f64;
    }
    total / pos.len() as f64
}

/// Central finite difference of `f` along every coordinate of `theta`.
pub fn numeric_grad(theta: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            let orig = t[k];
            t[k] = orig + h;
            let up = f(&t);
            t[k] = orig - h;
            let down = f(&t);
            t[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute gap when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-10 {
        diff
    } else {
        diff / scale
    }
}

/// True when two step sizes agree, i.e. no kink lies within `2h` of `theta`.
pub fn smooth_at(theta: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> bool {
    let a = numeric_grad(theta, h, &mut f);
    let b = numeric_grad(theta, 2.0 * h, &mut f);
    relative_error(&a, &b) < 1e-6
}

pub mod grad {
    use linkdistill::distill::{student_objective, BatchBuilder, LossWeights};
    use linkdistill::ensemble::{gate_objective, pair_feature_matrix, GateModel};
    use linkdistill::nn::{Parameters, StudentModel};
    use linkdistill::FeatureMatrix;
    use rand::Rng;

    use super::{numeric_grad, relative_error, smooth_at};

    pub const H: f64 = 1e-6;

    fn set_params<P: Parameters<f64>>(p: &mut P, theta: &[f64]) {
        let mut k = 0;
        p.visit_mut(&mut |s| {
            s.copy_from_slice(&theta[k..k + s.len()]);
            k += s.len();
        });
    }

    fn features(n: usize, dim: usize, rng: &mut impl Rng) -> FeatureMatrix {
        let v = (0..n * dim)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.1f32..1.0) })
            .collect();
        FeatureMatrix::new(n, dim, v).unwrap()
    }

    /// Which student loss term to isolate.
    #[derive(Debug, Clone, Copy)]
    pub enum Term {
        Bce,
        Ranking,
        Distribution,
        Combined,
    }

    /// Relative error between the analytic and numeric gradient of the
    /// student objective on one random smooth instance.
    pub fn student_instance(term: Term, rng: &mut impl Rng) -> f64 {
        loop {
            let (n, dim) = (10, 6);
            let x = features(n, dim, rng);
            let model = StudentModel::<f64>::new(dim, 5, 2, rng).unwrap();
            let (alpha, beta) = match term {
                Term::Bce => (0.0, 0.0),
                Term::Ranking => (1.0, 0.0),
                Term::Distribution => (0.0, 1.0),
                Term::Combined => (0.7, 1.3),
            };
            let w = LossWeights {
                alpha,
                beta,
                delta: 0.1,
                temperature: rng.gen_range(0.5..2.0),
            };
            let mut b = BatchBuilder::new(n);
            if matches!(term, Term::Bce | Term::Combined) {
                for _ in 0..6 {
                    let u = rng.gen_range(0..n as u32);
                    let v = (u + rng.gen_range(1..n as u32)) % n as u32;
                    b.pair(u, v, f64::from(rng.gen_range(0..2u8)));
                }
            }
            if !matches!(term, Term::Bce) {
                for a in 0..3u32 {
                    let ctx: Vec<u32> = (0..5).map(|c| (a + 1 + c) % n as u32).collect();
                    let teacher = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
                    b.context(a, &ctx, teacher);
                }
            }
            let batch = b.finish();
            let theta = model.flatten();
            let f = |t: &[f64]| {
                let mut m = model.clone();
                set_params(&mut m, t);
                student_objective(&m, &x, &batch, &w, None).unwrap().total
            };
            if !smooth_at(&theta, H, f) {
                continue;
            }
            let mut g = model.zeros_like();
            student_objective(&model, &x, &batch, &w, Some(&mut g)).unwrap();
            return relative_error(&g.flatten(), &numeric_grad(&theta, H, f));
        }
    }

    /// Same check for the gate objective.
    pub fn gate_instance(rng: &mut impl Rng) -> f64 {
        loop {
            let (n, dim, students) = (12, 5, 3);
            let x = features(n, dim, rng);
            let labels = (0..students).map(|i| format!("s{i}")).collect();
            let mut gate = GateModel::<f64>::new(dim, 6, labels, rng).unwrap();
            gate.mlp.visit_mut(&mut |s| s.iter_mut().for_each(|v| *v += rng.gen_range(-0.05..0.05)));
            let pairs: Vec<(u32, u32)> = (0..8).map(|i| (i, (i + 1 + i % 3) % n as u32)).collect();
            let feats = pair_feature_matrix::<f64>(&x, &pairs);
            let q: Vec<f64> = (0..pairs.len() * students).map(|_| rng.gen_range(0.05..0.95)).collect();
            let y: Vec<f64> = (0..pairs.len()).map(|_| f64::from(rng.gen_range(0..2u8))).collect();
            let lambda = rng.gen_range(0.0..1.0);
            let theta = gate.mlp.flatten();
            let f = |t: &[f64]| {
                let mut m = gate.mlp.clone();
                set_params(&mut m, t);
                gate_objective(&m, feats.clone(), &q, &y, lambda, 1e-6, None).unwrap().total
            };
            if !smooth_at(&theta, H, f) {
                continue;
            }
            let mut g = gate.mlp.zeros_like();
            gate_objective(&gate.mlp, feats.clone(), &q, &y, lambda, 1e-6, Some(&mut g)).unwrap();
            return relative_error(&g.flatten(), &numeric_grad(&theta, H, f));
        }
    }
}
