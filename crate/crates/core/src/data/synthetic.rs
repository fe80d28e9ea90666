//! Synthetic citation-style graphs with community structure and sparse
//! bag-of-words features correlated with the communities.

use rand::seq::SliceRandom;
use rand::Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Edge, FeatureMatrix, Graph, NodeId};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub clusters_per_class: usize,
    pub feature_dim: usize,
    pub words_per_node: usize,
    /// Words drawn from the node's cluster topic / class topic; the rest are uniform.
    pub cluster_word_frac: f64,
    pub class_word_frac: f64,
    pub topic_size: usize,
    pub avg_degree: f64,
    /// Edge endpoint choice: same cluster, same class, friend-of-friend, else uniform.
    pub p_same_cluster: f64,
    pub p_same_class: f64,
    pub p_triadic: f64,
    /// Pareto shape of node activity; smaller means heavier-tailed degrees.
    pub activity_shape: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Roughly the size and density of the Cora citation graph.
    pub fn cora_like(seed: u64) -> Self {
        SyntheticConfig {
            num_nodes: 2708,
            num_classes: 7,
            clusters_per_class: 6,
            feature_dim: 1433,
            words_per_node: 18,
            cluster_word_frac: 0.35,
            class_word_frac: 0.25,
            topic_size: 40,
            avg_degree: 3.9,
            p_same_cluster: 0.55,
            p_same_class: 0.15,
            p_triadic: 0.2,
            activity_shape: 2.5,
            seed,
        }
    }

    /// A few hundred nodes; fast enough for unit tests.
    pub fn small(seed: u64) -> Self {
        SyntheticConfig {
            num_nodes: 400,
            num_classes: 4,
            clusters_per_class: 3,
            feature_dim: 128,
            words_per_node: 10,
            topic_size: 12,
            avg_degree: 5.0,
            ..SyntheticConfig::cora_like(seed)
        }
    }

    fn validate(&self) -> Result<()> {
        let clusters = self.num_classes * self.clusters_per_class;
        if self.num_nodes < 4 || clusters == 0 || clusters > self.num_nodes {
            return Err(Error::invalid("need at least 4 nodes and 1..=num_nodes clusters"));
        }
        if self.feature_dim == 0 || self.topic_size == 0 || self.topic_size > self.feature_dim {
            return Err(Error::invalid("topic_size must lie in 1..=feature_dim"));
        }
        if self.words_per_node == 0 || self.words_per_node > self.feature_dim {
            return Err(Error::invalid("words_per_node must lie in 1..=feature_dim"));
        }
        let probs = [
            self.cluster_word_frac,
            self.class_word_frac,
            self.p_same_cluster,
            self.p_same_class,
            self.p_triadic,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p))
            || self.cluster_word_frac + self.class_word_frac > 1.0
            || self.p_same_cluster + self.p_same_class + self.p_triadic > 1.0
        {
            return Err(Error::invalid("mixing fractions must be probabilities summing to at most 1"));
        }
        let max_deg = (self.num_nodes - 1) as f64;
        if !(self.avg_degree > 0.0 && self.avg_degree < max_deg / 2.0) {
            return Err(Error::invalid("avg_degree must be positive and well below num_nodes"));
        }
        if !(self.activity_shape > 1.0) {
            return Err(Error::invalid("activity_shape must exceed 1"));
        }
        Ok(())
    }
}

/// Pareto(1, shape) sample by inversion.
fn pareto_weight(rng: &mut impl Rng, shape: f64) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    u.powf(-1.0 / shape)
}

/// Generated dataset plus the latent cluster of every node.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub cluster: Vec<usize>,
    pub class: Vec<usize>,
}

/// Picks an index proportionally to `cumulative` weights.
fn pick(cumulative: &[f64], rng: &mut impl Rng) -> usize {
    let r = rng.gen_range(0.0..*cumulative.last().unwrap());
    cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1)
}

fn cumulative_of(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

pub fn generate(cfg: &SyntheticConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let n = cfg.num_nodes;
    let clusters = cfg.num_classes * cfg.clusters_per_class;
    let mut rng = seed::rng(seed::derive(cfg.seed, "synthetic"));

    // Every cluster gets at least one node.
    let mut cluster: Vec<usize> = (0..n).map(|i| if i < clusters { i } else { rng.gen_range(0..clusters) }).collect();
    cluster.shuffle(&mut rng);
    let class: Vec<usize> = cluster.iter().map(|c| c / cfg.clusters_per_class).collect();

    let vocab: Vec<usize> = (0..cfg.feature_dim).collect();
    let topic = |rng: &mut _| -> Vec<usize> { vocab.choose_multiple(rng, cfg.topic_size).copied().collect() };
    let class_topics: Vec<Vec<usize>> = (0..cfg.num_classes).map(|_| topic(&mut rng)).collect();
    let cluster_topics: Vec<Vec<usize>> = (0..clusters).map(|_| topic(&mut rng)).collect();

    let d = cfg.feature_dim;
    let mut values = vec![0.0f32; n * d];
    for i in 0..n {
        let row = &mut values[i * d..(i + 1) * d];
        let mut placed = 0;
        let mut guard = 0;
        while placed < cfg.words_per_node && guard < 100 * cfg.words_per_node {
            guard += 1;
            let r: f64 = rng.gen();
            let w = if r < cfg.cluster_word_frac {
                *cluster_topics[cluster[i]].choose(&mut rng).unwrap()
            } else if r < cfg.cluster_word_frac + cfg.class_word_frac {
                *class_topics[class[i]].choose(&mut rng).unwrap()
            } else {
                rng.gen_range(0..d)
            };
            if row[w] == 0.0 {
                row[w] = 1.0;
                placed += 1;
            }
        }
    }
    let features = FeatureMatrix::new(n, d, values)?;

    let activity: Vec<f64> = (0..n).map(|_| pareto_weight(&mut rng, cfg.activity_shape)).collect();
    let global = cumulative_of(activity.iter().copied());
    let mut members_of_cluster: Vec<Vec<usize>> = vec![Vec::new(); clusters];
    let mut members_of_class: Vec<Vec<usize>> = vec![Vec::new(); cfg.num_classes];
    for i in 0..n {
        members_of_cluster[cluster[i]].push(i);
        members_of_class[class[i]].push(i);
    }
    let cum = |m: &Vec<usize>| cumulative_of(m.iter().map(|&i| activity[i]));
    let cluster_cum: Vec<Vec<f64>> = members_of_cluster.iter().map(cum).collect();
    let class_cum: Vec<Vec<f64>> = members_of_class.iter().map(cum).collect();

    let target = (cfg.avg_degree * n as f64 / 2.0).round() as usize;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen = std::collections::HashSet::with_capacity(2 * target);
    let mut edges: Vec<Edge> = Vec::with_capacity(target);
    let mut attempts = 0;
    while edges.len() < target {
        attempts += 1;
        if attempts > 200 * target + 1000 {
            return Err(Error::SamplingExhausted {
                attempts,
                found: edges.len(),
                wanted: target,
            });
        }
        let u = pick(&global, &mut rng);
        let r: f64 = rng.gen();
        let v = if r < cfg.p_same_cluster {
            let c = cluster[u];
            members_of_cluster[c][pick(&cluster_cum[c], &mut rng)]
        } else if r < cfg.p_same_cluster + cfg.p_same_class {
            let c = class[u];
            members_of_class[c][pick(&class_cum[c], &mut rng)]
        } else if r < cfg.p_same_cluster + cfg.p_same_class + cfg.p_triadic && !adj[u].is_empty() {
            let w = *adj[u].choose(&mut rng).unwrap();
            match adj[w].choose(&mut rng) {
                Some(&v) => v,
                None => continue,
            }
        } else {
            pick(&global, &mut rng)
        };
        if u == v {
            continue;
        }
        let e = crate::graph::canonical(u as NodeId, v as NodeId);
        if seen.insert(e) {
            adj[u].push(v);
            adj[v].push(u);
            edges.push(e);
        }
    }
    let (graph, _) = Graph::from_edges(n, &edges)?;
    Ok(Synthetic {
        dataset: Dataset::new(graph, features)?,
        cluster,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let cfg = SyntheticConfig::small(5);
        let a = generate(&cfg).unwrap();
        let g = &a.dataset.graph;
        assert_eq!(g.num_nodes(), 400);
        assert_eq!(g.num_edges(), 1000);
        assert_eq!(a.dataset.features.dim(), 128);
        for i in 0..400 {
            let nnz = a.dataset.features.row(i).iter().filter(|&&v| v != 0.0).count();
            assert_eq!(nnz, 10);
        }
        let b = generate(&cfg).unwrap();
        assert_eq!(a.dataset.graph, b.dataset.graph);
        assert_eq!(a.dataset.features, b.dataset.features);
        assert_ne!(generate(&SyntheticConfig::small(6)).unwrap().dataset.graph, *g);
    }

    #[test]
    fn edges_are_mostly_intra_cluster() {
        let s = generate(&SyntheticConfig::small(1)).unwrap();
        let intra = s
            .dataset
            .graph
            .edges()
            .filter(|&(u, v)| s.cluster[u as usize] == s.cluster[v as usize])
            .count();
        assert!(intra as f64 > 0.5 * s.dataset.graph.num_edges() as f64);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = SyntheticConfig::small(0);
        c.p_same_cluster = 0.9;
        assert!(generate(&c).is_err());
        let mut c = SyntheticConfig::small(0);
        c.topic_size = 0;
        assert!(generate(&c).is_err());
    }
}
