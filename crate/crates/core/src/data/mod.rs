//! Edge splits, negative sampling and dataset loading.

pub mod planetoid;
pub mod synthetic;

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::{read_key_values, write_key_values};
use crate::graph::io::{read_edge_list, read_features, write_edge_list};
use crate::graph::{canonical, Edge, FeatureMatrix, Graph, NodeId};
use crate::seed;

pub const DEFAULT_VAL_FRAC: f64 = 0.05;
pub const DEFAULT_TEST_FRAC: f64 = 0.15;

/// Random link split with equal-size negative sets for validation and test.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    pub num_nodes: usize,
    pub train: Vec<Edge>,
    pub valid_pos: Vec<Edge>,
    pub valid_neg: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub test_neg: Vec<Edge>,
    pub seed: u64,
    pub val_frac: f64,
    pub test_frac: f64,
}

/// Number of edges a fraction selects (floored, tolerant of float noise).
fn frac_count(total: usize, frac: f64) -> usize {
    (total as f64 * frac + 1e-9).floor() as usize
}

/// Uniformly partitions the edges of `g` into train/valid/test and draws
/// negatives that are non-edges of the full graph.
pub fn make_split(g: &Graph, val_frac: f64, test_frac: f64, seed: u64) -> Result<EdgeSplit> {
    for (name, f) in [("val_frac", val_frac), ("test_frac", test_frac)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(format!("{name} must lie in (0, 1), got {f}")));
        }
    }
    if val_frac + test_frac >= 1.0 {
        return Err(Error::invalid("val_frac + test_frac must be below 1"));
    }
    let mut edges: Vec<Edge> = g.edges().collect();
    let n_val = frac_count(edges.len(), val_frac);
    let n_test = frac_count(edges.len(), test_frac);
    if n_val == 0 || n_test == 0 || n_val + n_test >= edges.len() {
        return Err(Error::Degenerate(format!(
            "{} edges cannot be split into {n_val} valid / {n_test} test positives and a nonempty train set",
            edges.len()
        )));
    }
    let mut rng = seed::rng(seed::derive(seed, "split"));
    edges.shuffle(&mut rng);
    let mut valid_pos = edges[..n_val].to_vec();
    let mut test_pos = edges[n_val..n_val + n_test].to_vec();
    let mut train = edges[n_val + n_test..].to_vec();
    valid_pos.sort_unstable();
    test_pos.sort_unstable();
    train.sort_unstable();

    let mut taken = HashSet::new();
    let valid_neg = sample_distinct_non_edges(g, n_val, &mut taken, &mut rng)?;
    let test_neg = sample_distinct_non_edges(g, n_test, &mut taken, &mut rng)?;
    Ok(EdgeSplit {
        num_nodes: g.num_nodes(),
        train,
        valid_pos,
        valid_neg,
        test_pos,
        test_neg,
        seed,
        val_frac,
        test_frac,
    })
}

fn non_edge_capacity(g: &Graph) -> usize {
    let n = g.num_nodes();
    (n * n.saturating_sub(1) / 2).saturating_sub(g.num_edges())
}

fn attempt_cap(count: usize) -> usize {
    100 * count + 1000
}

/// Draws `count` canonical non-edges of `g` not already in `taken`.
fn sample_distinct_non_edges(
    g: &Graph,
    count: usize,
    taken: &mut HashSet<Edge>,
    rng: &mut impl Rng,
) -> Result<Vec<Edge>> {
    if non_edge_capacity(g) < count + taken.len() {
        return Err(Error::Degenerate(format!(
            "graph has {} non-edges, {} distinct negatives requested",
            non_edge_capacity(g),
            count + taken.len()
        )));
    }
    let n = g.num_nodes() as NodeId;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > attempt_cap(count) {
            return Err(Error::SamplingExhausted {
                attempts,
                found: out.len(),
                wanted: count,
            });
        }
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let e = canonical(u, v);
        if taken.insert(e) {
            out.push(e);
        }
    }
    Ok(out)
}

/// Uniform non-edges of the training graph for one epoch of BCE training.
///
/// The stream is a pure function of `(seed, epoch)`; pairs may repeat.
pub fn sample_training_negatives(
    g_train: &Graph,
    count: usize,
    seed: u64,
    epoch: u64,
) -> Result<Vec<Edge>> {
    if count == 0 {
        return Err(Error::invalid("negative count must be positive"));
    }
    if non_edge_capacity(g_train) == 0 {
        return Err(Error::SamplingExhausted {
            attempts: 0,
            found: 0,
            wanted: count,
        });
    }
    let mut rng = seed::rng(seed::derive_index(seed, epoch));
    let n = g_train.num_nodes() as NodeId;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > attempt_cap(count) {
            return Err(Error::SamplingExhausted {
                attempts,
                found: out.len(),
                wanted: count,
            });
        }
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v && !g_train.has_edge(u, v) {
            out.push((u, v));
        }
    }
    Ok(out)
}

const SPLIT_FILES: [&str; 5] = [
    "train.txt",
    "valid_pos.txt",
    "valid_neg.txt",
    "test_pos.txt",
    "test_neg.txt",
];

impl EdgeSplit {
    /// Training graph over the full node set with only the train edges.
    pub fn train_graph(&self) -> Result<Graph> {
        Ok(Graph::from_edges(self.num_nodes, &self.train)?.0)
    }

    fn parts(&self) -> [&Vec<Edge>; 5] {
        [
            &self.train,
            &self.valid_pos,
            &self.valid_neg,
            &self.test_pos,
            &self.test_neg,
        ]
    }

    /// Writes the five edge lists and `meta.txt` into `dir` (created if needed).
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, edges) in SPLIT_FILES.iter().zip(self.parts()) {
            write_edge_list(dir.join(name), edges)?;
        }
        let meta = vec![
            ("seed".to_string(), self.seed.to_string()),
            ("val_frac".into(), self.val_frac.to_string()),
            ("test_frac".into(), self.test_frac.to_string()),
            ("num_nodes".into(), self.num_nodes.to_string()),
        ];
        write_key_values(dir.join("meta.txt"), &meta)
    }

    /// Loads a split directory. `num_nodes` falls back to the largest id seen
    /// when `meta.txt` does not record it.
    pub fn load(dir: impl AsRef<Path>) -> Result<EdgeSplit> {
        let dir = dir.as_ref();
        let mut parts: Vec<Vec<Edge>> = Vec::with_capacity(5);
        for name in SPLIT_FILES {
            parts.push(read_edge_list(dir.join(name))?);
        }
        let meta_path = dir.join("meta.txt");
        let meta = if meta_path.exists() {
            read_key_values(&meta_path)?
        } else {
            Vec::new()
        };
        let get = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let parse_f = |key: &str, default: f64| -> Result<f64> {
            get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::format(&meta_path, format!("bad {key} value {v:?}")))
            })
        };
        let seed = match get("seed") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::format(&meta_path, format!("bad seed {v:?}")))?,
            None => 0,
        };
        let implied = parts
            .iter()
            .map(|p| crate::graph::io::implied_num_nodes(p))
            .max()
            .unwrap_or(0);
        let num_nodes = match get("num_nodes") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::format(&meta_path, format!("bad num_nodes {v:?}")))?,
            None => implied,
        };
        if implied > num_nodes {
            return Err(Error::format(
                dir,
                format!("split references node {} but num_nodes is {num_nodes}", implied - 1),
            ));
        }
        let mut it = parts.into_iter();
        Ok(EdgeSplit {
            num_nodes,
            train: it.next().unwrap(),
            valid_pos: it.next().unwrap(),
            valid_neg: it.next().unwrap(),
            test_pos: it.next().unwrap(),
            test_neg: it.next().unwrap(),
            seed,
            val_frac: parse_f("val_frac", DEFAULT_VAL_FRAC)?,
            test_frac: parse_f("test_frac", DEFAULT_TEST_FRAC)?,
        })
    }
}

/// A graph with node features.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
}

impl Dataset {
    pub fn new(graph: Graph, features: FeatureMatrix) -> Result<Self> {
        features.check_rows(graph.num_nodes())?;
        Ok(Dataset { graph, features })
    }

    /// Loads an edge list plus a feature file. The node count comes from the
    /// feature matrix.
    pub fn from_files(edges: impl AsRef<Path>, features: impl AsRef<Path>) -> Result<Self> {
        let x = read_features(features)?;
        let edges = read_edge_list(edges)?;
        let (g, _) = Graph::from_edges(x.num_nodes(), &edges)?;
        Dataset::new(g, x)
    }

    /// Loads a directory holding either `edges.txt` + `features.bin`
    /// (or `features.csv`), or raw Planetoid `*.content` / `*.cites` files.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let edges = dir.join("edges.txt");
        for feat in ["features.bin", "features.csv"] {
            if edges.exists() && dir.join(feat).exists() {
                return Dataset::from_files(&edges, dir.join(feat));
            }
        }
        planetoid::load_dir(dir)
    }
}
