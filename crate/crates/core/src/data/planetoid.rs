//! Loader for the raw Planetoid citation files (`cora.content`, `cora.cites`).
//!
//! `*.content` rows are `<paper id> <binary word features...> <label>`;
//! `*.cites` rows are `<cited id> <citing id>`. Paper ids are remapped to
//! dense node ids in content-file order. Citations that mention a paper
//! missing from the content file are skipped.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Edge, FeatureMatrix, Graph, NodeId};

/// Raw dataset plus the class labels the content file carries.
#[derive(Debug, Clone)]
pub struct Planetoid {
    pub dataset: Dataset,
    pub labels: Vec<String>,
    pub skipped_citations: usize,
}

fn find_with_ext(dir: &Path, ext: &str) -> Result<PathBuf> {
    let mut hits: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    hits.sort();
    hits.into_iter().next().ok_or_else(|| {
        Error::format(
            dir,
            format!("no edges.txt + features.bin pair and no *.{ext} file"),
        )
    })
}

/// Locates the `*.content` and `*.cites` files in `dir`.
pub fn find_files(dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    Ok((find_with_ext(dir, "content")?, find_with_ext(dir, "cites")?))
}

pub fn load_dir(dir: impl AsRef<Path>) -> Result<Dataset> {
    let (content, cites) = find_files(dir)?;
    Ok(load(&content, &cites)?.dataset)
}

pub fn load(content: &Path, cites: &Path) -> Result<Planetoid> {
    let reader = std::io::BufReader::new(std::fs::File::open(content)?);
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(Error::Parse {
                path: content.to_path_buf(),
                line: i + 1,
                msg: "expected id, features and label".into(),
            });
        }
        let width = toks.len() - 2;
        if *dim.get_or_insert(width) != width {
            return Err(Error::Parse {
                path: content.to_path_buf(),
                line: i + 1,
                msg: format!("row has {width} features, expected {}", dim.unwrap()),
            });
        }
        for t in &toks[1..toks.len() - 1] {
            values.push(t.parse::<f32>().map_err(|e| Error::Parse {
                path: content.to_path_buf(),
                line: i + 1,
                msg: format!("bad feature {t:?}: {e}"),
            })?);
        }
        let next = ids.len() as NodeId;
        if ids.insert(toks[0].to_string(), next).is_some() {
            return Err(Error::Parse {
                path: content.to_path_buf(),
                line: i + 1,
                msg: format!("duplicate paper id {}", toks[0]),
            });
        }
        labels.push(toks[toks.len() - 1].to_string());
    }
    let n = ids.len();
    let features = FeatureMatrix::new(n, dim.unwrap_or(0), values)?;

    let reader = std::io::BufReader::new(std::fs::File::open(cites)?);
    let mut edges: Vec<Edge> = Vec::new();
    let mut skipped = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 {
            return Err(Error::Parse {
                path: cites.to_path_buf(),
                line: i + 1,
                msg: "expected two paper ids".into(),
            });
        }
        match (ids.get(toks[0]), ids.get(toks[1])) {
            (Some(&u), Some(&v)) => edges.push((u, v)),
            _ => skipped += 1,
        }
    }
    let (graph, stats) = Graph::from_edges(n, &edges)?;
    log::info!(
        "planetoid: {n} nodes, {} edges ({} duplicate, {} self-loop, {skipped} dangling citations dropped)",
        graph.num_edges(),
        stats.duplicates,
        stats.self_loops
    );
    Ok(Planetoid {
        dataset: Dataset::new(graph, features)?,
        labels,
        skipped_citations: skipped,
    })
}
