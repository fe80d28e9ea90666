//! Teacher guidance: per-anchor context pools with normalized teacher scores.
//!
//! File format (text):
//!
//! ```text
//! #heuristic=CN tau=na
//! <anchor> <context> <p>
//! ...
//! ```
//!
//! Lines of the same anchor form one record, in order of first appearance.
//! Any tag other than `CN`, `AA`, `RA`, `CSP` is kept as an external teacher
//! label, which is how precomputed scores from other models are imported.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::context::{sample_context, ContextConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::heuristics::{normalize_scores, HeuristicKind, Scorer};
use crate::seed;

/// Where the teacher scores came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TeacherSource {
    Heuristic(HeuristicKind),
    External(String),
}

impl fmt::Display for TeacherSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TeacherSource::Heuristic(k) => write!(f, "{k}"),
            TeacherSource::External(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceRecord {
    pub anchor: NodeId,
    pub context: Vec<NodeId>,
    /// Teacher scores in `[0, 1]`, aligned with `context`.
    pub scores: Vec<f64>,
}

impl GuidanceRecord {
    pub fn len(&self) -> usize {
        self.context.len()
    }

    pub fn is_empty(&self) -> bool {
        self.context.is_empty()
    }

    /// Draws a sub-context of at most `size` entries without replacement,
    /// keeping the pool order.
    pub fn subsample(&self, size: usize, rng: &mut impl Rng) -> (Vec<NodeId>, Vec<f64>) {
        if size >= self.len() {
            return (self.context.clone(), self.scores.clone());
        }
        let mut idx = sample(rng, self.len(), size).into_vec();
        idx.sort_unstable();
        (
            idx.iter().map(|&i| self.context[i]).collect(),
            idx.iter().map(|&i| self.scores[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceSet {
    pub source: TeacherSource,
    pub records: Vec<GuidanceRecord>,
}

/// Knobs for building guidance from a heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceConfig {
    pub context: ContextConfig,
    /// Independent context draws pooled per anchor; training subsamples the
    /// pool every epoch.
    pub pool_rounds: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            context: ContextConfig::default(),
            pool_rounds: 4,
        }
    }
}

/// Result of [`build_guidance`]: the set plus anchors that had to be skipped.
#[derive(Debug, Clone)]
pub struct BuiltGuidance {
    pub guidance: GuidanceSet,
    pub skipped_anchors: Vec<NodeId>,
}

const ANCHOR_CHUNK: usize = 256;

/// Samples context pools for `anchors` on the training graph and scores them
/// with `kind`, normalizing per anchor by the pool maximum.
///
/// Each anchor's randomness depends only on `(seed, anchor)`, so the output
/// does not depend on thread count. Anchors with fewer than two distinct
/// candidates are skipped and reported.
pub fn build_guidance(
    g_train: &Graph,
    kind: HeuristicKind,
    anchors: &[NodeId],
    cfg: &GuidanceConfig,
    seed: u64,
) -> Result<BuiltGuidance> {
    kind.validate()?;
    cfg.context.validate()?;
    if cfg.pool_rounds == 0 {
        return Err(Error::invalid("pool_rounds must be positive"));
    }
    for &a in anchors {
        g_train.check_node(a)?;
    }
    let base = seed::derive(seed, "guidance");
    let chunks: Vec<Result<Vec<std::result::Result<GuidanceRecord, NodeId>>>> = anchors
        .par_chunks(ANCHOR_CHUNK)
        .map(|chunk| {
            let mut scorer = Scorer::new(g_train, kind)?;
            let mut out = Vec::with_capacity(chunk.len());
            for &v in chunk {
                let mut rng = seed::rng(seed::derive_index(base, u64::from(v)));
                let mut pool: Vec<NodeId> = Vec::new();
                for _ in 0..cfg.pool_rounds {
                    match sample_context(g_train, v, &cfg.context, &mut rng) {
                        Ok(c) => {
                            for u in c {
                                if !pool.contains(&u) {
                                    pool.push(u);
                                }
                            }
                        }
                        Err(Error::Degenerate(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                if pool.len() < 2 {
                    out.push(Err(v));
                    continue;
                }
                let raw: Vec<f64> = pool.iter().map(|&u| scorer.score(v, u)).collect::<Result<_>>()?;
                out.push(Ok(GuidanceRecord {
                    anchor: v,
                    context: pool,
                    scores: normalize_scores(&raw),
                }));
            }
            Ok(out)
        })
        .collect();
    let mut records = Vec::with_capacity(anchors.len());
    let mut skipped = Vec::new();
    for c in chunks {
        for r in c? {
            match r {
                Ok(rec) => records.push(rec),
                Err(v) => skipped.push(v),
            }
        }
    }
    if !skipped.is_empty() {
        log::debug!("guidance: skipped {} anchors without a usable context", skipped.len());
    }
    Ok(BuiltGuidance {
        guidance: GuidanceSet {
            source: TeacherSource::Heuristic(kind),
            records,
        },
        skipped_anchors: skipped,
    })
}

impl GuidanceSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_pairs(&self) -> usize {
        self.records.iter().map(GuidanceRecord::len).sum()
    }

    /// Checks the structural invariants against a node count.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        for r in &self.records {
            if r.context.len() < 2 {
                return Err(Error::invalid(format!(
                    "anchor {} has {} context nodes, need at least 2",
                    r.anchor,
                    r.context.len()
                )));
            }
            if r.context.len() != r.scores.len() {
                return Err(Error::DimensionMismatch {
                    expected: r.context.len(),
                    actual: r.scores.len(),
                });
            }
            for &u in std::iter::once(&r.anchor).chain(&r.context) {
                if u as usize >= num_nodes {
                    return Err(Error::NodeOutOfRange {
                        node: u64::from(u),
                        num_nodes,
                    });
                }
            }
            if let Some(p) = r.scores.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::invalid(format!("guidance score {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn header(&self) -> String {
        match &self.source {
            TeacherSource::Heuristic(k) => format!(
                "#heuristic={} tau={}",
                k.tag(),
                k.tau().map_or("na".to_string(), |t| t.to_string())
            ),
            TeacherSource::External(s) => format!("#heuristic={s} tau=na"),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{}", self.header())?;
        for r in &self.records {
            for (u, p) in r.context.iter().zip(&r.scores) {
                writeln!(w, "{} {} {}", r.anchor, u, p)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<GuidanceSet> {
        let path = path.as_ref();
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::parse(reader, path)
    }

    pub fn parse(reader: impl BufRead, path: &Path) -> Result<GuidanceSet> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut source = None;
        let mut records: Vec<GuidanceRecord> = Vec::new();
        let mut index: HashMap<NodeId, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(h) = t.strip_prefix('#') {
                if source.is_none() && h.trim_start().starts_with("heuristic=") {
                    source = Some(parse_header(h).map_err(|m| err(i + 1, m))?);
                }
                continue;
            }
            let toks: Vec<&str> = t.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(err(i + 1, "expected `anchor context p`".into()));
            }
            let node = |s: &str| s.parse::<NodeId>().map_err(|e| err(i + 1, format!("bad node {s:?}: {e}")));
            let (a, c) = (node(toks[0])?, node(toks[1])?);
            let p: f64 = toks[2].parse().map_err(|e| err(i + 1, format!("bad score {:?}: {e}", toks[2])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(i + 1, format!("score {p} outside [0, 1]")));
            }
            let slot = *index.entry(a).or_insert_with(|| {
                records.push(GuidanceRecord {
                    anchor: a,
                    context: Vec::new(),
                    scores: Vec::new(),
                });
                records.len() - 1
            });
            records[slot].context.push(c);
            records[slot].scores.push(p);
        }
        let source = source.ok_or_else(|| Error::format(path, "missing `#heuristic=` header"))?;
        if let Some(r) = records.iter().find(|r| r.context.len() < 2) {
            return Err(Error::format(
                path,
                format!("anchor {} has fewer than 2 context nodes", r.anchor),
            ));
        }
        Ok(GuidanceSet { source, records })
    }
}

fn parse_header(h: &str) -> std::result::Result<TeacherSource, String> {
    let mut tag = None;
    let mut tau = None;
    for tok in h.split_whitespace() {
        match tok.split_once('=') {
            Some(("heuristic", v)) => tag = Some(v.to_string()),
            Some(("tau", "na")) => {}
            Some(("tau", v)) => tau = Some(v.parse::<u32>().map_err(|_| format!("bad tau {v:?}"))?),
            _ => return Err(format!("unexpected header token {tok:?}")),
        }
    }
    let tag = tag.ok_or("header lacks heuristic=")?;
    match tag.to_ascii_uppercase().as_str() {
        "CN" | "AA" | "RA" | "CSP" => HeuristicKind::from_tag(&tag, tau)
            .map(TeacherSource::Heuristic)
            .map_err(|e| e.to_string()),
        _ => Ok(TeacherSource::External(tag)),
    }
}
