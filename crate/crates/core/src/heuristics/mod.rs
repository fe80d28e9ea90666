//! Heuristic link scores used as distillation teachers.
//!
//! * CN: `|N(i) ∩ N(j)|`
//! * AA: `Σ_{k ∈ N(i) ∩ N(j)} 1 / ln Deg(k)`
//! * RA: `Σ_{k ∈ N(i) ∩ N(j)} 1 / Deg(k)`
//! * CSP: `1 / min(τ, SP(i, j))`, with unreachable pairs scoring `1/τ`.

mod csp;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use csp::BfsScratch;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Which heuristic to score with. CSP carries its distance cap `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeuristicKind {
    Cn,
    Aa,
    Ra,
    Csp { tau: u32 },
}

impl HeuristicKind {
    pub const DEFAULT_TAU: u32 = 6;

    /// CSP with a validated cap; `tau` must be even and at least 2.
    pub fn csp(tau: u32) -> Result<Self> {
        let k = HeuristicKind::Csp { tau };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HeuristicKind::Csp { tau } if tau < 2 || tau % 2 != 0 => Err(Error::invalid(
                format!("CSP cap tau must be even and >= 2, got {tau}"),
            )),
            _ => Ok(()),
        }
    }

    /// Upper-case tag used in guidance headers: `CN`, `AA`, `RA`, `CSP`.
    pub fn tag(&self) -> &'static str {
        match self {
            HeuristicKind::Cn => "CN",
            HeuristicKind::Aa => "AA",
            HeuristicKind::Ra => "RA",
            HeuristicKind::Csp { .. } => "CSP",
        }
    }

    pub fn tau(&self) -> Option<u32> {
        match *self {
            HeuristicKind::Csp { tau } => Some(tau),
            _ => None,
        }
    }

    /// Builds a kind from a tag and an optional cap (ignored unless CSP).
    pub fn from_tag(tag: &str, tau: Option<u32>) -> Result<Self> {
        match tag.to_ascii_uppercase().as_str() {
            "CN" => Ok(HeuristicKind::Cn),
            "AA" => Ok(HeuristicKind::Aa),
            "RA" => Ok(HeuristicKind::Ra),
            "CSP" => HeuristicKind::csp(tau.unwrap_or(Self::DEFAULT_TAU)),
            other => Err(Error::invalid(format!("unknown heuristic {other:?}"))),
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeuristicKind::Csp { tau } => write!(f, "csp{tau}"),
            other => f.write_str(&other.tag().to_ascii_lowercase()),
        }
    }
}

/// Parses `cn`, `aa`, `ra`, `csp` (default cap) or `csp<tau>` such as `csp4`.
impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("csp") {
            let rest = rest.trim_start_matches([':', '=']);
            let tau = if rest.is_empty() {
                Self::DEFAULT_TAU
            } else {
                rest.parse()
                    .map_err(|_| Error::invalid(format!("bad CSP cap in {s:?}")))?
            };
            return HeuristicKind::csp(tau);
        }
        HeuristicKind::from_tag(&lower, None)
    }
}

/// A raw (unnormalised) heuristic value for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub i: NodeId,
    pub j: NodeId,
    pub score: f64,
}

fn check_pair(g: &Graph, i: NodeId, j: NodeId) -> Result<()> {
    g.check_node(i)?;
    g.check_node(j)
}

pub fn score_cn(g: &Graph, i: NodeId, j: NodeId) -> Result<f64> {
    check_pair(g, i, j)?;
    let mut c = 0usize;
    g.for_each_common(i, j, |_| c += 1);
    Ok(c as f64)
}

pub fn score_aa(g: &Graph, i: NodeId, j: NodeId) -> Result<f64> {
    check_pair(g, i, j)?;
    let mut s = 0.0;
    // A common neighbor touches both i and j, so Deg(k) >= 2 unless i == j.
    g.for_each_common(i, j, |k| {
        let d = g.deg(k) as f64;
        if d > 1.0 {
            s += 1.0 / d.ln();
        }
    });
    Ok(s)
}

pub fn score_ra(g: &Graph, i: NodeId, j: NodeId) -> Result<f64> {
    check_pair(g, i, j)?;
    let mut s = 0.0;
    g.for_each_common(i, j, |k| s += 1.0 / g.deg(k) as f64);
    Ok(s)
}

pub fn score_csp(g: &Graph, i: NodeId, j: NodeId, tau: u32) -> Result<f64> {
    let mut scratch = BfsScratch::new(g.num_nodes());
    score_csp_with(g, i, j, tau, &mut scratch)
}

/// [`score_csp`] reusing caller-owned search state.
pub fn score_csp_with(
    g: &Graph,
    i: NodeId,
    j: NodeId,
    tau: u32,
    scratch: &mut BfsScratch,
) -> Result<f64> {
    check_pair(g, i, j)?;
    if i == j {
        return Err(Error::SelfPair(i));
    }
    if tau < 2 {
        return Err(Error::invalid(format!("CSP cap tau must be >= 2, got {tau}")));
    }
    let d = scratch.distance(g, i, j, tau).unwrap_or(tau);
    Ok(1.0 / f64::from(d.min(tau)))
}

/// Scores one pair with any heuristic.
pub fn score(g: &Graph, i: NodeId, j: NodeId, kind: HeuristicKind) -> Result<f64> {
    match kind {
        HeuristicKind::Cn => score_cn(g, i, j),
        HeuristicKind::Aa => score_aa(g, i, j),
        HeuristicKind::Ra => score_ra(g, i, j),
        HeuristicKind::Csp { tau } => score_csp(g, i, j, tau),
    }
}

/// Stateful scorer that reuses BFS buffers across many CSP queries.
pub struct Scorer<'g> {
    graph: &'g Graph,
    kind: HeuristicKind,
    scratch: Option<BfsScratch>,
}

impl<'g> Scorer<'g> {
    pub fn new(graph: &'g Graph, kind: HeuristicKind) -> Result<Self> {
        kind.validate()?;
        let scratch = matches!(kind, HeuristicKind::Csp { .. })
            .then(|| BfsScratch::new(graph.num_nodes()));
        Ok(Scorer {
            graph,
            kind,
            scratch,
        })
    }

    pub fn score(&mut self, i: NodeId, j: NodeId) -> Result<f64> {
        match (self.kind, self.scratch.as_mut()) {
            (HeuristicKind::Csp { tau }, Some(s)) => score_csp_with(self.graph, i, j, tau, s),
            (kind, _) => score(self.graph, i, j, kind),
        }
    }
}

const BATCH_CHUNK: usize = 512;

/// Scores every pair, preserving input order. Runs in parallel over chunks.
pub fn score_batch(
    g: &Graph,
    pairs: &[(NodeId, NodeId)],
    kind: HeuristicKind,
) -> Result<Vec<ScoredPair>> {
    kind.validate()?;
    let chunks: Vec<Result<Vec<ScoredPair>>> = pairs
        .par_chunks(BATCH_CHUNK)
        .map(|chunk| {
            let mut scorer = Scorer::new(g, kind)?;
            chunk
                .iter()
                .map(|&(i, j)| {
                    Ok(ScoredPair {
                        i,
                        j,
                        score: scorer.score(i, j)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(pairs.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Rescales one anchor's scores by their maximum; an all-zero list stays zero.
pub fn normalize_scores(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 {
        scores.iter().map(|s| s / max).collect()
    } else {
        vec![0.0; scores.len()]
    }
}

/// Per-anchor max normalisation of guidance scores into `[0, 1]`.
pub fn normalize_guidance(per_anchor: &[Vec<f64>]) -> Vec<Vec<f64>> {
    per_anchor.iter().map(|s| normalize_scores(s)).collect()
}
