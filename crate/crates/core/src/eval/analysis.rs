use std::collections::BTreeSet;

use super::hit_flags;
use crate::error::{Error, Result};
use crate::graph::{canonical, Edge};

/// Positive test edges that a model ranks above the K-th negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveEdgeSet {
    pub k: usize,
    pub members: BTreeSet<Edge>,
    /// Size of the positive universe the set was drawn from.
    pub universe: usize,
}

impl PositiveEdgeSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Equals Hits@K of the scores the set was built from.
    pub fn hit_rate(&self) -> f64 {
        if self.universe == 0 {
            0.0
        } else {
            self.len() as f64 / self.universe as f64
        }
    }
}

/// Collects the positives hitting at `k` under the same rule as Hits@K.
pub fn positive_edge_set(
    pos_edges: &[Edge],
    pos_scores: &[f64],
    neg_scores: &[f64],
    k: usize,
) -> Result<PositiveEdgeSet> {
    if pos_edges.len() != pos_scores.len() {
        return Err(Error::DimensionMismatch {
            expected: pos_edges.len(),
            actual: pos_scores.len(),
        });
    }
    let flags = hit_flags(pos_scores, neg_scores, k)?;
    let members = pos_edges
        .iter()
        .zip(flags)
        .filter(|(_, hit)| *hit)
        .map(|(&(u, v), _)| canonical(u, v))
        .collect();
    Ok(PositiveEdgeSet {
        k,
        members,
        universe: pos_edges.len(),
    })
}

/// A ratio that may be undefined (empty denominator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    pub value: f64,
    pub defined: bool,
}

/// `|a ∩ b| / |a|`; `0` and undefined when `a` is empty.
pub fn subset_ratio(a: &PositiveEdgeSet, b: &PositiveEdgeSet) -> Ratio {
    if a.is_empty() {
        return Ratio {
            value: 0.0,
            defined: false,
        };
    }
    let common = a.members.intersection(&b.members).count();
    Ratio {
        value: common as f64 / a.len() as f64,
        defined: true,
    }
}

/// `|a ∩ b| / |a ∪ b|`; `1` and undefined when both are empty.
pub fn jaccard_overlap(a: &PositiveEdgeSet, b: &PositiveEdgeSet) -> Ratio {
    let union = a.members.union(&b.members).count();
    if union == 0 {
        return Ratio {
            value: 1.0,
            defined: false,
        };
    }
    let common = a.members.intersection(&b.members).count();
    Ratio {
        value: common as f64 / union as f64,
        defined: true,
    }
}

/// Pairwise Jaccard overlaps between several positive edge sets.
pub fn overlap_matrix(sets: &[PositiveEdgeSet]) -> Vec<Vec<f64>> {
    sets.iter()
        .map(|a| sets.iter().map(|b| jaccard_overlap(a, b).value).collect())
        .collect()
}
