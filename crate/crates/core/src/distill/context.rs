use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// How an anchor's context set is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextConfig {
    /// Random walks started from the anchor; each contributes its endpoint.
    pub num_nearby: usize,
    /// Maximum walk length; each walk draws its length from `1..=walk_length`.
    pub walk_length: usize,
    /// Distinct uniform non-anchor nodes.
    pub num_random: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            num_nearby: 10,
            walk_length: 2,
            num_random: 10,
        }
    }
}

impl ContextConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_nearby > 0 && self.walk_length == 0 {
            return Err(Error::invalid("walk_length must be positive when num_nearby > 0"));
        }
        if self.num_nearby + self.num_random < 2 {
            return Err(Error::invalid("context sampling must request at least 2 nodes"));
        }
        Ok(())
    }
}

/// Samples the context set of anchor `v`: endpoints of short random walks
/// plus uniform nodes, deduplicated in first-seen order.
pub fn sample_context(g: &Graph, v: NodeId, cfg: &ContextConfig, rng: &mut impl Rng) -> Result<Vec<NodeId>> {
    g.check_node(v)?;
    cfg.validate()?;
    let n = g.num_nodes();
    let mut out: Vec<NodeId> = Vec::with_capacity(cfg.num_nearby + cfg.num_random);
    let push = |out: &mut Vec<NodeId>, u: NodeId| {
        if u != v && !out.contains(&u) {
            out.push(u);
        }
    };
    if g.deg(v) > 0 {
        for _ in 0..cfg.num_nearby {
            let steps = rng.gen_range(1..=cfg.walk_length);
            let mut cur = v;
            for _ in 0..steps {
                let nb = g.adj(cur);
                if nb.is_empty() {
                    break;
                }
                cur = nb[rng.gen_range(0..nb.len())];
            }
            push(&mut out, cur);
        }
    }
    let want = cfg.num_random.min(n.saturating_sub(1));
    let mut drawn: Vec<NodeId> = Vec::with_capacity(want);
    while drawn.len() < want {
        let u = rng.gen_range(0..n as NodeId);
        if u != v && !drawn.contains(&u) {
            drawn.push(u);
        }
    }
    for u in drawn {
        push(&mut out, u);
    }
    if out.len() < 2 {
        return Err(Error::Degenerate(format!(
            "anchor {v} has only {} distinct context candidates",
            out.len()
        )));
    }
    Ok(out)
}
