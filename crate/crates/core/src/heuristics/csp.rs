//! Capped shortest path via bidirectional BFS.

use crate::graph::{Graph, NodeId};

/// Reusable visitation state for repeated bidirectional searches.
///
/// Marks are stamped with a generation counter so a search never has to
/// clear `O(n)` memory.
#[derive(Debug, Clone)]
pub struct BfsScratch {
    stamp: Vec<u32>,
    depth: Vec<u8>,
    side: Vec<u8>,
    generation: u32,
    front: [Vec<NodeId>; 2],
    next: Vec<NodeId>,
}

impl BfsScratch {
    pub fn new(num_nodes: usize) -> Self {
        BfsScratch {
            stamp: vec![0; num_nodes],
            depth: vec![0; num_nodes],
            side: vec![0; num_nodes],
            generation: 0,
            front: [Vec::new(), Vec::new()],
            next: Vec::new(),
        }
    }

    fn reset(&mut self, num_nodes: usize) {
        if self.stamp.len() != num_nodes {
            *self = BfsScratch::new(num_nodes);
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
    }

    #[inline]
    fn mark(&mut self, v: NodeId, side: u8, depth: u8) {
        let v = v as usize;
        self.stamp[v] = self.generation;
        self.side[v] = side;
        self.depth[v] = depth;
    }

    #[inline]
    fn seen(&self, v: NodeId) -> Option<(u8, u8)> {
        let v = v as usize;
        (self.stamp[v] == self.generation).then(|| (self.side[v], self.depth[v]))
    }

    /// Shortest-path length between `s` and `t` if it is at most `cap`.
    ///
    /// Each side expands at most `cap / 2` levels (rounded up on the side
    /// that moves first), so only `cap/2`-hop neighborhoods are touched.
    /// Levels are expanded whole, always from the smaller frontier.
    pub fn distance(&mut self, g: &Graph, s: NodeId, t: NodeId, cap: u32) -> Option<u32> {
        if s == t {
            return Some(0);
        }
        self.reset(g.num_nodes());
        let cap = cap.min(u8::MAX as u32 * 2);
        let per_side = [cap.div_ceil(2), cap / 2];
        let mut depth = [0u32; 2];
        self.front[0].clear();
        self.front[1].clear();
        self.front[0].push(s);
        self.front[1].push(t);
        self.mark(s, 0, 0);
        self.mark(t, 1, 0);

        while depth[0] + depth[1] < cap {
            let can = [depth[0] < per_side[0], depth[1] < per_side[1]];
            let side = match can {
                [true, true] => usize::from(self.front[1].len() < self.front[0].len()),
                [true, false] => 0,
                [false, true] => 1,
                [false, false] => return None,
            };
            let other = 1 - side;
            self.next.clear();
            let mut met: Option<u32> = None;
            let frontier = std::mem::take(&mut self.front[side]);
            for &u in &frontier {
                for &w in g.adj(u) {
                    match self.seen(w) {
                        Some((sd, d)) if sd as usize == other => {
                            let len = depth[side] + 1 + d as u32;
                            met = Some(met.map_or(len, |m| m.min(len)));
                        }
                        Some(_) => {}
                        None => {
                            self.mark(w, side as u8, (depth[side] + 1) as u8);
                            self.next.push(w);
                        }
                    }
                }
            }
            self.front[side] = frontier;
            if let Some(len) = met {
                return (len <= cap).then_some(len);
            }
            if self.next.is_empty() {
                // One side's component is exhausted without meeting the other.
                return None;
            }
            std::mem::swap(&mut self.front[side], &mut self.next);
            depth[side] += 1;
        }
        None
    }
}
