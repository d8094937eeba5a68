//! All-pairs shortest paths over the movement graph, with next-hop
//! reconstruction for replaying UAV travel.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::instance::{ProblemInstance, TimeStep, VertexId};

/// Internal marker for unreachable pairs; the public accessor maps it to
/// `None`.
const INF: TimeStep = TimeStep::MAX;

/// All-pairs movement distances plus a next-hop table.
///
/// `next_hop[s][d]` is the first vertex after `s` on a shortest path to `d`;
/// ties are broken toward the lowest-numbered next vertex, which makes path
/// reconstruction deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceTable {
    dist: Vec<Vec<TimeStep>>,
    next_hop: Vec<Vec<Option<VertexId>>>,
}

impl DistanceTable {
    /// Runs one Dijkstra search per source vertex and derives the next-hop
    /// table from the distance matrix.
    pub fn compute(instance: &ProblemInstance) -> Self {
        let n = instance.vertex_count();
        let mut dist = Vec::with_capacity(n);
        for s in 0..n {
            dist.push(single_source(instance, s));
        }

        // next_hop[s][d] = smallest neighbor w of s with
        // weight(s, w) + dist(w, d) == dist(s, d). Neighbor lists are sorted,
        // so the first match is the smallest.
        let mut next_hop = vec![vec![None; n]; n];
        for s in 0..n {
            for d in 0..n {
                if s == d || dist[s][d] == INF {
                    continue;
                }
                for &(w, wt) in instance.movement_neighbors(s) {
                    if dist[w][d] != INF && wt + dist[w][d] == dist[s][d] {
                        next_hop[s][d] = Some(w);
                        break;
                    }
                }
            }
        }
        Self { dist, next_hop }
    }

    pub fn vertex_count(&self) -> usize {
        self.dist.len()
    }

    /// Shortest travel time from `s` to `d`, or `None` when unreachable.
    pub fn get(&self, s: VertexId, d: VertexId) -> Option<TimeStep> {
        let v = self.dist[s][d];
        (v != INF).then_some(v)
    }

    /// Reconstructs one shortest path `s..=d`, following lowest-id next hops.
    pub fn path(&self, s: VertexId, d: VertexId) -> Option<Vec<VertexId>> {
        if self.dist[s][d] == INF {
            return None;
        }
        let mut path = vec![s];
        let mut cur = s;
        while cur != d {
            cur = self.next_hop[cur][d]?;
            path.push(cur);
        }
        Some(path)
    }
}

fn single_source(instance: &ProblemInstance, source: VertexId) -> Vec<TimeStep> {
    let n = instance.vertex_count();
    let mut dist = vec![INF; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, wt) in instance.movement_neighbors(v) {
            let nd = d + wt;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((nd, w)));
            }
        }
    }
    dist
}
