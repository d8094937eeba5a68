//! Tours over the sensing set in the metric closure of the movement graph:
//! seeded nearest-neighbor construction with 2-opt improvement, min-max tour
//! splitting, and shortcutting of already-covered locations.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DistanceTable;
use crate::instance::{ProblemInstance, TimeStep, VertexId};

#[derive(Debug, Error)]
pub enum TourError {
    #[error("no sensing locations to tour")]
    NoSensing,
    #[error("sensing vertex {0} is unreachable from the base")]
    Unreachable(VertexId),
}

/// A closed tour starting and ending at the base, costed in the metric
/// closure of the movement graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    /// Vertex sequence; first and last are the base.
    pub sequence: Vec<VertexId>,
    /// Sum of metric-closure distances over consecutive pairs.
    pub cost: TimeStep,
}

impl Tour {
    pub fn new(sequence: Vec<VertexId>, distances: &DistanceTable) -> Self {
        let cost = sequence_cost(&sequence, distances);
        Self { sequence, cost }
    }

    /// Interior vertices, without the bracketing base entries.
    pub fn interior(&self) -> &[VertexId] {
        &self.sequence[1..self.sequence.len() - 1]
    }

    pub fn recompute_cost(&self, distances: &DistanceTable) -> TimeStep {
        sequence_cost(&self.sequence, distances)
    }
}

fn sequence_cost(sequence: &[VertexId], distances: &DistanceTable) -> TimeStep {
    sequence
        .windows(2)
        .map(|e| distances.get(e[0], e[1]).expect("tour vertices are connected"))
        .sum()
}

/// Result of splitting one tour into `k` base-anchored subtours.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtourSet {
    /// Number of non-empty subtours actually produced.
    pub k: usize,
    pub subtours: Vec<Tour>,
    /// Largest distance from the base to any tour vertex.
    pub c_max: TimeStep,
    /// Split positions that produced empty segments and were dropped.
    pub dropped_empty: usize,
}

/// Builds a tour through the base and every sensing location: seeded
/// randomized nearest-neighbor construction followed by first-improvement
/// 2-opt, best of `restarts` starts. Deterministic for a given
/// `(seed, restarts)` pair.
pub fn tsp_tour(
    instance: &ProblemInstance,
    distances: &DistanceTable,
    seed: u64,
    restarts: u32,
) -> Result<Tour, TourError> {
    tsp_tour_impl(instance, distances, seed, restarts, true)
}

/// As [`tsp_tour`], optionally skipping the 2-opt improvement phase.
pub fn tsp_tour_with(
    instance: &ProblemInstance,
    distances: &DistanceTable,
    seed: u64,
    restarts: u32,
    two_opt: bool,
) -> Result<Tour, TourError> {
    tsp_tour_impl(instance, distances, seed, restarts, two_opt)
}

fn tsp_tour_impl(
    instance: &ProblemInstance,
    distances: &DistanceTable,
    seed: u64,
    restarts: u32,
    improve: bool,
) -> Result<Tour, TourError> {
    let base = instance.base();
    let sensing: Vec<VertexId> = instance.sensing().iter().copied().collect();
    if sensing.is_empty() {
        return Err(TourError::NoSensing);
    }
    for &v in &sensing {
        if distances.get(base, v).is_none() {
            return Err(TourError::Unreachable(v));
        }
    }

    let mut best: Option<Tour> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(restart));
        let mut interior = nearest_neighbor(base, &sensing, distances, &mut rng);
        if improve {
            two_opt(base, &mut interior, distances);
        }
        let mut sequence = Vec::with_capacity(interior.len() + 2);
        sequence.push(base);
        sequence.extend_from_slice(&interior);
        sequence.push(base);
        let tour = Tour::new(sequence, distances);
        let better = match &best {
            None => true,
            Some(b) => tour.cost < b.cost,
        };
        if better {
            best = Some(tour);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Greedy construction from the base, sampling uniformly among the three
/// nearest unvisited candidates so different seeds produce different tours.
fn nearest_neighbor(
    base: VertexId,
    sensing: &[VertexId],
    distances: &DistanceTable,
    rng: &mut ChaCha8Rng,
) -> Vec<VertexId> {
    let mut remaining: Vec<VertexId> = sensing.to_vec();
    let mut tour = Vec::with_capacity(sensing.len());
    let mut cur = base;
    while !remaining.is_empty() {
        let mut ranked: Vec<(TimeStep, VertexId, usize)> = remaining
            .iter()
            .enumerate()
            .map(|(i, &v)| (distances.get(cur, v).expect("reachable"), v, i))
            .collect();
        ranked.sort_unstable();
        let pick = rng.gen_range(0..ranked.len().min(3));
        let (_, v, idx) = ranked[pick];
        remaining.swap_remove(idx);
        tour.push(v);
        cur = v;
    }
    tour
}

/// First-improvement 2-opt over the interior sequence, base held fixed at
/// both ends. Each improving move reverses one segment; the scan restarts
/// after every applied move and stops at a local optimum.
fn two_opt(base: VertexId, interior: &mut [VertexId], distances: &DistanceTable) {
    let n = interior.len();
    if n < 2 {
        return;
    }
    let d = |a: VertexId, b: VertexId| distances.get(a, b).expect("reachable");
    'scan: loop {
        for i in 0..n - 1 {
            let prev = if i == 0 { base } else { interior[i - 1] };
            for j in i + 1..n {
                let next = if j == n - 1 { base } else { interior[j + 1] };
                let before = d(prev, interior[i]) + d(interior[j], next);
                let after = d(prev, interior[j]) + d(interior[i], next);
                if after < before {
                    interior[i..=j].reverse();
                    continue 'scan;
                }
            }
        }
        return;
    }
}

/// Splits `tour` into at most `k` subtours, each closed through the base,
/// balancing the largest subtour length.
///
/// Split point `j` is the last tour vertex whose along-tour cumulative cost
/// stays within `(j/k) * (L - 2*c_max) + c_max`; every produced subtour then
/// costs at most `(L - 2*c_max)/k + 2*c_max`. Segments left empty by
/// coinciding split points are dropped.
pub fn k_splitour(tour: &Tour, k: usize, distances: &DistanceTable) -> SubtourSet {
    assert!(k >= 1, "k must be at least 1");
    let base = tour.sequence[0];
    let interior = tour.interior();
    let c_max = interior
        .iter()
        .map(|&v| distances.get(base, v).expect("reachable"))
        .max()
        .unwrap_or(0);
    if k == 1 || interior.is_empty() {
        return SubtourSet {
            k: 1,
            subtours: vec![tour.clone()],
            c_max,
            dropped_empty: 0,
        };
    }

    // cum[i] = along-tour cost from the base to interior[i].
    let mut cum = Vec::with_capacity(interior.len());
    let mut acc: TimeStep = 0;
    let mut prev = base;
    for &v in interior {
        acc += distances.get(prev, v).expect("reachable");
        cum.push(acc);
        prev = v;
    }

    let total = i128::from(tour.cost);
    let spread = total - 2 * i128::from(c_max);
    let kk = k as i128;
    // p(j) = last index with k*cum <= j*(L - 2c) + k*c, evaluated in exact
    // integer arithmetic.
    let mut cuts = Vec::with_capacity(k + 1);
    cuts.push(0usize);
    for j in 1..k {
        let bound = (j as i128) * spread + kk * i128::from(c_max);
        let p = cum.iter().rposition(|&c| kk * i128::from(c) <= bound).map_or(0, |i| i + 1);
        cuts.push(p.max(*cuts.last().unwrap()));
    }
    cuts.push(interior.len());

    let mut subtours = Vec::new();
    let mut dropped_empty = 0;
    for w in cuts.windows(2) {
        let segment = &interior[w[0]..w[1]];
        if segment.is_empty() {
            dropped_empty += 1;
            continue;
        }
        let mut sequence = Vec::with_capacity(segment.len() + 2);
        sequence.push(base);
        sequence.extend_from_slice(segment);
        sequence.push(base);
        subtours.push(Tour::new(sequence, distances));
    }
    SubtourSet {
        k: subtours.len(),
        subtours,
        c_max,
        dropped_empty,
    }
}

/// Removes `covered` vertices from a subtour, reconnecting their neighbors
/// through the metric closure. Under the metric closure's triangle
/// inequality, shortcutting never increases the cost.
pub fn shortcut(
    subtour: &Tour,
    covered: &std::collections::BTreeSet<VertexId>,
    distances: &DistanceTable,
) -> Tour {
    let base = subtour.sequence[0];
    let mut sequence = vec![base];
    sequence.extend(subtour.interior().iter().copied().filter(|v| !covered.contains(v)));
    sequence.push(base);
    Tour::new(sequence, distances)
}
