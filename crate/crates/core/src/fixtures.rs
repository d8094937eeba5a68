//! Small sample instances and random generators shared by the test suites
//! and the `oracle` CLI command.

use rand::prelude::*;

use crate::instance::{ProblemInstance, TimeStep, VertexId};

/// Source vertex of [`relay_fixture`].
pub const RELAY_SOURCE: VertexId = 8;

/// Nine-vertex relay example with two routes to the base: a long movement
/// corridor `8-5-4-3-2-1` and a shortcut through the relay pair `6-7`.
/// All movement edges cost 1 and all transmissions are free, so the optimal
/// latency from vertex 8 drops from 5 to 3 to 1 as the UAV budget grows from
/// 1 to 3. Vertex 0 is the base; the `1-0` movement edge keeps the base
/// connected but never beats the free transmission from vertex 1.
pub fn relay_fixture(num_uavs: usize, latency_bound: TimeStep) -> ProblemInstance {
    ProblemInstance::from_edges(
        9,
        0,
        [RELAY_SOURCE],
        &[
            (8, 5, 1),
            (5, 4, 1),
            (4, 3, 1),
            (3, 2, 1),
            (2, 1, 1),
            (5, 6, 1),
            (7, 1, 1),
            (1, 0, 1),
        ],
        &[(8, 4, 0), (8, 6, 0), (6, 7, 0), (1, 0, 0)],
        num_uavs,
        latency_bound,
    )
    .expect("fixture is well-formed")
}

/// A 1-by-`len` corridor: base at cell 0, sensing on every other cell, unit
/// movement edges between neighbors and free transmissions between adjacent
/// cells only (communication range 1).
pub fn line_instance(len: usize, num_uavs: usize, latency_bound: TimeStep) -> ProblemInstance {
    line_instance_wc(len, num_uavs, latency_bound, 0)
}

/// [`line_instance`] with a configurable per-edge transmission time.
pub fn line_instance_wc(
    len: usize,
    num_uavs: usize,
    latency_bound: TimeStep,
    transmission_time: TimeStep,
) -> ProblemInstance {
    assert!(len >= 2);
    let movement: Vec<_> = (0..len - 1).map(|i| (i, i + 1, 1)).collect();
    let comm: Vec<_> = (0..len - 1).map(|i| (i, i + 1, transmission_time)).collect();
    ProblemInstance::from_edges(len, 0, 1..len, &movement, &comm, num_uavs, latency_bound)
        .expect("line is well-formed")
}

/// Random connected instance for oracle cross-checks: up to `max_vertices`
/// vertices (at least 2), a random spanning tree plus extra movement edges
/// with weights in {1, 2}, and random communication edges with weights in
/// {0, 1, 2}.
pub fn random_small_instance(
    rng: &mut impl Rng,
    max_vertices: usize,
    num_uavs: usize,
) -> ProblemInstance {
    let n = rng.gen_range(2..=max_vertices);
    let base = 0;
    let mut movement = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        movement.push((parent, v, rng.gen_range(1..=2)));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            movement.push((u, v, rng.gen_range(1..=2)));
        }
    }
    let mut comm = Vec::new();
    for _ in 0..rng.gen_range(1..=2 * n) {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            comm.push((u, v, rng.gen_range(0..=2)));
        }
    }
    ProblemInstance::from_edges(n, base, 1..n, &movement, &comm, num_uavs, 10)
        .expect("generated instance is well-formed")
}
