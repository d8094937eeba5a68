//! Minimum-latency paths: fastest store-and-forward relay routes from a
//! source vertex to the base with a bounded number of UAVs.
//!
//! The search runs on a layered expansion of the instance: a state `(v, j)`
//! means the data is at vertex `v` after `j` relay hand-offs. Movement edges
//! keep the counter, communication edges raise it by one (each hand-off
//! consumes one UAV), except hand-offs into the base, which the base radio
//! receives without consuming a UAV. A budget of `b` UAVs allows counters
//! `0..=b-1`.
//!
//! `lock_first_leg` removes all movement at counter level zero: the UAV that
//! captured the data transmits from where it stands. The batching heuristics
//! use this to model a dedicated sensing UAV.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{ProblemInstance, TimeStep, VertexId};

const INF: TimeStep = TimeStep::MAX;

/// A vertex of the expanded graph: data location plus hand-offs used so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub vertex: VertexId,
    pub used: usize,
}

/// Kind of an expanded-graph edge. `Handoff` is a transmission whose head is
/// the base; it does not raise the counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Handoff,
    Move,
    Relay,
}

/// Layered state graph for one `(budget, lock_first_leg)` combination.
/// States and edges are enumerated on demand from the instance adjacency.
#[derive(Debug, Clone, Copy)]
pub struct ExpandedGraph<'a> {
    instance: &'a ProblemInstance,
    budget: usize,
    lock_first_leg: bool,
}

impl<'a> ExpandedGraph<'a> {
    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn destination(&self) -> VertexId {
        self.instance.base()
    }

    /// Number of states, `|V| * budget`.
    pub fn state_count(&self) -> usize {
        self.instance.vertex_count() * self.budget
    }

    fn index(&self, s: State) -> usize {
        s.vertex * self.budget + s.used
    }

    /// Outgoing edges of a state, in deterministic order: hand-offs to the
    /// base first, then movement, then relays, each sorted by head vertex.
    pub fn successors(&self, s: State) -> Vec<(State, TimeStep, EdgeKind)> {
        let base = self.instance.base();
        let mut out = Vec::new();
        for &(w, wc) in self.instance.comm_neighbors(s.vertex) {
            if w == base {
                out.push((State { vertex: base, used: s.used }, wc, EdgeKind::Handoff));
            }
        }
        if !(self.lock_first_leg && s.used == 0) {
            for &(w, wt) in self.instance.movement_neighbors(s.vertex) {
                out.push((State { vertex: w, used: s.used }, wt, EdgeKind::Move));
            }
        }
        if s.used + 1 < self.budget {
            for &(w, wc) in self.instance.comm_neighbors(s.vertex) {
                if w != base {
                    out.push((State { vertex: w, used: s.used + 1 }, wc, EdgeKind::Relay));
                }
            }
        }
        out
    }

    /// Shortest distance from every state to the base (reached at any counter
    /// level), by Dijkstra over reversed edges seeded at all base states.
    fn distances_to_base(&self) -> Vec<TimeStep> {
        let base = self.instance.base();
        let mut dist = vec![INF; self.state_count()];
        let mut heap: BinaryHeap<Reverse<(TimeStep, usize)>> = BinaryHeap::new();
        for used in 0..self.budget {
            let idx = self.index(State { vertex: base, used });
            dist[idx] = 0;
            heap.push(Reverse((0, idx)));
        }
        while let Some(Reverse((d, idx))) = heap.pop() {
            if d > dist[idx] {
                continue;
            }
            let w = idx / self.budget;
            let j = idx % self.budget;
            let mut relax = |pred: usize, cost: TimeStep| {
                let nd = d + cost;
                if nd < dist[pred] {
                    dist[pred] = nd;
                    heap.push(Reverse((nd, pred)));
                }
            };
            // Movement edge (x, j) -> (w, j); absent at level 0 when locked.
            if !(self.lock_first_leg && j == 0) {
                for &(x, wt) in self.instance.movement_neighbors(w) {
                    relax(x * self.budget + j, wt);
                }
            }
            if w == base {
                // Hand-off (v, j) -> (base, j), counter unchanged.
                for &(v, wc) in self.instance.comm_neighbors(base) {
                    relax(v * self.budget + j, wc);
                }
            } else if j >= 1 {
                // Relay (v, j-1) -> (w, j).
                for &(v, wc) in self.instance.comm_neighbors(w) {
                    relax(v * self.budget + (j - 1), wc);
                }
            }
        }
        dist
    }
}

/// Constructs the expanded graph. `budget` must be within `1..=num_uavs`.
pub fn build_expanded_graph(
    instance: &ProblemInstance,
    budget: usize,
    lock_first_leg: bool,
) -> ExpandedGraph<'_> {
    assert!(
        budget >= 1 && budget <= instance.num_uavs(),
        "budget {budget} outside 1..={}",
        instance.num_uavs()
    );
    ExpandedGraph { instance, budget, lock_first_leg }
}

/// One UAV's portion of a minimum-latency path. Times are relative to the
/// capture of the data at the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpLeg {
    /// Where this UAV receives the data (`sv`).
    pub start_vertex: VertexId,
    /// Where it hands the data off or enters the base (`ev`).
    pub end_vertex: VertexId,
    /// Movement path `sv..=ev`; a single element means the UAV stands still.
    pub path: Vec<VertexId>,
    /// When the UAV starts carrying the data (`st`).
    pub start_time: TimeStep,
    /// When the next leg (or the base) has received the data (`et`).
    pub end_time: TimeStep,
}

impl MlpLeg {
    pub fn is_stationary(&self) -> bool {
        self.path.len() <= 1
    }
}

/// A full relay schedule: one leg per UAV, hand-off times chained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSchedule {
    pub legs: Vec<MlpLeg>,
    pub total_latency: TimeStep,
}

impl MlpSchedule {
    /// Number of UAVs the schedule occupies.
    pub fn uavs_used(&self) -> usize {
        self.legs.len()
    }
}

/// Shortest-latency solver with distance tables precomputed for every budget
/// `1..=num_uavs`, locked and unlocked. Immutable after construction, safe to
/// share across threads.
pub struct MlpSolver<'a> {
    instance: &'a ProblemInstance,
    /// `tables[locked as usize][budget - 1][vertex * budget + used]`.
    tables: [Vec<Vec<TimeStep>>; 2],
}

impl<'a> MlpSolver<'a> {
    pub fn new(instance: &'a ProblemInstance) -> Self {
        let build = |locked: bool| {
            (1..=instance.num_uavs())
                .map(|b| {
                    ExpandedGraph { instance, budget: b, lock_first_leg: locked }.distances_to_base()
                })
                .collect::<Vec<_>>()
        };
        Self { instance, tables: [build(false), build(true)] }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    fn table(&self, budget: usize, lock_first_leg: bool) -> &[TimeStep] {
        assert!(
            budget >= 1 && budget <= self.instance.num_uavs(),
            "budget {budget} outside 1..={}",
            self.instance.num_uavs()
        );
        &self.tables[usize::from(lock_first_leg)][budget - 1]
    }

    /// Latency of the minimum-latency path from `source` to the base with at
    /// most `budget` UAVs, or `None` when no relay route exists.
    pub fn min_latency(
        &self,
        source: VertexId,
        budget: usize,
        lock_first_leg: bool,
    ) -> Option<TimeStep> {
        let d = self.table(budget, lock_first_leg)[source * budget];
        (d != INF).then_some(d)
    }

    /// Extracts the per-UAV legs of the minimum-latency path. Ties between
    /// equal-latency paths are broken by the lexicographically smallest state
    /// sequence (lowest vertex id, then lowest counter).
    pub fn min_latency_path(
        &self,
        source: VertexId,
        budget: usize,
        lock_first_leg: bool,
    ) -> Option<MlpSchedule> {
        let table = self.table(budget, lock_first_leg);
        let graph = ExpandedGraph { instance: self.instance, budget, lock_first_leg };
        let base = self.instance.base();

        let mut cur = State { vertex: source, used: 0 };
        if table[graph.index(cur)] == INF {
            return None;
        }
        let total = table[graph.index(cur)];

        let mut legs: Vec<MlpLeg> = Vec::new();
        let mut leg_start = source;
        let mut leg_path = vec![source];
        let mut leg_move_cost: TimeStep = 0;
        let mut clock: TimeStep = 0;

        while cur.vertex != base {
            // Successors are ordered hand-off < move < relay per head vertex;
            // scanning for the minimum (state, kind) keeps the walk
            // deterministic when a hand-off and a move tie on the same state.
            let remaining = table[graph.index(cur)];
            let next = graph
                .successors(cur)
                .into_iter()
                .filter(|&(nxt, cost, _)| {
                    let dn = table[graph.index(nxt)];
                    dn != INF && dn + cost == remaining
                })
                .min_by_key(|&(nxt, _, kind)| (nxt, kind_rank(kind)))
                .expect("finite distance implies a consistent successor");
            let (nxt, cost, kind) = next;
            match kind {
                EdgeKind::Move => {
                    leg_path.push(nxt.vertex);
                    leg_move_cost += cost;
                    if nxt.vertex == base {
                        // Physical delivery: the leg ends by entering the base.
                        let st = clock;
                        let et = st + leg_move_cost;
                        legs.push(MlpLeg {
                            start_vertex: leg_start,
                            end_vertex: base,
                            path: std::mem::take(&mut leg_path),
                            start_time: st,
                            end_time: et,
                        });
                        clock = et;
                    }
                }
                EdgeKind::Relay | EdgeKind::Handoff => {
                    let st = clock;
                    let et = st + leg_move_cost + cost;
                    legs.push(MlpLeg {
                        start_vertex: leg_start,
                        end_vertex: cur.vertex,
                        path: std::mem::take(&mut leg_path),
                        start_time: st,
                        end_time: et,
                    });
                    clock = et;
                    leg_start = nxt.vertex;
                    leg_path = vec![nxt.vertex];
                    leg_move_cost = 0;
                }
            }
            cur = nxt;
        }

        if legs.is_empty() {
            // Source is the base: a single empty leg.
            legs.push(MlpLeg {
                start_vertex: base,
                end_vertex: base,
                path: vec![base],
                start_time: 0,
                end_time: 0,
            });
        }
        debug_assert_eq!(clock, total);
        Some(MlpSchedule { legs, total_latency: total })
    }
}

fn kind_rank(kind: EdgeKind) -> u8 {
    match kind {
        EdgeKind::Handoff => 0,
        EdgeKind::Move => 1,
        EdgeKind::Relay => 2,
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle guard: instance has {vertices} vertices, budget {budget}; limits are 12 and 4")]
    Guard { vertices: usize, budget: usize },
}

/// Exhaustive label-correcting oracle for `min_latency`, implemented
/// independently of the expanded-graph search: Bellman-Ford-style relaxation
/// over `(vertex, uavs used)` labels iterated to a fixpoint.
///
/// Guarded to small inputs; use only for verification.
pub fn mlp_oracle(
    instance: &ProblemInstance,
    source: VertexId,
    budget: usize,
    lock_first_leg: bool,
) -> Result<Option<TimeStep>, OracleError> {
    if instance.vertex_count() > 12 || budget > 4 {
        return Err(OracleError::Guard { vertices: instance.vertex_count(), budget });
    }
    assert!(budget >= 1);
    let n = instance.vertex_count();
    let base = instance.base();
    let mut label = vec![vec![INF; budget]; n];
    label[source][0] = 0;
    loop {
        let mut changed = false;
        for v in 0..n {
            for u in 0..budget {
                let d = label[v][u];
                if d == INF {
                    continue;
                }
                if !(lock_first_leg && u == 0) {
                    for &(w, wt) in instance.movement_neighbors(v) {
                        if d + wt < label[w][u] {
                            label[w][u] = d + wt;
                            changed = true;
                        }
                    }
                }
                for &(w, wc) in instance.comm_neighbors(v) {
                    if w == base {
                        if d + wc < label[base][u] {
                            label[base][u] = d + wc;
                            changed = true;
                        }
                    } else if u + 1 < budget && d + wc < label[w][u + 1] {
                        label[w][u + 1] = d + wc;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let best = (0..budget).map(|u| label[base][u]).min().unwrap_or(INF);
    Ok((best != INF).then_some(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Replays a schedule edge by edge and checks chaining, comm adjacency
    /// and the latency arithmetic.
    fn check_schedule(instance: &ProblemInstance, sched: &MlpSchedule, source: VertexId) {
        let base = instance.base();
        assert_eq!(sched.legs[0].start_vertex, source);
        assert_eq!(sched.legs[0].start_time, 0);
        let mut prev_et = 0;
        for (i, leg) in sched.legs.iter().enumerate() {
            assert_eq!(leg.start_time, prev_et, "leg {i} start chains");
            assert_eq!(leg.path.first(), Some(&leg.start_vertex));
            assert_eq!(leg.path.last(), Some(&leg.end_vertex));
            let move_cost: TimeStep = leg
                .path
                .windows(2)
                .map(|e| instance.movement_weight(e[0], e[1]).expect("path uses movement edges"))
                .sum();
            let comm_out = if i + 1 < sched.legs.len() {
                let next_sv = sched.legs[i + 1].start_vertex;
                instance
                    .comm_weight(leg.end_vertex, next_sv)
                    .expect("consecutive legs comm-adjacent")
            } else if leg.end_vertex == base {
                0
            } else {
                instance.comm_weight(leg.end_vertex, base).expect("final hand-off reaches base")
            };
            assert_eq!(leg.end_time, leg.start_time + move_cost + comm_out, "leg {i} timing");
            prev_et = leg.end_time;
        }
        assert_eq!(sched.total_latency, prev_et);
    }

    #[test]
    fn relay_fixture_latencies() {
        let inst = fixtures::relay_fixture(3, 5);
        let solver = MlpSolver::new(&inst);
        let s = fixtures::RELAY_SOURCE;
        assert_eq!(solver.min_latency(s, 1, false), Some(5));
        assert_eq!(solver.min_latency(s, 2, false), Some(3));
        assert_eq!(solver.min_latency(s, 3, false), Some(1));
    }

    #[test]
    fn relay_fixture_two_uav_path() {
        let inst = fixtures::relay_fixture(3, 5);
        let solver = MlpSolver::new(&inst);
        let sched = solver.min_latency_path(fixtures::RELAY_SOURCE, 2, false).unwrap();
        assert_eq!(sched.total_latency, 3);
        assert_eq!(sched.legs.len(), 2);
        // The state-sequence tie-break selects the stop-and-transmit route:
        // the first UAV transmits from the source, the second walks the
        // bottom corridor to the hand-off vertex.
        assert_eq!(sched.legs[0].start_vertex, fixtures::RELAY_SOURCE);
        assert!(sched.legs[0].is_stationary());
        assert_eq!(sched.legs[0].end_time, 0);
        assert_eq!(sched.legs[1].path, vec![4, 3, 2, 1]);
        assert_eq!(sched.legs[1].end_time, 3);
        check_schedule(&inst, &sched, fixtures::RELAY_SOURCE);
    }

    #[test]
    fn relay_fixture_three_uav_path() {
        let inst = fixtures::relay_fixture(3, 5);
        let solver = MlpSolver::new(&inst);
        let sched = solver.min_latency_path(fixtures::RELAY_SOURCE, 3, false).unwrap();
        assert_eq!(sched.total_latency, 1);
        assert_eq!(sched.legs.len(), 3);
        assert!(sched.legs[0].is_stationary());
        assert!(sched.legs[1].is_stationary());
        assert_eq!(sched.legs[2].path, vec![7, 1]);
        check_schedule(&inst, &sched, fixtures::RELAY_SOURCE);
    }

    #[test]
    fn single_uav_walks_the_corridor() {
        let inst = fixtures::relay_fixture(3, 5);
        let solver = MlpSolver::new(&inst);
        let sched = solver.min_latency_path(fixtures::RELAY_SOURCE, 1, false).unwrap();
        assert_eq!(sched.total_latency, 5);
        assert_eq!(sched.legs.len(), 1);
        assert_eq!(sched.legs[0].path, vec![8, 5, 4, 3, 2, 1]);
        check_schedule(&inst, &sched, fixtures::RELAY_SOURCE);
    }

    #[test]
    fn source_at_base_is_free() {
        let inst = fixtures::relay_fixture(3, 5);
        let solver = MlpSolver::new(&inst);
        for budget in 1..=3 {
            assert_eq!(solver.min_latency(0, budget, false), Some(0));
            let sched = solver.min_latency_path(0, budget, true).unwrap();
            assert_eq!(sched.total_latency, 0);
            assert_eq!(sched.legs.len(), 1);
            assert!(sched.legs[0].is_stationary());
        }
    }

    #[test]
    fn line_graph_two_uav_relay() {
        // Base c0, comm only between adjacent cells, transmissions free.
        let inst = fixtures::line_instance(5, 2, 2);
        let solver = MlpSolver::new(&inst);
        let expected = mlp_oracle(&inst, 4, 2, false).unwrap();
        assert_eq!(expected, Some(2));
        assert_eq!(solver.min_latency(4, 2, false), expected);
        let sched = solver.min_latency_path(4, 2, false).unwrap();
        assert_eq!(sched.legs.len(), 2);
        check_schedule(&inst, &sched, 4);
    }

    #[test]
    fn expansion_state_count_and_missing_edges() {
        let inst = fixtures::relay_fixture(3, 5);
        let graph = build_expanded_graph(&inst, 2, false);
        assert_eq!(graph.state_count(), inst.vertex_count() * 2);
        // From (6, 1) with budget 2 the only edge is the movement edge to
        // (5, 1): vertex 7 is comm-adjacent but a relay would exceed the
        // budget, and (6, 7) is not a movement edge.
        let succ = graph.successors(State { vertex: 6, used: 1 });
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, State { vertex: 5, used: 1 });
        assert_eq!(succ[0].2, EdgeKind::Move);
        assert!(succ.iter().all(|(s, _, _)| s.vertex != 7));
    }

    #[test]
    fn large_grid_expansion_is_bounded() {
        let spec = crate::instance::GridSpec {
            width: 20,
            height: 20,
            base_cell: (0, 0),
            comm_range: 4,
            transmission_time: 0,
        };
        let inst = crate::instance::build_grid_instance(&spec, 6, 14).unwrap();
        let graph = build_expanded_graph(&inst, 6, false);
        assert!(graph.state_count() <= 2400);
    }

    #[test]
    fn locked_level_zero_has_no_moves() {
        let inst = fixtures::line_instance(5, 3, 4);
        let graph = build_expanded_graph(&inst, 3, true);
        let succ = graph.successors(State { vertex: 4, used: 0 });
        assert!(succ.iter().all(|&(_, _, k)| k != EdgeKind::Move));
        let succ = graph.successors(State { vertex: 4, used: 1 });
        assert!(succ.iter().any(|&(_, _, k)| k == EdgeKind::Move));
    }

    #[test]
    fn locked_never_beats_unlocked_and_budget_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..120 {
            let inst = fixtures::random_small_instance(&mut rng, 8, 3);
            let solver = MlpSolver::new(&inst);
            for v in 0..inst.vertex_count() {
                let mut prev = None;
                for b in 1..=inst.num_uavs() {
                    let unlocked = solver.min_latency(v, b, false);
                    let locked = solver.min_latency(v, b, true);
                    if let (Some(l), Some(u)) = (locked, unlocked) {
                        assert!(l >= u, "lock must not decrease latency");
                    }
                    if locked.is_some() {
                        assert!(unlocked.is_some());
                    }
                    if let (Some(p), Some(c)) = (prev, unlocked) {
                        assert!(c <= p, "latency monotone in budget");
                    }
                    if unlocked.is_some() {
                        prev = unlocked;
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_matches_solver_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for case in 0..60 {
            let inst = fixtures::random_small_instance(&mut rng, 8, 3);
            let solver = MlpSolver::new(&inst);
            for v in 0..inst.vertex_count() {
                for b in 1..=inst.num_uavs() {
                    for locked in [false, true] {
                        let got = solver.min_latency(v, b, locked);
                        let want = mlp_oracle(&inst, v, b, locked).unwrap();
                        assert_eq!(got, want, "case {case}, v {v}, budget {b}, locked {locked}");
                    }
                }
            }
        }
    }

    #[test]
    fn schedules_replay_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..80 {
            let inst = fixtures::random_small_instance(&mut rng, 8, 3);
            let solver = MlpSolver::new(&inst);
            for v in 0..inst.vertex_count() {
                for b in 1..=inst.num_uavs() {
                    for locked in [false, true] {
                        if let Some(sched) = solver.min_latency_path(v, b, locked) {
                            assert_eq!(Some(sched.total_latency), solver.min_latency(v, b, locked));
                            assert!(sched.legs.len() <= b);
                            check_schedule(&inst, &sched, v);
                            if locked && v != inst.base() {
                                assert!(sched.legs[0].is_stationary());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn disconnected_source_is_infeasible() {
        let inst =
            ProblemInstance::from_edges(4, 0, [3], &[(0, 1, 1), (2, 3, 1)], &[(0, 1, 0)], 2, 5)
                .unwrap();
        let solver = MlpSolver::new(&inst);
        assert_eq!(solver.min_latency(3, 2, false), None);
        assert!(solver.min_latency_path(3, 2, false).is_none());
        assert_eq!(mlp_oracle(&inst, 3, 2, false).unwrap(), None);
    }

    #[test]
    fn oracle_guard_rejects_large_inputs() {
        let spec = crate::instance::GridSpec {
            width: 5,
            height: 4,
            base_cell: (0, 0),
            comm_range: 1,
            transmission_time: 0,
        };
        let inst = crate::instance::build_grid_instance(&spec, 6, 10).unwrap();
        assert!(matches!(mlp_oracle(&inst, 3, 2, false), Err(OracleError::Guard { .. })));
        let small = fixtures::line_instance(5, 6, 10);
        assert!(matches!(mlp_oracle(&small, 3, 5, false), Err(OracleError::Guard { .. })));
    }
}
