//! Problem instances: movement/communication graphs, sensing sets and grid
//! construction.
//!
//! A [`ProblemInstance`] holds the weighted movement graph (travel times in
//! time steps), the communication graph (transmission times), the base
//! station vertex, the set of sensing locations and the mission parameters
//! (UAV count, latency bound). Grid instances place one vertex per cell,
//! connect 8-neighbors with unit movement cost and connect every cell pair
//! within Euclidean range `comm_range` with a communication edge.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex identifier. Grid vertices are row-major cell indices.
pub type VertexId = usize;
/// UAV identifier, `0..num_uavs`.
pub type UavId = usize;
/// Discrete time, in time steps.
pub type TimeStep = u64;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("grid must have positive area, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("base cell ({0}, {1}) lies outside the grid")]
    BaseOutsideGrid(usize, usize),
    #[error("communication range must be at least 1")]
    ZeroCommRange,
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    EdgeOutOfRange(VertexId, VertexId, usize),
    #[error("vertex {0} out of range 0..{1}")]
    VertexOutOfRange(VertexId, usize),
    #[error("at least one UAV is required")]
    NoUavs,
}

/// Parameters of a rectangular grid world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Cell of the base station, `(x, y)`.
    #[serde(rename = "base")]
    pub base_cell: (usize, usize),
    /// Communication range in cells (Euclidean distance between cell centers).
    pub comm_range: u32,
    /// Uniform transmission time per communication edge, in time steps.
    pub transmission_time: TimeStep,
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn vertex_at(&self, x: usize, y: usize) -> VertexId {
        y * self.width + x
    }

    pub fn cell_of(&self, v: VertexId) -> (usize, usize) {
        (v % self.width, v / self.width)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        if self.width == 0 || self.height == 0 {
            return Err(InstanceError::EmptyGrid {
                width: self.width,
                height: self.height,
            });
        }
        if self.base_cell.0 >= self.width || self.base_cell.1 >= self.height {
            return Err(InstanceError::BaseOutsideGrid(self.base_cell.0, self.base_cell.1));
        }
        if self.comm_range == 0 {
            return Err(InstanceError::ZeroCommRange);
        }
        Ok(())
    }
}

/// An immutable surveillance problem instance.
///
/// Movement and communication adjacency are symmetric; neighbor lists are
/// sorted by vertex id so that construction is deterministic and
/// serialization is byte-stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    vertex_count: usize,
    /// `movement[v]` = sorted `(neighbor, travel time)` pairs.
    movement: Vec<Vec<(VertexId, TimeStep)>>,
    /// `comm[v]` = sorted `(neighbor, transmission time)` pairs.
    comm: Vec<Vec<(VertexId, TimeStep)>>,
    base: VertexId,
    sensing: BTreeSet<VertexId>,
    /// Sensing locations in communication range of the base (`V_C`), derived.
    base_comm_set: BTreeSet<VertexId>,
    num_uavs: usize,
    latency_bound: TimeStep,
    /// Grid geometry when the instance was built from a grid, for reporting.
    grid: Option<GridSpec>,
}

impl ProblemInstance {
    /// Builds an instance from explicit edge lists. Edges are undirected;
    /// duplicates keep the smallest weight.
    pub fn from_edges(
        vertex_count: usize,
        base: VertexId,
        sensing: impl IntoIterator<Item = VertexId>,
        movement_edges: &[(VertexId, VertexId, TimeStep)],
        comm_edges: &[(VertexId, VertexId, TimeStep)],
        num_uavs: usize,
        latency_bound: TimeStep,
    ) -> Result<Self, InstanceError> {
        if num_uavs == 0 {
            return Err(InstanceError::NoUavs);
        }
        if base >= vertex_count {
            return Err(InstanceError::VertexOutOfRange(base, vertex_count));
        }
        let sensing: BTreeSet<VertexId> = sensing.into_iter().collect();
        if let Some(&v) = sensing.iter().find(|&&v| v >= vertex_count) {
            return Err(InstanceError::VertexOutOfRange(v, vertex_count));
        }
        let movement = build_adjacency(vertex_count, movement_edges)?;
        let comm = build_adjacency(vertex_count, comm_edges)?;
        let base_comm_set = derive_base_comm_set(&sensing, &comm, base);
        Ok(Self {
            vertex_count,
            movement,
            comm,
            base,
            sensing,
            base_comm_set,
            num_uavs,
            latency_bound,
            grid: None,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn base(&self) -> VertexId {
        self.base
    }

    pub fn sensing(&self) -> &BTreeSet<VertexId> {
        &self.sensing
    }

    /// Sensing locations with a communication edge to the base (`V_C`).
    pub fn base_comm_set(&self) -> &BTreeSet<VertexId> {
        &self.base_comm_set
    }

    pub fn num_uavs(&self) -> usize {
        self.num_uavs
    }

    pub fn latency_bound(&self) -> TimeStep {
        self.latency_bound
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn movement_neighbors(&self, v: VertexId) -> &[(VertexId, TimeStep)] {
        &self.movement[v]
    }

    pub fn comm_neighbors(&self, v: VertexId) -> &[(VertexId, TimeStep)] {
        &self.comm[v]
    }

    pub fn movement_edge_count(&self) -> usize {
        self.movement.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn comm_edge_count(&self) -> usize {
        self.comm.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Weight of the movement edge `(v, w)` if present.
    pub fn movement_weight(&self, v: VertexId, w: VertexId) -> Option<TimeStep> {
        lookup(&self.movement[v], w)
    }

    /// Weight of the communication edge `(v, w)` if present.
    pub fn comm_weight(&self, v: VertexId, w: VertexId) -> Option<TimeStep> {
        lookup(&self.comm[v], w)
    }

    /// Reporting coordinates for a vertex: grid cell when available,
    /// otherwise `(id, 0)`.
    pub fn coords(&self, v: VertexId) -> (usize, usize) {
        match &self.grid {
            Some(g) => g.cell_of(v),
            None => (v, 0),
        }
    }

    /// Returns a copy with a different UAV count and latency bound; the
    /// graphs are unchanged. Used by parameter sweeps.
    pub fn with_mission(&self, num_uavs: usize, latency_bound: TimeStep) -> Result<Self, InstanceError> {
        if num_uavs == 0 {
            return Err(InstanceError::NoUavs);
        }
        let mut out = self.clone();
        out.num_uavs = num_uavs;
        out.latency_bound = latency_bound;
        Ok(out)
    }

    /// Checks every instance invariant and returns the full list of
    /// violations. Violations are data, not failures: an invalid instance can
    /// still be inspected.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.base >= self.vertex_count {
            out.push(Violation::BaseOutOfRange(self.base));
        }
        if self.sensing.contains(&self.base) {
            out.push(Violation::BaseInSensing);
        }
        for &v in &self.sensing {
            if v >= self.vertex_count {
                out.push(Violation::SensingOutOfRange(v));
            }
        }
        if self.num_uavs == 0 {
            out.push(Violation::NoUavs);
        }
        for (v, nbrs) in self.movement.iter().enumerate() {
            for &(w, wt) in nbrs {
                if wt < 1 {
                    out.push(Violation::MovementWeightBelowOne(v, w));
                }
                if lookup(&self.movement[w], v) != Some(wt) {
                    out.push(Violation::AsymmetricMovement(v, w));
                }
            }
        }
        for (v, nbrs) in self.comm.iter().enumerate() {
            for &(w, wt) in nbrs {
                if lookup(&self.comm[w], v) != Some(wt) {
                    out.push(Violation::AsymmetricComm(v, w));
                }
            }
        }
        let derived = derive_base_comm_set(&self.sensing, &self.comm, self.base);
        if derived != self.base_comm_set {
            out.push(Violation::BaseCommSetMismatch);
        }
        if !self.connected_over_relevant() {
            out.push(Violation::MovementDisconnected);
        }
        out
    }

    /// BFS reachability from the base over the movement graph, restricted to
    /// checking that every sensing vertex is reachable.
    fn connected_over_relevant(&self) -> bool {
        if self.base >= self.vertex_count {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![self.base];
        seen[self.base] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.movement[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        self.sensing.iter().all(|&v| v < self.vertex_count && seen[v])
    }
}

/// A single instance-invariant violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    BaseInSensing,
    BaseOutOfRange(VertexId),
    SensingOutOfRange(VertexId),
    NoUavs,
    MovementWeightBelowOne(VertexId, VertexId),
    AsymmetricMovement(VertexId, VertexId),
    AsymmetricComm(VertexId, VertexId),
    BaseCommSetMismatch,
    MovementDisconnected,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::BaseInSensing => write!(f, "base must not be a sensing location"),
            Violation::BaseOutOfRange(v) => write!(f, "base vertex {v} out of range"),
            Violation::SensingOutOfRange(v) => write!(f, "sensing vertex {v} out of range"),
            Violation::NoUavs => write!(f, "num_uavs must be >= 1"),
            Violation::MovementWeightBelowOne(v, w) => {
                write!(f, "movement weight >= 1 violated on edge ({v}, {w})")
            }
            Violation::AsymmetricMovement(v, w) => {
                write!(f, "movement adjacency not symmetric at ({v}, {w})")
            }
            Violation::AsymmetricComm(v, w) => {
                write!(f, "communication adjacency not symmetric at ({v}, {w})")
            }
            Violation::BaseCommSetMismatch => {
                write!(f, "base_comm_set differs from sensing vertices comm-adjacent to the base")
            }
            Violation::MovementDisconnected => {
                write!(f, "movement graph not connected over base and sensing set")
            }
        }
    }
}

/// Builds a grid instance: one vertex per cell, unit-cost movement edges
/// between all 8 neighbors (diagonals included), communication edges between
/// every cell pair whose center distance is at most `comm_range`, and
/// sensing on every cell except the base.
pub fn build_grid_instance(
    spec: &GridSpec,
    num_uavs: usize,
    latency_bound: TimeStep,
) -> Result<ProblemInstance, InstanceError> {
    spec.validate()?;
    if num_uavs == 0 {
        return Err(InstanceError::NoUavs);
    }
    let n = spec.cell_count();
    let base = spec.vertex_at(spec.base_cell.0, spec.base_cell.1);

    let mut movement: Vec<Vec<(VertexId, TimeStep)>> = vec![Vec::new(); n];
    for y in 0..spec.height {
        for x in 0..spec.width {
            let v = spec.vertex_at(x, y);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= spec.width as i64 || ny >= spec.height as i64 {
                        continue;
                    }
                    movement[v].push((spec.vertex_at(nx as usize, ny as usize), 1));
                }
            }
            movement[v].sort_unstable();
        }
    }

    // TEMPORARY probe hack: COMM_METRIC=manhattan switches the ball.
    let manhattan = std::env::var("COMM_METRIC").map(|v| v == "manhattan").unwrap_or(false);
    let range_sq = u64::from(spec.comm_range) * u64::from(spec.comm_range);
    let mut comm: Vec<Vec<(VertexId, TimeStep)>> = vec![Vec::new(); n];
    for v in 0..n {
        let (vx, vy) = spec.cell_of(v);
        for w in 0..n {
            if w == v {
                continue;
            }
            let (wx, wy) = spec.cell_of(w);
            let dx = vx.abs_diff(wx) as u64;
            let dy = vy.abs_diff(wy) as u64;
            let in_range = if manhattan {
                dx + dy <= u64::from(spec.comm_range)
            } else {
                dx * dx + dy * dy <= range_sq
            };
            if in_range {
                comm[v].push((w, spec.transmission_time));
            }
        }
    }

    let sensing: BTreeSet<VertexId> = (0..n).filter(|&v| v != base).collect();
    let base_comm_set = derive_base_comm_set(&sensing, &comm, base);
    Ok(ProblemInstance {
        vertex_count: n,
        movement,
        comm,
        base,
        sensing,
        base_comm_set,
        num_uavs,
        latency_bound,
        grid: Some(*spec),
    })
}

fn build_adjacency(
    vertex_count: usize,
    edges: &[(VertexId, VertexId, TimeStep)],
) -> Result<Vec<Vec<(VertexId, TimeStep)>>, InstanceError> {
    let mut adj: Vec<Vec<(VertexId, TimeStep)>> = vec![Vec::new(); vertex_count];
    for &(u, v, w) in edges {
        if u >= vertex_count || v >= vertex_count || u == v {
            return Err(InstanceError::EdgeOutOfRange(u, v, vertex_count));
        }
        insert_min(&mut adj[u], v, w);
        insert_min(&mut adj[v], u, w);
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
    }
    Ok(adj)
}

fn insert_min(nbrs: &mut Vec<(VertexId, TimeStep)>, w: VertexId, wt: TimeStep) {
    match nbrs.iter_mut().find(|(x, _)| *x == w) {
        Some(entry) => entry.1 = entry.1.min(wt),
        None => nbrs.push((w, wt)),
    }
}

fn derive_base_comm_set(
    sensing: &BTreeSet<VertexId>,
    comm: &[Vec<(VertexId, TimeStep)>],
    base: VertexId,
) -> BTreeSet<VertexId> {
    sensing
        .iter()
        .copied()
        .filter(|&v| v < comm.len() && lookup(&comm[v], base).is_some())
        .collect()
}

fn lookup(nbrs: &[(VertexId, TimeStep)], w: VertexId) -> Option<TimeStep> {
    nbrs.binary_search_by_key(&w, |&(x, _)| x).ok().map(|i| nbrs[i].1)
}
