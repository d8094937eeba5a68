//! Patrol planning: per-location UAV requirements, group formation, tour
//! splitting, dispatch scheduling with absolute start times, batching and
//! shortcutting.
//!
//! Three heuristics share the machinery:
//!
//! * `h1` relays every location's data to the base immediately after its
//!   visit, with the minimum UAV budget that meets the latency bound.
//! * `h2` dedicates one sensing UAV per subtour, sizes relay chains so extra
//!   UAVs could not lower the latency further, and batches consecutive
//!   locations while the bound permits.
//! * `h3` batches like `h2` but uses the minimum budget per dispatch like
//!   `h1`; with a budget of one the sensing UAV delivers the batch itself.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DistanceTable;
use crate::instance::{ProblemInstance, TimeStep, UavId, VertexId};
use crate::matching::{minmax_matching, CostMatrix};
use crate::mlp::{MlpSchedule, MlpSolver};
use crate::tour::{k_splitour, SubtourSet, Tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    H1,
    H2,
    H3,
}

impl std::str::FromStr for Heuristic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h1" => Ok(Heuristic::H1),
            "h2" => Ok(Heuristic::H2),
            "h3" => Ok(Heuristic::H3),
            other => Err(format!("unknown heuristic '{other}', expected h1, h2 or h3")),
        }
    }
}

impl std::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Heuristic::H1 => write!(f, "h1"),
            Heuristic::H2 => write!(f, "h2"),
            Heuristic::H3 => write!(f, "h3"),
        }
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(
        "infeasible: sensing vertex {vertex} cannot meet latency bound {bound} \
         with {num_uavs} UAVs (best achievable: {best})"
    )]
    Infeasible {
        vertex: VertexId,
        bound: TimeStep,
        num_uavs: usize,
        best: String,
    },
    #[error("tour does not visit sensing vertex {0}")]
    TourMismatch(VertexId),
    #[error(transparent)]
    Matching(#[from] crate::matching::MatchingError),
}

/// One scheduled relay launch: the data of `batch` leaves `location` at
/// `start_time` and reaches the base `schedule.total_latency` steps later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchRecord {
    /// Dispatch point; the last batch member.
    pub location: VertexId,
    /// Sensing locations whose data this dispatch carries, in visit order.
    pub batch: Vec<VertexId>,
    pub schedule: MlpSchedule,
    /// Assigned UAV per schedule leg.
    pub assignment: Vec<UavId>,
    /// Absolute mission time at which the first leg starts.
    pub start_time: TimeStep,
    /// Absolute capture time per covered vertex: batch members plus
    /// locations captured in passing on the relay legs.
    pub capture_times: BTreeMap<VertexId, TimeStep>,
}

impl DispatchRecord {
    pub fn delivery_time(&self) -> TimeStep {
        self.start_time + self.schedule.total_latency
    }
}

/// A full patrol plan for one round; rounds repeat with the per-group period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub heuristic: Heuristic,
    pub num_uavs: usize,
    pub latency_bound: TimeStep,
    /// UAVs required per sensing location (`r_v`).
    pub required: BTreeMap<VertexId, usize>,
    /// Disjoint UAV groups, one per subtour.
    pub groups: Vec<Vec<UavId>>,
    /// UAVs left over by group formation; they hold position at the base.
    pub idle_uavs: Vec<UavId>,
    pub subtours: SubtourSet,
    /// Dispatches per group, in subtour order.
    pub dispatches: Vec<Vec<DispatchRecord>>,
    /// Steady-state duration of one full round, per group. UAVs return to
    /// the base between rounds and repeat their round trajectory with this
    /// shift.
    pub round_periods: Vec<TimeStep>,
}

/// Position and earliest free time of one UAV during planning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UavState {
    pub vertex: VertexId,
    pub free_at: TimeStep,
}

/// Planning state of one group between dispatches (batched heuristics).
#[derive(Debug, Clone)]
pub struct GroupState {
    pub sensing_uav: UavId,
    pub sensing: UavState,
    /// Transport UAVs, sorted by id.
    pub transporters: Vec<(UavId, UavState)>,
    /// Start time of the previous dispatch.
    pub prev_start: TimeStep,
}

/// Fully projected dispatch, produced while probing batch lengths and reused
/// verbatim when the batch is committed.
#[derive(Debug, Clone)]
pub struct DispatchPreview {
    pub batch: Vec<VertexId>,
    pub schedule: MlpSchedule,
    /// Assigned UAV per leg; leg 1 is the sensing UAV.
    pub assignment: Vec<UavId>,
    pub start_time: TimeStep,
    pub capture_times: BTreeMap<VertexId, TimeStep>,
}

/// Planning context: immutable instance data shared by all heuristics.
pub struct Planner<'a> {
    instance: &'a ProblemInstance,
    distances: &'a DistanceTable,
    solver: &'a MlpSolver<'a>,
}

impl<'a> Planner<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        distances: &'a DistanceTable,
        solver: &'a MlpSolver<'a>,
    ) -> Self {
        Self { instance, distances, solver }
    }

    fn d(&self, s: VertexId, t: VertexId) -> TimeStep {
        self.distances.get(s, t).expect("movement graph connected over base and sensing")
    }

    /// Smallest budget meeting the latency bound, by interval bisection over
    /// the monotone latency curve. `None` when even the full fleet misses
    /// the bound.
    pub fn required_uavs_min(&self, v: VertexId, lock_first_leg: bool) -> Option<usize> {
        let n = self.instance.num_uavs();
        let bound = self.instance.latency_bound();
        let lat = |b: usize| self.solver.min_latency(v, b, lock_first_leg);
        match lat(n) {
            Some(l) if l <= bound => {}
            _ => return None,
        }
        let (mut lo, mut hi) = (1usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match lat(mid) {
                Some(l) if l <= bound => hi = mid,
                _ => lo = mid + 1,
            }
        }
        Some(lo)
    }

    /// Smallest budget whose latency equals the full-fleet latency, i.e. the
    /// point where additional UAVs stop helping. Ignores the latency bound.
    pub fn required_uavs_saturation(&self, v: VertexId, lock_first_leg: bool) -> Option<usize> {
        let n = self.instance.num_uavs();
        let lat = |b: usize| self.solver.min_latency(v, b, lock_first_leg);
        let target = lat(n)?;
        let (mut lo, mut hi) = (1usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if lat(mid) == Some(target) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    /// Latency of a dispatch from `v` with `budget` UAVs under the given
    /// heuristic's relay mode. The batched heuristics lock the first leg
    /// (the sensing UAV transmits in place); a budget of one under `h3`
    /// means the sensing UAV delivers the batch itself and may move.
    pub fn dispatch_latency(
        &self,
        heuristic: Heuristic,
        v: VertexId,
        budget: usize,
    ) -> Option<TimeStep> {
        match heuristic {
            Heuristic::H1 => self.solver.min_latency(v, budget, false),
            Heuristic::H2 => self.solver.min_latency(v, budget, true),
            Heuristic::H3 => {
                if budget == 1 {
                    self.solver.min_latency(v, 1, false)
                } else {
                    self.solver.min_latency(v, budget, true)
                }
            }
        }
    }

    fn dispatch_schedule(&self, heuristic: Heuristic, v: VertexId, budget: usize) -> MlpSchedule {
        let locked = match heuristic {
            Heuristic::H1 => false,
            Heuristic::H2 => true,
            Heuristic::H3 => budget > 1,
        };
        self.solver
            .min_latency_path(v, budget, locked)
            .expect("requirement computation guarantees feasibility")
    }

    /// Per-location UAV requirements for a heuristic, with an infeasibility
    /// witness if some location cannot be served within the bound.
    pub fn requirements(&self, heuristic: Heuristic) -> Result<BTreeMap<VertexId, usize>, PlanError> {
        let n = self.instance.num_uavs();
        let bound = self.instance.latency_bound();
        let mut required = BTreeMap::new();
        for &v in self.instance.sensing() {
            let r_v = match heuristic {
                Heuristic::H1 => self.required_uavs_min(v, false),
                Heuristic::H2 => {
                    // Saturation budget; feasibility is a separate check
                    // against the bound.
                    match self.required_uavs_saturation(v, true) {
                        Some(r) if self.solver.min_latency(v, r, true).unwrap() <= bound => Some(r),
                        _ => None,
                    }
                }
                Heuristic::H3 => {
                    // The self-delivery mode at budget 1 breaks monotonicity,
                    // so scan linearly.
                    (1..=n).find(|&b| {
                        matches!(self.dispatch_latency(Heuristic::H3, v, b), Some(l) if l <= bound)
                    })
                }
            };
            match r_v {
                Some(r) => {
                    required.insert(v, r);
                }
                None => {
                    let best = self
                        .dispatch_latency(heuristic, v, n)
                        .map_or_else(|| "unreachable".to_string(), |l| l.to_string());
                    return Err(PlanError::Infeasible {
                        vertex: v,
                        bound,
                        num_uavs: n,
                        best,
                    });
                }
            }
        }
        Ok(required)
    }

    pub fn plan(&self, heuristic: Heuristic, tour: &Tour) -> Result<Plan, PlanError> {
        for &v in self.instance.sensing() {
            if !tour.interior().contains(&v) {
                return Err(PlanError::TourMismatch(v));
            }
        }
        let required = self.requirements(heuristic)?;

        // Group size: the largest requirement outside the base's
        // communication range. A base-adjacent location can still demand a
        // longer chain when transmissions are slow; groups must cover every
        // dispatch budget.
        let mut r = required
            .iter()
            .filter(|(v, _)| !self.instance.base_comm_set().contains(*v))
            .map(|(_, &r)| r)
            .max()
            .unwrap_or(1);
        r = r.max(required.values().copied().max().unwrap_or(1));
        let k = (self.instance.num_uavs() / r).max(1);

        let subtours = k_splitour(tour, k, self.distances);
        let group_count = subtours.k;
        let groups: Vec<Vec<UavId>> = (0..group_count)
            .map(|g| (g * r..(g + 1) * r).collect())
            .collect();
        let idle_uavs: Vec<UavId> = (group_count * r..self.instance.num_uavs()).collect();

        let mut dispatches = Vec::with_capacity(group_count);
        let mut round_periods = Vec::with_capacity(group_count);
        for (group, subtour) in groups.iter().zip(&subtours.subtours) {
            let (records, period) = match heuristic {
                Heuristic::H1 => self.plan_group_immediate(&required, group, subtour)?,
                Heuristic::H2 | Heuristic::H3 => {
                    self.plan_group_batched(heuristic, &required, group, subtour)?
                }
            };
            dispatches.push(records);
            round_periods.push(period);
        }

        Ok(Plan {
            heuristic,
            num_uavs: self.instance.num_uavs(),
            latency_bound: self.instance.latency_bound(),
            required,
            groups,
            idle_uavs,
            subtours,
            dispatches,
            round_periods,
        })
    }

    pub fn plan_h1(&self, tour: &Tour) -> Result<Plan, PlanError> {
        self.plan(Heuristic::H1, tour)
    }

    pub fn plan_h2(&self, tour: &Tour) -> Result<Plan, PlanError> {
        self.plan(Heuristic::H2, tour)
    }

    pub fn plan_h3(&self, tour: &Tour) -> Result<Plan, PlanError> {
        self.plan(Heuristic::H3, tour)
    }

    /// `h1` group loop: every uncovered subtour vertex gets an immediate
    /// dispatch; all group members compete in the matching.
    fn plan_group_immediate(
        &self,
        required: &BTreeMap<VertexId, usize>,
        group: &[UavId],
        subtour: &Tour,
    ) -> Result<(Vec<DispatchRecord>, TimeStep), PlanError> {
        let base = self.instance.base();
        let own: BTreeSet<VertexId> = subtour.interior().iter().copied().collect();
        let mut states: Vec<UavState> =
            group.iter().map(|_| UavState { vertex: base, free_at: 0 }).collect();
        let mut duties = DutyLog::new(group);
        let mut covered: BTreeSet<VertexId> = BTreeSet::new();
        let mut records = Vec::new();
        let mut prev_start: TimeStep = 0;

        for &v in subtour.interior() {
            if covered.contains(&v) {
                continue;
            }
            let budget = required[&v];
            let schedule = self.dispatch_schedule(Heuristic::H1, v, budget);
            let needs = self.leg_needs(&schedule);

            let matrix = CostMatrix {
                entries: schedule
                    .legs
                    .iter()
                    .map(|leg| {
                        states
                            .iter()
                            .map(|s| s.free_at.max(prev_start) + self.d(s.vertex, leg.start_vertex))
                            .collect()
                    })
                    .collect(),
                uav_ids: group.to_vec(),
            };
            let assignment = minmax_matching(&matrix)?;

            // The dispatch starts at the latest time a matched UAV can be at
            // its start vertex (the matching's bottleneck).
            let start_time = assignment.bottleneck.max(prev_start);

            let mut capture_times = BTreeMap::from([(v, start_time)]);
            covered.insert(v);
            for (u, t) in passthrough_captures(self.instance, &schedule, start_time, &own, &covered)
            {
                capture_times.insert(u, t);
                covered.insert(u);
            }

            for (l, leg) in schedule.legs.iter().enumerate() {
                let uav = assignment.leg_to_uav[l];
                let idx = group.iter().position(|&m| m == uav).unwrap();
                duties.record(uav, start_time + needs[l], leg.start_vertex, start_time + leg.end_time, leg.end_vertex);
                states[idx] = UavState { vertex: leg.end_vertex, free_at: start_time + leg.end_time };
            }

            records.push(DispatchRecord {
                location: v,
                batch: vec![v],
                schedule,
                assignment: assignment.leg_to_uav,
                start_time,
                capture_times,
            });
            prev_start = start_time;
        }
        let period = duties.round_period(self, base);
        Ok((records, period))
    }

    /// `h2`/`h3` group loop: a fixed sensing UAV walks the subtour; data is
    /// dispatched in greedy maximal batches.
    fn plan_group_batched(
        &self,
        heuristic: Heuristic,
        required: &BTreeMap<VertexId, usize>,
        group: &[UavId],
        subtour: &Tour,
    ) -> Result<(Vec<DispatchRecord>, TimeStep), PlanError> {
        let base = self.instance.base();
        let own: BTreeSet<VertexId> = subtour.interior().iter().copied().collect();
        let seq: Vec<VertexId> = subtour.interior().to_vec();
        let mut state = GroupState {
            sensing_uav: group[0],
            sensing: UavState { vertex: base, free_at: 0 },
            transporters: group[1..]
                .iter()
                .map(|&m| (m, UavState { vertex: base, free_at: 0 }))
                .collect(),
            prev_start: 0,
        };
        let mut duties = DutyLog::new(group);
        let mut covered: BTreeSet<VertexId> = BTreeSet::new();
        let mut records = Vec::new();

        let mut i = 0;
        while i < seq.len() {
            if covered.contains(&seq[i]) {
                i += 1;
                continue;
            }
            let (end, preview) =
                self.max_batch_prefix(heuristic, required, &seq, i, &state, &covered)?;

            // Commit the preview.
            let schedule = &preview.schedule;
            let mut capture_times = preview.capture_times.clone();
            covered.extend(preview.batch.iter().copied());
            for (u, t) in
                passthrough_captures(self.instance, schedule, preview.start_time, &own, &covered)
            {
                capture_times.insert(u, t);
                covered.insert(u);
            }

            let needs = self.leg_needs(schedule);
            // Sensing UAV: waypoint duties along the batch, then leg 1.
            let first_member = preview.batch[0];
            duties.record(
                state.sensing_uav,
                capture_times[&first_member],
                first_member,
                preview.start_time + schedule.legs[0].end_time,
                schedule.legs[0].end_vertex,
            );
            state.sensing = UavState {
                vertex: schedule.legs[0].end_vertex,
                free_at: preview.start_time + schedule.legs[0].end_time,
            };
            for (l, leg) in schedule.legs.iter().enumerate().skip(1) {
                let uav = preview.assignment[l];
                let slot = state.transporters.iter_mut().find(|(m, _)| *m == uav).unwrap();
                duties.record(
                    uav,
                    preview.start_time + needs[l],
                    leg.start_vertex,
                    preview.start_time + leg.end_time,
                    leg.end_vertex,
                );
                slot.1 = UavState {
                    vertex: leg.end_vertex,
                    free_at: preview.start_time + leg.end_time,
                };
            }
            state.prev_start = preview.start_time;

            records.push(DispatchRecord {
                location: preview.batch[preview.batch.len() - 1],
                batch: preview.batch.clone(),
                schedule: preview.schedule,
                assignment: preview.assignment,
                start_time: preview.start_time,
                capture_times,
            });
            i = end + 1;
        }
        let period = duties.round_period(self, base);
        Ok((records, period))
    }

    /// Greedily extends a batch from `start_index` while every member keeps
    /// its delivery within the latency bound, using projected times for the
    /// sensing-UAV walk, transporter availability and the dispatch relay.
    /// Returns the batch end index and the projected dispatch.
    ///
    /// A singleton batch is always returnable: its capture is deferred to
    /// the dispatch start, so waiting for transporters cannot break the
    /// bound.
    pub fn max_batch_prefix(
        &self,
        heuristic: Heuristic,
        required: &BTreeMap<VertexId, usize>,
        seq: &[VertexId],
        start_index: usize,
        state: &GroupState,
        covered: &BTreeSet<VertexId>,
    ) -> Result<(usize, DispatchPreview), PlanError> {
        let mut end = start_index;
        let mut best = self
            .project_batch(heuristic, required, seq, start_index, start_index, state, covered)?
            .expect("singleton batch is feasible by the requirement precheck");
        loop {
            let Some(next) = (end + 1..seq.len()).find(|&x| !covered.contains(&seq[x])) else {
                break;
            };
            match self.project_batch(heuristic, required, seq, start_index, next, state, covered)? {
                Some(preview) => {
                    best = preview;
                    end = next;
                }
                None => break,
            }
        }
        Ok((end, best))
    }

    /// Projects the dispatch for the batch `seq[start..=end]` (skipping
    /// covered vertices). Returns `None` when a member would violate the
    /// latency bound.
    #[allow(clippy::too_many_arguments)]
    fn project_batch(
        &self,
        heuristic: Heuristic,
        required: &BTreeMap<VertexId, usize>,
        seq: &[VertexId],
        start: usize,
        end: usize,
        state: &GroupState,
        covered: &BTreeSet<VertexId>,
    ) -> Result<Option<DispatchPreview>, PlanError> {
        let bound = self.instance.latency_bound();
        let members: Vec<VertexId> =
            seq[start..=end].iter().copied().filter(|v| !covered.contains(v)).collect();
        // Walk of the sensing UAV through the batch.
        let mut arrivals = Vec::with_capacity(members.len());
        let mut pos = state.sensing.vertex;
        let mut t = state.sensing.free_at;
        for &u in &members {
            t += self.d(pos, u);
            arrivals.push(t);
            pos = u;
        }
        let dispatch_vertex = *members.last().unwrap();
        let budget = required[&dispatch_vertex];
        let schedule = self.dispatch_schedule(heuristic, dispatch_vertex, budget);
        let needs = self.leg_needs(&schedule);

        // Transport legs (2..) are matched among the group's other UAVs; the
        // dispatch starts once the slowest of them can reach its start
        // vertex.
        let transport_rows = schedule.legs.len().saturating_sub(1);
        let mut assignment = vec![state.sensing_uav];
        let mut start_time = state.prev_start.max(*arrivals.last().unwrap());
        if transport_rows > 0 {
            let matrix = CostMatrix {
                entries: schedule.legs[1..]
                    .iter()
                    .map(|leg| {
                        state
                            .transporters
                            .iter()
                            .map(|(_, s)| {
                                s.free_at.max(state.prev_start) + self.d(s.vertex, leg.start_vertex)
                            })
                            .collect()
                    })
                    .collect(),
                uav_ids: state.transporters.iter().map(|(m, _)| *m).collect(),
            };
            let matched = minmax_matching(&matrix)?;
            start_time = start_time.max(matched.bottleneck);
            assignment.extend(matched.leg_to_uav.iter().copied());
        }

        let mut capture_times = BTreeMap::new();
        if members.len() == 1 {
            // Deferred capture: the sensing UAV waits at the location and
            // captures right before the dispatch leaves.
            capture_times.insert(dispatch_vertex, start_time);
        } else {
            for (&u, &arr) in members.iter().zip(&arrivals) {
                capture_times.insert(u, arr);
            }
            // The last member is captured right before the data leaves.
            capture_times.insert(dispatch_vertex, start_time);
        }

        let delivery = start_time + schedule.total_latency;
        if capture_times.values().any(|&c| delivery - c > bound) {
            return Ok(None);
        }
        Ok(Some(DispatchPreview {
            batch: members,
            schedule,
            assignment,
            start_time,
            capture_times,
        }))
    }

    /// Relative time each leg's UAV must be in position: the leg start minus
    /// the duration of the incoming transmission it has to receive.
    fn leg_needs(&self, schedule: &MlpSchedule) -> Vec<TimeStep> {
        let mut needs = vec![0];
        for l in 1..schedule.legs.len() {
            let wc = self
                .instance
                .comm_weight(schedule.legs[l - 1].end_vertex, schedule.legs[l].start_vertex)
                .expect("consecutive legs are comm-adjacent");
            needs.push(schedule.legs[l].start_time - wc);
        }
        needs
    }
}

/// Sensing locations captured in passing while a relay leg carries data over
/// them. Only locations of the group's own subtour count, and only the first
/// passage captures.
fn passthrough_captures(
    instance: &ProblemInstance,
    schedule: &MlpSchedule,
    start_time: TimeStep,
    own: &BTreeSet<VertexId>,
    covered: &BTreeSet<VertexId>,
) -> Vec<(VertexId, TimeStep)> {
    let mut out: Vec<(VertexId, TimeStep)> = Vec::new();
    let mut taken: BTreeSet<VertexId> = BTreeSet::new();
    for leg in &schedule.legs {
        let mut t = start_time + leg.start_time;
        let mut visit = |u: VertexId, t: TimeStep, out: &mut Vec<(VertexId, TimeStep)>| {
            if own.contains(&u) && !covered.contains(&u) && taken.insert(u) {
                out.push((u, t));
            }
        };
        visit(leg.path[0], t, &mut out);
        for edge in leg.path.windows(2) {
            t += instance.movement_weight(edge[0], edge[1]).expect("path uses movement edges");
            visit(edge[1], t, &mut out);
        }
    }
    out
}

/// First and last duty per UAV, for the round-period computation.
struct DutyLog {
    uavs: Vec<UavId>,
    first: BTreeMap<UavId, (TimeStep, VertexId)>,
    last: BTreeMap<UavId, (TimeStep, VertexId)>,
}

impl DutyLog {
    fn new(group: &[UavId]) -> Self {
        Self { uavs: group.to_vec(), first: BTreeMap::new(), last: BTreeMap::new() }
    }

    fn record(
        &mut self,
        uav: UavId,
        need_at: TimeStep,
        start_vertex: VertexId,
        finish_at: TimeStep,
        finish_vertex: VertexId,
    ) {
        self.first.entry(uav).or_insert((need_at, start_vertex));
        self.last.insert(uav, (finish_at, finish_vertex));
    }

    /// Smallest round shift letting every UAV finish its round, return to
    /// the base and reach its first duty of the next round in time.
    fn round_period(&self, planner: &Planner<'_>, base: VertexId) -> TimeStep {
        let mut period: TimeStep = 1;
        for uav in &self.uavs {
            let (Some(&(need, sv)), Some(&(finish, pos))) =
                (self.first.get(uav), self.last.get(uav))
            else {
                continue;
            };
            let wrap = finish + planner.d(pos, base) + planner.d(base, sv);
            period = period.max(wrap.saturating_sub(need));
        }
        period
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mlp::mlp_oracle;
    use crate::tour::tsp_tour;

    struct Ctx {
        instance: ProblemInstance,
    }

    impl Ctx {
        fn new(instance: ProblemInstance) -> Self {
            Self { instance }
        }

        fn with<R>(&self, f: impl FnOnce(&Planner<'_>) -> R) -> R {
            let distances = DistanceTable::compute(&self.instance);
            let solver = MlpSolver::new(&self.instance);
            let planner = Planner::new(&self.instance, &distances, &solver);
            f(&planner)
        }
    }

    #[test]
    fn required_uavs_on_the_relay_fixture() {
        // Latencies over budgets 1..3 are 5, 3, 1.
        let ctx = Ctx::new(fixtures::relay_fixture(3, 3));
        ctx.with(|p| assert_eq!(p.required_uavs_min(fixtures::RELAY_SOURCE, false), Some(2)));
        let ctx = Ctx::new(fixtures::relay_fixture(3, 5));
        ctx.with(|p| assert_eq!(p.required_uavs_min(fixtures::RELAY_SOURCE, false), Some(1)));
        let ctx = Ctx::new(fixtures::relay_fixture(3, 0));
        ctx.with(|p| {
            assert_eq!(p.required_uavs_min(fixtures::RELAY_SOURCE, false), None);
            let err = p.requirements(Heuristic::H1).unwrap_err();
            assert!(matches!(err, PlanError::Infeasible { vertex, .. } if vertex == fixtures::RELAY_SOURCE));
        });
    }

    #[test]
    fn saturation_on_the_relay_fixture() {
        let ctx = Ctx::new(fixtures::relay_fixture(3, 3));
        ctx.with(|p| assert_eq!(p.required_uavs_saturation(fixtures::RELAY_SOURCE, false), Some(3)));
    }

    #[test]
    fn saturation_is_one_inside_base_comm_range() {
        let ctx = Ctx::new(fixtures::line_instance(5, 3, 4));
        ctx.with(|p| {
            assert_eq!(p.required_uavs_saturation(1, true), Some(1));
            assert_eq!(p.required_uavs_min(1, true), Some(1));
        });
    }

    #[test]
    fn saturation_matches_an_oracle_sweep() {
        let inst = fixtures::line_instance(5, 3, 4);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            for &v in inst.sensing() {
                for locked in [false, true] {
                    let full = mlp_oracle(&inst, v, 3, locked).unwrap();
                    let expected = (1..=3)
                        .find(|&b| mlp_oracle(&inst, v, b, locked).unwrap() == full)
                        .unwrap();
                    assert_eq!(
                        p.required_uavs_saturation(v, locked),
                        Some(expected),
                        "v {v} locked {locked}"
                    );
                }
            }
        });
    }

    #[test]
    fn h1_on_the_line_needs_a_pair() {
        let inst = fixtures::line_instance(5, 2, 2);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            assert_eq!(tour.sequence, vec![0, 1, 2, 3, 4, 0]);
            let plan = p.plan_h1(&tour).unwrap();
            assert_eq!(plan.required[&4], 2);
            assert_eq!(plan.required[&1], 1);
            assert_eq!(plan.groups, vec![vec![0, 1]]);
            assert!(plan.idle_uavs.is_empty());
            assert_eq!(plan.subtours.k, 1);
            let records = &plan.dispatches[0];
            assert_eq!(records.len(), 4);
            let last = records.last().unwrap();
            assert_eq!(last.location, 4);
            assert_eq!(last.schedule.legs.len(), 2);
            assert_eq!(last.schedule.total_latency, 2);
            // Every delivery meets the bound; the far end is tight.
            for rec in records {
                for (&v, &cap) in &rec.capture_times {
                    let latency = rec.delivery_time() - cap;
                    assert!(latency <= 2, "vertex {v} latency {latency}");
                }
            }
            let worst = records
                .iter()
                .flat_map(|r| r.capture_times.values().map(move |&c| r.delivery_time() - c))
                .max()
                .unwrap();
            assert_eq!(worst, 2);
        });
    }

    #[test]
    fn h1_budget_minimality() {
        let inst = fixtures::line_instance(6, 3, 3);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            let plan = p.plan_h1(&tour).unwrap();
            for records in &plan.dispatches {
                for rec in records {
                    let b = plan.required[&rec.location];
                    let lat = p.dispatch_latency(Heuristic::H1, rec.location, b).unwrap();
                    assert!(lat <= 3);
                    if b > 1 {
                        let worse = p.dispatch_latency(Heuristic::H1, rec.location, b - 1);
                        assert!(worse.is_none() || worse.unwrap() > 3);
                    }
                }
            }
        });
    }

    #[test]
    fn single_base_adjacent_vertex_h1_and_h2() {
        let inst = ProblemInstance::from_edges(
            3,
            0,
            [1],
            &[(0, 1, 1), (1, 2, 1)],
            &[(0, 1, 0)],
            1,
            5,
        )
        .unwrap();
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            for h in [Heuristic::H1, Heuristic::H2, Heuristic::H3] {
                let plan = p.plan(h, &tour).unwrap();
                assert_eq!(plan.dispatches[0].len(), 1, "{h}");
                let rec = &plan.dispatches[0][0];
                assert_eq!(rec.schedule.total_latency, 0, "direct transmission");
                assert_eq!(rec.capture_times[&1], rec.start_time);
                // Walk out, transmit, walk back: the round takes two steps.
                assert_eq!(plan.round_periods[0], 2, "{h}");
            }
        });
    }

    #[test]
    fn h2_batches_the_whole_line_when_slack_permits() {
        let inst = fixtures::line_instance(5, 3, 4);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            let plan = p.plan_h2(&tour).unwrap();
            // Saturation requirements on the corridor: 1, 2, 3, 3.
            assert_eq!(plan.required[&1], 1);
            assert_eq!(plan.required[&2], 2);
            assert_eq!(plan.required[&3], 3);
            assert_eq!(plan.required[&4], 3);
            assert_eq!(plan.groups, vec![vec![0, 1, 2]]);
            // With a bound of 4 the first member still meets the bound when
            // the dispatch moves all the way to the line's end.
            let records = &plan.dispatches[0];
            assert_eq!(records.len(), 1);
            assert_eq!(records[0].batch, vec![1, 2, 3, 4]);
            assert_eq!(records[0].capture_times[&1], 1);
            assert_eq!(records[0].start_time, 4);
            assert_eq!(records[0].delivery_time() - records[0].capture_times[&1], 4);
        });
    }

    #[test]
    fn h2_batch_shrinks_with_the_bound() {
        let inst = fixtures::line_instance(5, 3, 1);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            let plan = p.plan_h2(&tour).unwrap();
            let batches: Vec<Vec<VertexId>> =
                plan.dispatches[0].iter().map(|r| r.batch.clone()).collect();
            assert_eq!(batches[0], vec![1, 2], "bound 1 admits only one carried member");
            for rec in &plan.dispatches[0] {
                for (&v, &cap) in &rec.capture_times {
                    assert!(rec.delivery_time() - cap <= 1, "vertex {v}");
                }
            }
        });
    }

    #[test]
    fn singleton_batch_when_bound_is_exact() {
        // The latency bound equals the singleton dispatch latency: no slack,
        // so every batch stays a singleton.
        let inst = fixtures::line_instance(4, 3, 0);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            let plan = p.plan_h2(&tour).unwrap();
            for rec in &plan.dispatches[0] {
                assert_eq!(rec.batch.len(), 1);
            }
        });
    }

    #[test]
    fn huge_bound_gives_one_batch_per_subtour() {
        let inst = fixtures::line_instance(6, 4, 1000);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            for h in [Heuristic::H2, Heuristic::H3] {
                let plan = p.plan(h, &tour).unwrap();
                for records in &plan.dispatches {
                    assert_eq!(records.len(), 1, "{h}");
                }
            }
        });
    }

    #[test]
    fn h3_batch_sizes_grow_with_the_bound() {
        let mut prev_dispatches = usize::MAX;
        for bound in [2u64, 4, 6, 10] {
            let inst = fixtures::line_instance(6, 3, bound);
            let ctx = Ctx::new(inst.clone());
            let dispatches = ctx.with(|p| {
                let distances = DistanceTable::compute(&inst);
                let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
                let plan = p.plan_h3(&tour).unwrap();
                plan.dispatches.iter().map(Vec::len).sum::<usize>()
            });
            assert!(dispatches <= prev_dispatches, "bound {bound}");
            prev_dispatches = dispatches;
        }
    }

    #[test]
    fn plans_are_deterministic() {
        let inst = fixtures::line_instance(6, 3, 4);
        let ctx = Ctx::new(inst.clone());
        let (a, b) = ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 7, 3).unwrap();
            let a = serde_json::to_string(&p.plan_h2(&tour).unwrap()).unwrap();
            let b = serde_json::to_string(&p.plan_h2(&tour).unwrap()).unwrap();
            (a, b)
        });
        assert_eq!(a, b);
    }

    #[test]
    fn coverage_is_complete_per_round() {
        let inst = fixtures::line_instance(7, 4, 6);
        let ctx = Ctx::new(inst.clone());
        ctx.with(|p| {
            let distances = DistanceTable::compute(&inst);
            let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
            for h in [Heuristic::H1, Heuristic::H2, Heuristic::H3] {
                let plan = p.plan(h, &tour).unwrap();
                let mut captured: BTreeSet<VertexId> = BTreeSet::new();
                for records in &plan.dispatches {
                    for rec in records {
                        captured.extend(rec.capture_times.keys().copied());
                    }
                }
                assert_eq!(&captured, inst.sensing(), "{h}");
            }
        });
    }
}
