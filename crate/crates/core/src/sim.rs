//! Discrete-time execution of a plan: replays every dispatch over a number
//! of rounds, recomputes all times from movement paths and transmission
//! weights (independently of the planner's arithmetic), verifies latency and
//! causality, and measures idleness.
//!
//! Rounds repeat the round-one trajectories: each UAV finishes its duties,
//! returns to the base, and starts over shifted by the group's round period.
//! Round one is the warm-up; idleness is measured per vertex over the owning
//! group's steady window of `rounds - 1` periods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DistanceTable;
use crate::instance::{ProblemInstance, TimeStep, UavId, VertexId};
use crate::planner::{DispatchRecord, Plan};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("at least 3 rounds required (round 1 is warm-up), got {0}")]
    TooFewRounds(usize),
    #[error("plan does not match instance: {0}")]
    PlanMismatch(String),
    #[error("causality violation for uav {uav} at t={time}: {detail}")]
    Causality { uav: UavId, time: TimeStep, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Move,
    Wait,
    Sense,
    Transmit,
    Receive,
    Deliver,
}

/// One row of the execution trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: TimeStep,
    pub uav: UavId,
    pub vertex: VertexId,
    pub action: Action,
    /// Sensing locations whose data the event concerns.
    pub payload: Vec<VertexId>,
}

/// One captured datum and its (recomputed) arrival at the base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRecord {
    pub vertex: VertexId,
    pub capture: TimeStep,
    pub delivery: TimeStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyViolation {
    pub vertex: VertexId,
    pub capture: TimeStep,
    pub delivery: TimeStep,
    /// `bound - (delivery - capture)`; negative when violated.
    pub slack: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rounds: usize,
    /// Per-vertex presence intervals (inclusive bounds), merged over UAVs.
    pub visits: BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>>,
    pub captures: Vec<CaptureRecord>,
    /// Largest steady-state inter-visit gap per sensing vertex.
    pub idleness: BTreeMap<VertexId, TimeStep>,
    /// Worst idleness over all sensing locations; `None` when a vertex went
    /// unvisited in its steady window (reported in `violations`).
    pub wi: Option<TimeStep>,
    /// Worst idleness counting only scheduled captures, not pass-through
    /// presence. Secondary metric for comparison.
    pub wi_scheduled: Option<TimeStep>,
    pub mean_idleness: f64,
    pub max_latency: TimeStep,
    pub violations: Vec<LatencyViolation>,
    /// Vertices with fewer than two visits in their steady window.
    pub under_visited: Vec<VertexId>,
    /// Every sensing vertex is captured once per round by its owning group.
    pub coverage_complete: bool,
    /// Steady measurement window per group, inclusive bounds.
    pub steady_windows: Vec<(TimeStep, TimeStep)>,
}

/// All captures whose delivery exceeds the bound, with slack values.
pub fn verify_latency(captures: &[CaptureRecord], bound: TimeStep) -> Vec<LatencyViolation> {
    captures
        .iter()
        .filter(|c| i128::from(c.delivery) - i128::from(c.capture) > i128::from(bound))
        .map(|c| LatencyViolation {
            vertex: c.vertex,
            capture: c.capture,
            delivery: c.delivery,
            slack: (i128::from(bound) - (i128::from(c.delivery) - i128::from(c.capture))) as i64,
        })
        .collect()
}

/// Largest cyclic inter-visit gap per vertex over an inclusive window
/// `[start, end]`, wrap-around included. Returns the gap map, the maximum
/// over vertices with at least one visit (`None` when some vertex has no
/// visit at all), and the vertices flagged for fewer than two visits.
pub fn compute_idleness(
    visits: &BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>>,
    windows: &BTreeMap<VertexId, (TimeStep, TimeStep)>,
) -> (BTreeMap<VertexId, TimeStep>, Option<TimeStep>, Vec<VertexId>) {
    let mut gaps = BTreeMap::new();
    let mut flagged = Vec::new();
    let mut unvisited = false;
    for (&v, &(start, end)) in windows {
        let clipped: Vec<(TimeStep, TimeStep)> = visits
            .get(&v)
            .map(|iv| {
                iv.iter()
                    .filter(|&&(a, b)| b >= start && a <= end)
                    .map(|&(a, b)| (a.max(start), b.min(end)))
                    .collect()
            })
            .unwrap_or_default();
        if clipped.len() < 2 {
            flagged.push(v);
        }
        if clipped.is_empty() {
            unvisited = true;
            continue;
        }
        let mut max_gap = (end - clipped.last().unwrap().1) + (clipped[0].0 - start);
        for w in clipped.windows(2) {
            max_gap = max_gap.max(w[1].0 - w[0].1);
        }
        gaps.insert(v, max_gap);
    }
    let wi = if unvisited { None } else { gaps.values().copied().max() };
    (gaps, wi, flagged)
}

/// A scheduled obligation of one UAV within a round.
#[derive(Debug, Clone)]
enum Duty {
    /// Be at `vertex` from `from` through `until`.
    Hold { vertex: VertexId, from: TimeStep, until: TimeStep, role: HoldRole },
    /// Carry data along `path`, departing exactly at `depart`.
    Carry { path: Vec<VertexId>, depart: TimeStep },
}

#[derive(Debug, Clone)]
enum HoldRole {
    Capture(Vec<VertexId>),
    Receive(Vec<VertexId>),
    Transmit { payload: Vec<VertexId>, delivers: bool },
}

#[derive(Debug, Clone)]
struct RoundDuty {
    round: usize,
    duty: Duty,
}

/// Executes `plan` for `rounds` rounds. Returns the report and the trace.
pub fn simulate(
    instance: &ProblemInstance,
    distances: &DistanceTable,
    plan: &Plan,
    rounds: usize,
) -> Result<(SimulationReport, Vec<TraceEvent>), SimError> {
    if rounds < 3 {
        return Err(SimError::TooFewRounds(rounds));
    }
    check_plan_shape(instance, plan)?;

    let base = instance.base();
    let mut scripts: Vec<Vec<RoundDuty>> = vec![Vec::new(); plan.num_uavs];
    let mut captures: Vec<CaptureRecord> = Vec::new();

    let timings: Vec<Vec<DispatchTiming>> = plan
        .dispatches
        .iter()
        .map(|records| records.iter().map(|rec| verify_dispatch(instance, rec)).collect())
        .collect::<Result<_, _>>()?;

    // Duties must be chronological per UAV: rounds outermost, dispatches in
    // subtour order within each round.
    for round in 0..rounds {
        for (g, records) in plan.dispatches.iter().enumerate() {
            let shift = plan.round_periods[g] * round as TimeStep;
            for (rec, timing) in records.iter().zip(&timings[g]) {
                schedule_dispatch(&mut scripts, rec, timing, round, shift);
                for (&v, &cap) in &rec.capture_times {
                    captures.push(CaptureRecord {
                        vertex: v,
                        capture: cap + shift,
                        delivery: rec.start_time + timing.total + shift,
                    });
                }
            }
        }
    }
    captures.sort_by_key(|c| (c.capture, c.vertex));

    // Replay each UAV: ASAP travel between duties, via the base across
    // round boundaries, waiting out any slack at the duty vertex.
    let mut visits: BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>> = BTreeMap::new();
    let mut trace: Vec<TraceEvent> = Vec::new();
    for (uav, duties) in scripts.iter().enumerate() {
        replay_uav(instance, distances, uav, duties, base, &mut visits, &mut trace)?;
    }
    for iv in visits.values_mut() {
        iv.sort_unstable();
        merge_intervals(iv);
    }
    trace.sort_by_key(|e| (e.time, e.uav, action_rank(e.action)));

    // Steady windows: per group, rounds 2.. anchored at the earliest
    // round-one capture so every periodic visit contributes rounds-1 copies.
    let mut windows: BTreeMap<VertexId, (TimeStep, TimeStep)> = BTreeMap::new();
    let mut steady_windows = Vec::new();
    for (g, records) in plan.dispatches.iter().enumerate() {
        let t0 = records
            .iter()
            .flat_map(|r| r.capture_times.values().copied())
            .min()
            .unwrap_or(0);
        let p = plan.round_periods[g];
        let window = (t0 + p, t0 + p * rounds as TimeStep);
        steady_windows.push(window);
        for &v in plan.subtours.subtours[g].interior() {
            windows.insert(v, window);
        }
    }

    let (idleness, wi, under_visited) = compute_idleness(&visits, &windows);

    // Secondary idleness over scheduled captures only.
    let mut capture_visits: BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>> = BTreeMap::new();
    for c in &captures {
        capture_visits.entry(c.vertex).or_default().push((c.capture, c.capture));
    }
    for iv in capture_visits.values_mut() {
        iv.sort_unstable();
        merge_intervals(iv);
    }
    let (_, wi_scheduled, _) = compute_idleness(&capture_visits, &windows);

    let violations = verify_latency(&captures, plan.latency_bound);
    let max_latency = captures.iter().map(|c| c.delivery - c.capture).max().unwrap_or(0);
    let mean_idleness = if idleness.is_empty() {
        0.0
    } else {
        idleness.values().map(|&g| g as f64).sum::<f64>() / idleness.len() as f64
    };

    // Coverage: each group captures every vertex of its own subtour each
    // round (rounds replicate round one, so checking round one suffices).
    let coverage_complete = plan.dispatches.iter().zip(&plan.subtours.subtours).all(
        |(records, tour)| {
            let captured: std::collections::BTreeSet<VertexId> =
                records.iter().flat_map(|r| r.capture_times.keys().copied()).collect();
            tour.interior().iter().all(|v| captured.contains(v))
        },
    );

    let report = SimulationReport {
        rounds,
        visits,
        captures,
        idleness,
        wi,
        wi_scheduled,
        mean_idleness,
        max_latency,
        violations,
        under_visited,
        coverage_complete,
        steady_windows,
    };
    Ok((report, trace))
}

/// Recomputed leg timing for one dispatch.
struct DispatchTiming {
    /// Relative presence requirement per leg (receive-window start).
    needs: Vec<TimeStep>,
    /// Relative carry start per leg.
    starts: Vec<TimeStep>,
    /// Relative end per leg (transmission complete).
    ends: Vec<TimeStep>,
    /// Arrival at the end vertex, relative.
    arrivals: Vec<TimeStep>,
    total: TimeStep,
}

fn check_plan_shape(instance: &ProblemInstance, plan: &Plan) -> Result<(), SimError> {
    if plan.num_uavs != instance.num_uavs() {
        return Err(SimError::PlanMismatch(format!(
            "plan is for {} UAVs, instance has {}",
            plan.num_uavs,
            instance.num_uavs()
        )));
    }
    if plan.dispatches.len() != plan.subtours.subtours.len()
        || plan.dispatches.len() != plan.round_periods.len()
        || plan.dispatches.len() != plan.groups.len()
    {
        return Err(SimError::PlanMismatch("group structure is inconsistent".into()));
    }
    let mut seen = vec![false; plan.num_uavs];
    for uav in plan.groups.iter().flatten().chain(plan.idle_uavs.iter()) {
        if *uav >= plan.num_uavs || seen[*uav] {
            return Err(SimError::PlanMismatch(format!("uav {uav} misassigned")));
        }
        seen[*uav] = true;
    }
    Ok(())
}

/// Recomputes one dispatch's leg times from the instance weights and checks
/// them against the planner's values.
fn verify_dispatch(
    instance: &ProblemInstance,
    rec: &DispatchRecord,
) -> Result<DispatchTiming, SimError> {
    let base = instance.base();
    let legs = &rec.schedule.legs;
    if legs.is_empty() || rec.assignment.len() != legs.len() || rec.batch.is_empty() {
        return Err(SimError::PlanMismatch(format!(
            "dispatch at {} has inconsistent legs or assignment",
            rec.location
        )));
    }
    if *rec.batch.last().unwrap() != rec.location {
        return Err(SimError::PlanMismatch(format!(
            "dispatch location {} is not the last batch member",
            rec.location
        )));
    }
    let mut needs = Vec::with_capacity(legs.len());
    let mut starts = Vec::with_capacity(legs.len());
    let mut ends = Vec::with_capacity(legs.len());
    let mut arrivals = Vec::with_capacity(legs.len());
    let mut clock: TimeStep = 0;
    for (l, leg) in legs.iter().enumerate() {
        let move_cost: TimeStep = leg
            .path
            .windows(2)
            .map(|e| {
                instance.movement_weight(e[0], e[1]).ok_or_else(|| {
                    SimError::PlanMismatch(format!("({}, {}) is not a movement edge", e[0], e[1]))
                })
            })
            .sum::<Result<_, _>>()?;
        let incoming_wc = if l == 0 {
            0
        } else {
            instance.comm_weight(legs[l - 1].end_vertex, leg.start_vertex).ok_or_else(|| {
                SimError::PlanMismatch(format!(
                    "legs {} and {} are not comm-adjacent",
                    l - 1,
                    l
                ))
            })?
        };
        let outgoing_wc = if l + 1 < legs.len() {
            instance.comm_weight(leg.end_vertex, legs[l + 1].start_vertex).ok_or_else(|| {
                SimError::PlanMismatch(format!("legs {l} and {} are not comm-adjacent", l + 1))
            })?
        } else if leg.end_vertex == base {
            0
        } else {
            instance.comm_weight(leg.end_vertex, base).ok_or_else(|| {
                SimError::PlanMismatch(format!(
                    "final leg ends at {} without reaching the base",
                    leg.end_vertex
                ))
            })?
        };
        needs.push(clock.saturating_sub(incoming_wc));
        starts.push(clock);
        let arrive = clock + move_cost;
        arrivals.push(arrive);
        clock = arrive + outgoing_wc;
        ends.push(clock);
        if leg.start_time != starts[l] || leg.end_time != ends[l] {
            return Err(SimError::PlanMismatch(format!(
                "leg {l} of dispatch at {} announces times ({}, {}), replay gives ({}, {})",
                rec.location, leg.start_time, leg.end_time, starts[l], ends[l]
            )));
        }
    }
    if rec.schedule.total_latency != clock {
        return Err(SimError::PlanMismatch(format!(
            "dispatch at {} announces latency {}, replay gives {clock}",
            rec.location, rec.schedule.total_latency
        )));
    }
    // Capture-time consistency: the dispatch point is captured right before
    // departure, no batch member after departure, nothing after delivery.
    if rec.capture_times.get(&rec.location) != Some(&rec.start_time) {
        return Err(SimError::PlanMismatch(format!(
            "dispatch at {} must capture its location at the start time",
            rec.location
        )));
    }
    for &u in &rec.batch {
        match rec.capture_times.get(&u) {
            Some(&cap) if cap <= rec.start_time => {}
            _ => {
                return Err(SimError::PlanMismatch(format!(
                    "batch member {u} lacks a capture before the dispatch start"
                )))
            }
        }
    }
    if rec.capture_times.values().any(|&cap| cap > rec.start_time + clock) {
        return Err(SimError::PlanMismatch(format!(
            "dispatch at {} captures data after its delivery",
            rec.location
        )));
    }
    Ok(DispatchTiming { needs, starts, ends, arrivals, total: clock })
}

fn schedule_dispatch(
    scripts: &mut [Vec<RoundDuty>],
    rec: &DispatchRecord,
    timing: &DispatchTiming,
    round: usize,
    shift: TimeStep,
) {
    let legs = &rec.schedule.legs;
    let start = rec.start_time + shift;
    let lead = rec.assignment[0];

    // Sensing walk: waypoint holds at each batch member's capture time.
    for (i, &u) in rec.batch.iter().enumerate() {
        let cap = rec.capture_times[&u] + shift;
        let until = if i + 1 == rec.batch.len() { start } else { cap };
        scripts[lead].push(RoundDuty {
            round,
            duty: Duty::Hold { vertex: u, from: cap, until, role: HoldRole::Capture(vec![u]) },
        });
    }

    let payload: Vec<VertexId> = rec.capture_times.keys().copied().collect();
    for (l, leg) in legs.iter().enumerate() {
        let uav = rec.assignment[l];
        if l > 0 {
            scripts[uav].push(RoundDuty {
                round,
                duty: Duty::Hold {
                    vertex: leg.start_vertex,
                    from: start + timing.needs[l],
                    until: start + timing.starts[l],
                    role: HoldRole::Receive(payload.clone()),
                },
            });
        }
        if leg.path.len() > 1 {
            scripts[uav].push(RoundDuty {
                round,
                duty: Duty::Carry { path: leg.path.clone(), depart: start + timing.starts[l] },
            });
        }
        let delivers = l + 1 == legs.len();
        scripts[uav].push(RoundDuty {
            round,
            duty: Duty::Hold {
                vertex: leg.end_vertex,
                from: start + timing.arrivals[l],
                until: start + timing.ends[l],
                role: HoldRole::Transmit { payload: payload.clone(), delivers },
            },
        });
    }
}

/// Mutable replay cursor for one UAV.
struct Cursor {
    uav: UavId,
    pos: VertexId,
    free: TimeStep,
    at_since: TimeStep,
}

fn record_presence(
    visits: &mut BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>>,
    vertex: VertexId,
    from: TimeStep,
    to: TimeStep,
) {
    visits.entry(vertex).or_default().push((from, to));
}

/// ASAP travel along a reconstructed shortest path; errors when a deadline
/// cannot be met.
fn travel_to(
    instance: &ProblemInstance,
    distances: &DistanceTable,
    cur: &mut Cursor,
    target: VertexId,
    deadline: Option<TimeStep>,
    visits: &mut BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>>,
    trace: &mut Vec<TraceEvent>,
) -> Result<(), SimError> {
    if cur.pos == target {
        return Ok(());
    }
    let path = distances
        .path(cur.pos, target)
        .ok_or_else(|| SimError::PlanMismatch(format!("no route from {} to {target}", cur.pos)))?;
    let mut t = cur.free;
    record_presence(visits, cur.pos, cur.at_since, t);
    for e in path.windows(2) {
        t += instance.movement_weight(e[0], e[1]).expect("reconstructed path");
        trace.push(TraceEvent { time: t, uav: cur.uav, vertex: e[1], action: Action::Move, payload: vec![] });
        if e[1] != target {
            record_presence(visits, e[1], t, t);
        }
    }
    if let Some(d) = deadline {
        if t > d {
            return Err(SimError::Causality {
                uav: cur.uav,
                time: d,
                detail: format!("cannot reach {target} by t={d}; earliest arrival {t}"),
            });
        }
    }
    cur.pos = target;
    cur.free = t;
    cur.at_since = t;
    Ok(())
}

/// Walks one UAV through its duties, recording presence intervals and trace
/// events and enforcing reachability.
fn replay_uav(
    instance: &ProblemInstance,
    distances: &DistanceTable,
    uav: UavId,
    duties: &[RoundDuty],
    base: VertexId,
    visits: &mut BTreeMap<VertexId, Vec<(TimeStep, TimeStep)>>,
    trace: &mut Vec<TraceEvent>,
) -> Result<(), SimError> {
    let mut cur = Cursor { uav, pos: base, free: 0, at_since: 0 };
    let mut prev_round = 0usize;
    for rd in duties {
        if rd.round > prev_round {
            // Round boundary: return to the base, then head out again.
            travel_to(instance, distances, &mut cur, base, None, visits, trace)?;
            prev_round = rd.round;
        }
        match &rd.duty {
            Duty::Hold { vertex, from, until, role } => {
                travel_to(instance, distances, &mut cur, *vertex, Some(*from), visits, trace)?;
                if cur.free > *from {
                    return Err(SimError::Causality {
                        uav,
                        time: *from,
                        detail: format!("still busy at {vertex} until t={}", cur.free),
                    });
                }
                if cur.free < *from {
                    trace.push(TraceEvent {
                        time: cur.free,
                        uav,
                        vertex: *vertex,
                        action: Action::Wait,
                        payload: vec![],
                    });
                }
                let (action, payload) = match role {
                    HoldRole::Capture(ids) => (Action::Sense, ids.clone()),
                    HoldRole::Receive(ids) => (Action::Receive, ids.clone()),
                    HoldRole::Transmit { payload, delivers: false } => {
                        (Action::Transmit, payload.clone())
                    }
                    HoldRole::Transmit { payload, delivers: true } => {
                        (Action::Deliver, payload.clone())
                    }
                };
                trace.push(TraceEvent { time: *from, uav, vertex: *vertex, action, payload });
                cur.free = *until;
            }
            Duty::Carry { path, depart } => {
                if cur.pos != path[0] {
                    return Err(SimError::PlanMismatch(format!(
                        "uav {uav} must carry from {} but stands at {}",
                        path[0], cur.pos
                    )));
                }
                if cur.free > *depart {
                    return Err(SimError::Causality {
                        uav,
                        time: *depart,
                        detail: format!("cannot depart {} before t={}", path[0], cur.free),
                    });
                }
                record_presence(visits, cur.pos, cur.at_since, *depart);
                let mut t = *depart;
                let last = *path.last().unwrap();
                for e in path.windows(2) {
                    let w = instance.movement_weight(e[0], e[1]).ok_or_else(|| {
                        SimError::PlanMismatch(format!("({}, {}) is not a movement edge", e[0], e[1]))
                    })?;
                    t += w;
                    trace.push(TraceEvent {
                        time: t,
                        uav,
                        vertex: e[1],
                        action: Action::Move,
                        payload: vec![],
                    });
                    if e[1] != last {
                        record_presence(visits, e[1], t, t);
                    }
                }
                cur.pos = last;
                cur.free = t;
                cur.at_since = t;
            }
        }
    }
    // Final wrap: park at the base.
    travel_to(instance, distances, &mut cur, base, None, visits, trace)?;
    record_presence(visits, cur.pos, cur.at_since, cur.free);
    Ok(())
}

fn merge_intervals(iv: &mut Vec<(TimeStep, TimeStep)>) {
    if iv.is_empty() {
        return;
    }
    let mut out: Vec<(TimeStep, TimeStep)> = Vec::with_capacity(iv.len());
    for &(a, b) in iv.iter() {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    *iv = out;
}

fn action_rank(a: Action) -> u8 {
    match a {
        Action::Move => 0,
        Action::Wait => 1,
        Action::Sense => 2,
        Action::Transmit => 3,
        Action::Receive => 4,
        Action::Deliver => 5,
    }
}

/// Renders the trace as CSV: `time,uav,x,y,action,payload`, payload entries
/// joined by `;`.
pub fn trace_to_csv(instance: &ProblemInstance, trace: &[TraceEvent]) -> String {
    let mut out = String::from("time,uav,x,y,action,payload\n");
    for e in trace {
        let (x, y) = instance.coords(e.vertex);
        let payload =
            e.payload.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
        let action = match e.action {
            Action::Move => "move",
            Action::Wait => "wait",
            Action::Sense => "sense",
            Action::Transmit => "transmit",
            Action::Receive => "receive",
            Action::Deliver => "deliver",
        };
        out.push_str(&format!("{},{},{},{},{},{}\n", e.time, e.uav, x, y, action, payload));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::instance::{build_grid_instance, GridSpec};
    use crate::mlp::MlpSolver;
    use crate::planner::{Heuristic, Planner};
    use crate::tour::tsp_tour;

    fn run(
        instance: &ProblemInstance,
        heuristic: Heuristic,
        seed: u64,
        rounds: usize,
    ) -> (Plan, SimulationReport, Vec<TraceEvent>) {
        let distances = DistanceTable::compute(instance);
        let solver = MlpSolver::new(instance);
        let planner = Planner::new(instance, &distances, &solver);
        let tour = tsp_tour(instance, &distances, seed, 1).unwrap();
        let plan = planner.plan(heuristic, &tour).unwrap();
        let (report, trace) = simulate(instance, &distances, &plan, rounds).unwrap();
        (plan, report, trace)
    }

    #[test]
    fn two_cell_oscillation() {
        let spec = GridSpec {
            width: 2,
            height: 1,
            base_cell: (0, 0),
            comm_range: 1,
            transmission_time: 0,
        };
        let inst = build_grid_instance(&spec, 1, 5).unwrap();
        let (plan, report, _) = run(&inst, Heuristic::H1, 0, 4);
        assert_eq!(plan.round_periods, vec![2]);
        assert_eq!(report.wi, Some(2));
        assert_eq!(report.max_latency, 0);
        assert!(report.violations.is_empty());
        assert!(report.coverage_complete);
    }

    #[test]
    fn line_relay_latencies_hold() {
        let inst = fixtures::line_instance(5, 2, 2);
        let (_, report, _) = run(&inst, Heuristic::H1, 0, 4);
        assert!(report.violations.is_empty());
        assert_eq!(report.max_latency, 2);
        assert!(report.coverage_complete);
        assert!(report.wi.is_some());
    }

    #[test]
    fn batched_heuristics_replay_cleanly() {
        let inst = fixtures::line_instance(6, 3, 4);
        for h in [Heuristic::H2, Heuristic::H3] {
            let (_, report, _) = run(&inst, h, 0, 4);
            assert!(report.violations.is_empty(), "{h}");
            assert!(report.coverage_complete, "{h}");
            assert!(report.max_latency <= 4, "{h}");
        }
    }

    #[test]
    fn rounds_are_periodic_copies() {
        let inst = fixtures::line_instance(5, 2, 3);
        let (plan, report, _) = run(&inst, Heuristic::H1, 0, 5);
        let p = plan.round_periods[0];
        // Captures of rounds 2.. are round-1 captures shifted by multiples
        // of the period.
        let per_round = plan.dispatches[0]
            .iter()
            .map(|r| r.capture_times.len())
            .sum::<usize>();
        assert_eq!(report.captures.len(), per_round * 5);
        let mut base_round: Vec<_> = report.captures[..per_round]
            .iter()
            .map(|c| (c.vertex, c.capture, c.delivery))
            .collect();
        base_round.sort_unstable();
        for r in 1..5u64 {
            let mut shifted: Vec<_> = report.captures[per_round * r as usize..per_round * (r as usize + 1)]
                .iter()
                .map(|c| (c.vertex, c.capture - r * p, c.delivery - r * p))
                .collect();
            shifted.sort_unstable();
            assert_eq!(shifted, base_round, "round {r}");
        }
    }

    #[test]
    fn too_few_rounds_is_an_error() {
        let inst = fixtures::line_instance(4, 2, 3);
        let distances = DistanceTable::compute(&inst);
        let solver = MlpSolver::new(&inst);
        let planner = Planner::new(&inst, &distances, &solver);
        let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
        let plan = planner.plan_h1(&tour).unwrap();
        assert!(matches!(
            simulate(&inst, &distances, &plan, 2),
            Err(SimError::TooFewRounds(2))
        ));
    }

    #[test]
    fn tampered_plans_are_rejected() {
        let inst = fixtures::line_instance(5, 2, 3);
        let distances = DistanceTable::compute(&inst);
        let solver = MlpSolver::new(&inst);
        let planner = Planner::new(&inst, &distances, &solver);
        let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
        let plan = planner.plan_h1(&tour).unwrap();

        let mut bad = plan.clone();
        bad.dispatches[0][0].schedule.total_latency += 1;
        assert!(matches!(
            simulate(&inst, &distances, &bad, 3),
            Err(SimError::PlanMismatch(_))
        ));

        // Shifting a dispatch earlier than its UAVs can arrive breaks
        // causality even when the record stays internally consistent.
        let mut bad = plan;
        let last = bad.dispatches[0].len() - 1;
        let rec = &mut bad.dispatches[0][last];
        let shift = rec.start_time - 1;
        rec.start_time -= shift;
        for cap in rec.capture_times.values_mut() {
            *cap = cap.saturating_sub(shift);
        }
        assert!(matches!(
            simulate(&inst, &distances, &bad, 3),
            Err(SimError::Causality { .. })
        ));
    }

    #[test]
    fn idleness_examples() {
        let windows = BTreeMap::from([(7usize, (0u64, 6u64))]);
        let visits = BTreeMap::from([(7usize, vec![(2, 2), (4, 4), (6, 6)])]);
        let (gaps, wi, flagged) = compute_idleness(&visits, &windows);
        assert_eq!(gaps[&7], 2);
        assert_eq!(wi, Some(2));
        assert!(flagged.is_empty());

        let windows = BTreeMap::from([(7usize, (0u64, 8u64))]);
        let visits = BTreeMap::from([(7usize, vec![(0, 0), (5, 5)])]);
        let (gaps, wi, _) = compute_idleness(&visits, &windows);
        assert_eq!(gaps[&7], 5);
        assert_eq!(wi, Some(5));

        // Uniform k visits over period p give a gap of p/k.
        let windows = BTreeMap::from([(9usize, (0u64, 12u64))]);
        let visits = BTreeMap::from([(9usize, vec![(0, 0), (3, 3), (6, 6), (9, 9)])]);
        let (gaps, _, _) = compute_idleness(&visits, &windows);
        assert_eq!(gaps[&9], 3);

        // Unvisited vertices make the metric undefined.
        let windows = BTreeMap::from([(1usize, (0u64, 10u64)), (2, (0, 10))]);
        let visits = BTreeMap::from([(1usize, vec![(5, 5)])]);
        let (_, wi, flagged) = compute_idleness(&visits, &windows);
        assert_eq!(wi, None);
        assert_eq!(flagged, vec![1, 2]);
    }

    #[test]
    fn latency_verification_boundaries() {
        assert!(verify_latency(&[], 3).is_empty());
        let ok = CaptureRecord { vertex: 1, capture: 10, delivery: 13 };
        assert!(verify_latency(&[ok], 3).is_empty(), "boundary is inclusive");
        let bad = CaptureRecord { vertex: 1, capture: 10, delivery: 14 };
        let violations = verify_latency(&[bad], 3);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].slack, -1);
    }

    #[test]
    fn random_feasible_scenarios_have_no_violations() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut done = 0;
        while done < 10 {
            let spec = GridSpec {
                width: rng.gen_range(3..=6),
                height: rng.gen_range(2..=5),
                base_cell: (0, 0),
                comm_range: rng.gen_range(1..=3),
                transmission_time: 0,
            };
            let n = rng.gen_range(2..=4);
            let bound = rng.gen_range(4..=14);
            let Ok(inst) = build_grid_instance(&spec, n, bound) else { continue };
            let distances = DistanceTable::compute(&inst);
            let solver = MlpSolver::new(&inst);
            let planner = Planner::new(&inst, &distances, &solver);
            let tour = tsp_tour(&inst, &distances, done as u64, 1).unwrap();
            for h in [Heuristic::H1, Heuristic::H2, Heuristic::H3] {
                let Ok(plan) = planner.plan(h, &tour) else { continue };
                let (report, _) = simulate(&inst, &distances, &plan, 4).unwrap();
                assert!(report.violations.is_empty(), "{h} on {spec:?} bound {bound}");
                assert!(report.coverage_complete, "{h} on {spec:?}");
            }
            done += 1;
        }
    }
}
