//! Scenario files and the plan/simulate pipeline.
//!
//! A scenario describes one experiment in JSON: either a grid or an explicit
//! edge-list instance, the mission parameters, the heuristic and the tour
//! settings.
//!
//! ```json
//! {
//!   "grid": { "width": 20, "height": 20, "base": [0, 0],
//!             "comm_range": 4, "transmission_time": 0 },
//!   "num_uavs": 6,
//!   "latency_bound": 14,
//!   "heuristic": "h2",
//!   "tsp": { "seed": 1, "restarts": 1, "two_opt": true },
//!   "rounds": 4
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DistanceTable;
use crate::instance::{
    build_grid_instance, GridSpec, InstanceError, ProblemInstance, TimeStep, VertexId,
};
use crate::mlp::MlpSolver;
use crate::planner::{Heuristic, Plan, PlanError, Planner};
use crate::sim::{simulate, SimError, SimulationReport, TraceEvent};
use crate::tour::{tsp_tour_with, Tour, TourError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario needs exactly one of `grid` or `graph`")]
    MissingInstance,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Tour(#[from] TourError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Explicit edge-list instance for non-grid scenarios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertex_count: usize,
    pub base: VertexId,
    pub sensing: Vec<VertexId>,
    pub movement_edges: Vec<(VertexId, VertexId, TimeStep)>,
    pub comm_edges: Vec<(VertexId, VertexId, TimeStep)>,
}

/// Tour-construction settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TspParams {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: u32,
    #[serde(default = "default_two_opt")]
    pub two_opt: bool,
}

fn default_restarts() -> u32 {
    1
}

fn default_two_opt() -> bool {
    true
}

impl Default for TspParams {
    fn default() -> Self {
        Self { seed: 0, restarts: default_restarts(), two_opt: default_two_opt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    pub num_uavs: usize,
    pub latency_bound: TimeStep,
    pub heuristic: Heuristic,
    #[serde(default)]
    pub tsp: TspParams,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
}

fn default_rounds() -> usize {
    4
}

impl Scenario {
    pub fn from_json(json: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_instance(&self) -> Result<ProblemInstance, ScenarioError> {
        let instance = match (&self.grid, &self.graph) {
            (Some(grid), None) => build_grid_instance(grid, self.num_uavs, self.latency_bound)?,
            (None, Some(graph)) => ProblemInstance::from_edges(
                graph.vertex_count,
                graph.base,
                graph.sensing.iter().copied(),
                &graph.movement_edges,
                &graph.comm_edges,
                self.num_uavs,
                self.latency_bound,
            )?,
            _ => return Err(ScenarioError::MissingInstance),
        };
        let violations = instance.validate();
        if !violations.is_empty() {
            let list =
                violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Err(ScenarioError::Invalid(list));
        }
        Ok(instance)
    }
}

/// Everything one scenario run produces.
pub struct ScenarioOutput {
    pub tour: Tour,
    pub plan: Plan,
    pub report: SimulationReport,
    pub trace: Vec<TraceEvent>,
}

/// Plans and simulates one scenario end to end.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutput, RunError> {
    let instance = scenario.to_instance()?;
    let distances = DistanceTable::compute(&instance);
    let solver = MlpSolver::new(&instance);
    let planner = Planner::new(&instance, &distances, &solver);
    let tour = tsp_tour_with(
        &instance,
        &distances,
        scenario.tsp.seed,
        scenario.tsp.restarts,
        scenario.tsp.two_opt,
    )?;
    let plan = planner.plan(scenario.heuristic, &tour)?;
    let (report, trace) = simulate(&instance, &distances, &plan, scenario.rounds)?;
    Ok(ScenarioOutput { tour, plan, report, trace })
}
