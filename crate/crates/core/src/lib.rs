//! Planning library and discrete-time simulator for persistent multi-UAV
//! surveillance under a data-latency bound.
//!
//! UAVs patrol sensing locations on a movement graph and ferry the captured
//! data to a base station in a store-and-forward fashion. The crate provides:
//!
//! * minimum-latency relay paths (`mlp`): the fastest route for a datum from
//!   a sensing location to the base with a bounded number of UAVs;
//! * patrol heuristics (`planner`): immediate per-location relays (`h1`),
//!   latency-saturated relay chains with batching (`h2`), and
//!   minimum-budget chains with batching (`h3`);
//! * tour construction and min-max splitting (`tour`), bottleneck UAV
//!   assignment (`matching`);
//! * a simulator (`sim`) that independently replays plans, verifies every
//!   latency and measures worst idleness;
//! * scenario/sweep configuration and file formats (`scenario`, `sweep`).

pub mod dist;
pub mod fixtures;
pub mod instance;
pub mod matching;
pub mod mlp;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod tour;

pub use dist::DistanceTable;
pub use instance::{build_grid_instance, GridSpec, ProblemInstance, TimeStep, UavId, VertexId};
pub use mlp::{build_expanded_graph, mlp_oracle, MlpSchedule, MlpSolver};
pub use planner::{Heuristic, Plan, PlanError, Planner};
pub use sim::{simulate, SimulationReport};
pub use tour::{k_splitour, shortcut, tsp_tour, Tour};
