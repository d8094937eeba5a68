//! Parameter sweeps: run a base scenario over a list of values for one
//! parameter, several tour seeds and all heuristics, and emit plot-ready
//! tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DistanceTable;
use crate::instance::{ProblemInstance, TimeStep};
use crate::mlp::MlpSolver;
use crate::planner::{Heuristic, PlanError, Planner};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::simulate;
use crate::tour::tsp_tour_with;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("sweep values must not be empty")]
    NoValues,
    #[error("sweeping {0:?} requires a grid scenario")]
    NeedsGrid(SweepParam),
    #[error("simulation failed for {heuristic} at value {value}, seed {seed}: {detail}")]
    Sim { heuristic: Heuristic, value: u64, seed: u64, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    LatencyBound,
    CommRange,
    NumUavs,
    TransmissionTime,
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepParam::LatencyBound => "latency_bound",
            SweepParam::CommRange => "comm_range",
            SweepParam::NumUavs => "num_uavs",
            SweepParam::TransmissionTime => "transmission_time",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: Scenario,
    pub parameter: SweepParam,
    pub values: Vec<u64>,
    /// Tour seeds; each experiment cell is repeated once per seed.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Heuristics to compare; all three when empty.
    #[serde(default)]
    pub heuristics: Vec<Heuristic>,
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub heuristic: Heuristic,
    pub parameter: SweepParam,
    pub value: u64,
    pub seed: u64,
    pub feasible: bool,
    pub wi: Option<TimeStep>,
    pub wi_scheduled: Option<TimeStep>,
    pub mean_idleness: f64,
    pub max_latency: TimeStep,
    pub subtours: usize,
    pub tour_cost: TimeStep,
    pub plan_ms: f64,
    pub sim_ms: f64,
    /// Infeasibility witness or other remark.
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub heuristic: Heuristic,
    pub value: u64,
    pub feasible_seeds: usize,
    pub mean_wi: f64,
    pub stderr_wi: f64,
    pub mean_subtours: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<SweepSummary>,
}

/// Applies the swept parameter to the base scenario and builds the instance.
fn instance_for(
    config: &SweepConfig,
    value: u64,
) -> Result<ProblemInstance, SweepError> {
    let mut scenario = config.base.clone();
    match config.parameter {
        SweepParam::LatencyBound => scenario.latency_bound = value,
        SweepParam::NumUavs => scenario.num_uavs = value as usize,
        SweepParam::CommRange => match &mut scenario.grid {
            Some(grid) => grid.comm_range = value as u32,
            None => return Err(SweepError::NeedsGrid(config.parameter)),
        },
        SweepParam::TransmissionTime => match &mut scenario.grid {
            Some(grid) => grid.transmission_time = value,
            None => return Err(SweepError::NeedsGrid(config.parameter)),
        },
    }
    Ok(scenario.to_instance()?)
}

/// Runs the full sweep. Cells run concurrently per value; rows come out in
/// deterministic `(value, heuristic, seed)` order. Infeasible cells produce
/// marked rows instead of aborting the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, SweepError> {
    if config.values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let heuristics = if config.heuristics.is_empty() {
        vec![Heuristic::H1, Heuristic::H2, Heuristic::H3]
    } else {
        config.heuristics.clone()
    };
    let rounds = config.base.rounds;

    let mut rows: Vec<SweepRow> = Vec::new();
    for &value in &config.values {
        let instance = instance_for(config, value)?;
        let distances = DistanceTable::compute(&instance);
        let solver = MlpSolver::new(&instance);
        let planner = Planner::new(&instance, &distances, &solver);

        let cells: Vec<(Heuristic, u64)> = heuristics
            .iter()
            .flat_map(|&h| config.seeds.iter().map(move |&s| (h, s)))
            .collect();
        let value_rows: Vec<Result<SweepRow, SweepError>> = cells
            .par_iter()
            .map(|&(heuristic, seed)| {
                run_cell(config, &instance, &distances, &planner, heuristic, value, seed, rounds)
            })
            .collect();
        for row in value_rows {
            rows.push(row?);
        }
    }

    let mut summaries = Vec::new();
    for &h in &heuristics {
        for &value in &config.values {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.heuristic == h && r.value == value && r.feasible)
                .collect();
            let wis: Vec<f64> = cell.iter().filter_map(|r| r.wi).map(|w| w as f64).collect();
            let (mean, stderr) = mean_stderr(&wis);
            summaries.push(SweepSummary {
                heuristic: h,
                value,
                feasible_seeds: cell.len(),
                mean_wi: mean,
                stderr_wi: stderr,
                mean_subtours: if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.iter().map(|r| r.subtours as f64).sum::<f64>() / cell.len() as f64
                },
            });
        }
    }
    Ok(SweepResult { rows, summaries })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &SweepConfig,
    instance: &ProblemInstance,
    distances: &DistanceTable,
    planner: &Planner<'_>,
    heuristic: Heuristic,
    value: u64,
    seed: u64,
    rounds: usize,
) -> Result<SweepRow, SweepError> {
    let mut row = SweepRow {
        heuristic,
        parameter: config.parameter,
        value,
        seed,
        feasible: false,
        wi: None,
        wi_scheduled: None,
        mean_idleness: f64::NAN,
        max_latency: 0,
        subtours: 0,
        tour_cost: 0,
        plan_ms: 0.0,
        sim_ms: 0.0,
        note: String::new(),
    };
    let t0 = std::time::Instant::now();
    let tour = match tsp_tour_with(
        instance,
        distances,
        seed,
        config.base.tsp.restarts,
        config.base.tsp.two_opt,
    ) {
        Ok(t) => t,
        Err(e) => {
            row.note = e.to_string();
            return Ok(row);
        }
    };
    row.tour_cost = tour.cost;
    let plan = match planner.plan(heuristic, &tour) {
        Ok(p) => p,
        Err(e @ PlanError::Infeasible { .. }) => {
            row.note = e.to_string();
            return Ok(row);
        }
        Err(e) => {
            return Err(SweepError::Sim {
                heuristic,
                value,
                seed,
                detail: e.to_string(),
            })
        }
    };
    row.plan_ms = t0.elapsed().as_secs_f64() * 1e3;
    row.subtours = plan.subtours.k;

    let t1 = std::time::Instant::now();
    let (report, _trace) = simulate(instance, distances, &plan, rounds).map_err(|e| {
        SweepError::Sim { heuristic, value, seed, detail: e.to_string() }
    })?;
    row.sim_ms = t1.elapsed().as_secs_f64() * 1e3;
    row.feasible = true;
    row.wi = report.wi;
    row.wi_scheduled = report.wi_scheduled;
    row.mean_idleness = report.mean_idleness;
    row.max_latency = report.max_latency;
    if !report.violations.is_empty() {
        row.note = format!("{} latency violations", report.violations.len());
    }
    Ok(row)
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Raw rows as CSV. The schema is stable:
/// `heuristic,parameter,value,seed,feasible,wi,wi_scheduled,mean_idleness,max_latency,subtours,tour_cost,plan_ms,sim_ms,note`.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "heuristic,parameter,value,seed,feasible,wi,wi_scheduled,mean_idleness,\
         max_latency,subtours,tour_cost,plan_ms,sim_ms,note\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.2},{},{},{},{:.3},{:.3},{}\n",
            r.heuristic,
            r.parameter,
            r.value,
            r.seed,
            r.feasible,
            r.wi.map_or(String::new(), |w| w.to_string()),
            r.wi_scheduled.map_or(String::new(), |w| w.to_string()),
            r.mean_idleness,
            r.max_latency,
            r.subtours,
            r.tour_cost,
            r.plan_ms,
            r.sim_ms,
            r.note.replace(',', ";"),
        ));
    }
    out
}

/// Mean and standard error per `(heuristic, value)`, shaped like the raw
/// rows for recomputation checks.
pub fn summaries_to_csv(summaries: &[SweepSummary]) -> String {
    let mut out = String::from("heuristic,value,feasible_seeds,mean_wi,stderr_wi,mean_subtours\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.2},{:.2}\n",
            s.heuristic, s.value, s.feasible_seeds, s.mean_wi, s.stderr_wi, s.mean_subtours
        ));
    }
    out
}

/// Gnuplot-style table: one line per value, three `(mean, stderr, subtours)`
/// column groups in h1, h2, h3 order.
pub fn summaries_to_dat(summaries: &[SweepSummary], values: &[u64]) -> String {
    let mut out = String::from(
        "# value  h1_wi h1_err h1_subtours  h2_wi h2_err h2_subtours  h3_wi h3_err h3_subtours\n",
    );
    for &value in values {
        out.push_str(&value.to_string());
        for h in [Heuristic::H1, Heuristic::H2, Heuristic::H3] {
            match summaries.iter().find(|s| s.heuristic == h && s.value == value) {
                Some(s) => out.push_str(&format!(
                    "  {:.2} {:.2} {:.2}",
                    s.mean_wi, s.stderr_wi, s.mean_subtours
                )),
                None => out.push_str("  nan nan nan"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::GridSpec;
    use crate::scenario::TspParams;

    fn tiny_config() -> SweepConfig {
        SweepConfig {
            base: Scenario {
                grid: Some(GridSpec {
                    width: 4,
                    height: 3,
                    base_cell: (0, 0),
                    comm_range: 2,
                    transmission_time: 0,
                }),
                graph: None,
                num_uavs: 3,
                latency_bound: 6,
                heuristic: Heuristic::H1,
                tsp: TspParams::default(),
                rounds: 4,
            },
            parameter: SweepParam::LatencyBound,
            values: vec![4, 8],
            seeds: vec![0, 1],
            heuristics: vec![],
        }
    }

    #[test]
    fn sweep_produces_rows_and_summaries() {
        let result = run_sweep(&tiny_config()).unwrap();
        assert_eq!(result.rows.len(), 2 * 2 * 3);
        assert_eq!(result.summaries.len(), 2 * 3);
        for row in &result.rows {
            assert!(row.feasible, "{row:?}");
            assert!(row.wi.is_some());
        }
        let csv = rows_to_csv(&result.rows);
        assert_eq!(csv.lines().count(), result.rows.len() + 1);
        let dat = summaries_to_dat(&result.summaries, &[4, 8]);
        assert_eq!(dat.lines().count(), 3);
    }

    /// Strips the wall-clock timing columns, which legitimately vary.
    fn strip_timings(csv: &str) -> String {
        csv.lines()
            .map(|line| {
                let cols: Vec<&str> = line.split(',').collect();
                cols.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != 11 && *i != 12)
                    .map(|(_, c)| *c)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn sweeps_are_reproducible() {
        let a = run_sweep(&tiny_config()).unwrap();
        let b = run_sweep(&tiny_config()).unwrap();
        assert_eq!(strip_timings(&rows_to_csv(&a.rows)), strip_timings(&rows_to_csv(&b.rows)));
        assert_eq!(summaries_to_csv(&a.summaries), summaries_to_csv(&b.summaries));
    }

    #[test]
    fn infeasible_cells_are_marked_not_fatal() {
        let mut config = tiny_config();
        // With communication range 1 and a zero bound, the far corner has no
        // all-free relay route to the base.
        config.base.grid.as_mut().unwrap().comm_range = 1;
        config.values = vec![0, 8];
        let result = run_sweep(&config).unwrap();
        let infeasible: Vec<_> = result.rows.iter().filter(|r| !r.feasible).collect();
        assert!(!infeasible.is_empty());
        assert!(infeasible.iter().all(|r| r.note.contains("infeasible")));
        assert!(result.rows.iter().any(|r| r.feasible));
    }

    #[test]
    fn summary_means_recompute_from_rows() {
        let result = run_sweep(&tiny_config()).unwrap();
        for s in &result.summaries {
            let wis: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.heuristic == s.heuristic && r.value == s.value && r.feasible)
                .filter_map(|r| r.wi)
                .map(|w| w as f64)
                .collect();
            let mean = wis.iter().sum::<f64>() / wis.len() as f64;
            assert!((mean - s.mean_wi).abs() < 1e-9);
        }
    }
}
