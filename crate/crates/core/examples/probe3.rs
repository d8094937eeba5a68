use milc::instance::{build_grid_instance, GridSpec};
use milc::dist::DistanceTable;
use milc::mlp::MlpSolver;
use milc::planner::{Heuristic, Planner};
use milc::sim::simulate;
use milc::tour::tsp_tour;

fn main() {
    let spec = GridSpec { width: 20, height: 20, base_cell: (0, 0), comm_range: 4, transmission_time: 0 };
    let inst = build_grid_instance(&spec, 6, 26).unwrap();
    let distances = DistanceTable::compute(&inst);
    let solver = MlpSolver::new(&inst);
    let planner = Planner::new(&inst, &distances, &solver);
    let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
    let plan = planner.plan(Heuristic::H2, &tour).unwrap();
    let (report, _) = simulate(&inst, &distances, &plan, 4).unwrap();
    println!("wi {:?} window {:?}", report.wi, report.steady_windows);
    let (&worst, &gap) = report.idleness.iter().max_by_key(|(_, &g)| g).unwrap();
    println!("worst vertex {worst} ({}, {}) gap {gap}", worst % 20, worst / 20);
    println!("visits: {:?}", report.visits.get(&worst));
    // where is it in the plan?
    for (i, rec) in plan.dispatches[0].iter().enumerate() {
        if rec.capture_times.contains_key(&worst) {
            println!("captured in dispatch {i} at {} (batch member: {})", rec.capture_times[&worst], rec.batch.contains(&worst));
        }
    }
}
