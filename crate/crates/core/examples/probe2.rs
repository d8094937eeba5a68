use milc::instance::{build_grid_instance, GridSpec};
use milc::dist::DistanceTable;
use milc::mlp::MlpSolver;
use milc::planner::{Heuristic, Planner};
use milc::tour::tsp_tour;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let bound: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(26);
    let spec = GridSpec { width: 20, height: 20, base_cell: (0, 0), comm_range: 4, transmission_time: 0 };
    let inst = build_grid_instance(&spec, 6, bound).unwrap();
    let distances = DistanceTable::compute(&inst);
    let solver = MlpSolver::new(&inst);
    let planner = Planner::new(&inst, &distances, &solver);
    let tour = tsp_tour(&inst, &distances, 0, 1).unwrap();
    println!("tour cost {}", tour.cost);
    let plan = planner.plan(Heuristic::H2, &tour).unwrap();
    println!("required max {:?}", plan.required.values().max());
    let mut prev_start = 0u64;
    for (i, rec) in plan.dispatches[0].iter().enumerate().take(25) {
        let walk: Vec<u64> = rec.batch.iter().map(|v| rec.capture_times[v]).collect();
        let arr_last = walk.iter().max().copied().unwrap_or(0);
        let legs: Vec<(usize, usize)> = rec.schedule.legs.iter().map(|l| (l.start_vertex, l.end_vertex)).collect();
        println!(
            "d{i}: loc ({:>2},{:>2}) batch {} start {} (delta {}, sense_wait {}) lat {} legs {:?}",
            rec.location % 20, rec.location / 20,
            rec.batch.len(), rec.start_time, rec.start_time - prev_start,
            rec.start_time.saturating_sub(arr_last),
            rec.schedule.total_latency, legs
        );
        prev_start = rec.start_time;
    }
    let total: usize = plan.dispatches[0].len();
    println!("dispatches {total}, period {:?}", plan.round_periods);
}
