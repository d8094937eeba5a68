use milc::instance::{build_grid_instance, GridSpec};
use milc::dist::DistanceTable;
use milc::mlp::MlpSolver;
use milc::planner::{Heuristic, Planner};
use milc::sim::simulate;
use milc::tour::tsp_tour;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let bound: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(10);
    let n: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(6);
    let rcom: u32 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(4);
    let seeds: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(3);
    let spec = GridSpec { width: 20, height: 20, base_cell: (0, 0), comm_range: rcom, transmission_time: 0 };
    let inst = build_grid_instance(&spec, n, bound).unwrap();
    let t0 = std::time::Instant::now();
    let distances = DistanceTable::compute(&inst);
    eprintln!("distances: {:?}", t0.elapsed());
    let t0 = std::time::Instant::now();
    let solver = MlpSolver::new(&inst);
    eprintln!("solver: {:?}", t0.elapsed());
    let planner = Planner::new(&inst, &distances, &solver);
    for h in [Heuristic::H1, Heuristic::H2, Heuristic::H3] {
        let mut wis = Vec::new();
        let mut ks = Vec::new();
        for seed in 0..seeds {
            let t0 = std::time::Instant::now();
            let tour = tsp_tour(&inst, &distances, seed, 1).unwrap();
            let t_tour = t0.elapsed();
            let t0 = std::time::Instant::now();
            match planner.plan(h, &tour) {
                Ok(plan) => {
                    let t_plan = t0.elapsed();
                    let t0 = std::time::Instant::now();
                    let (report, _) = simulate(&inst, &distances, &plan, 4).unwrap();
                    eprintln!("  {h} seed {seed}: tour {} ({t_tour:?}), k={}, wi={:?}, viol={}, plan {t_plan:?}, sim {:?}",
                        tour.cost, plan.subtours.k, report.wi, report.violations.len(), t0.elapsed());
                    wis.push(report.wi.unwrap() as f64);
                    ks.push(plan.subtours.k);
                }
                Err(e) => eprintln!("  {h} seed {seed}: {e}"),
            }
        }
        if !wis.is_empty() {
            let mean = wis.iter().sum::<f64>() / wis.len() as f64;
            println!("{h}: bound={bound} n={n} rcom={rcom} mean_wi={mean:.1} k={:?}", ks);
        }
    }
}
