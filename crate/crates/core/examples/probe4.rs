use milc::instance::{build_grid_instance, GridSpec};
use milc::mlp::MlpSolver;

fn main() {
    let spec = GridSpec { width: 20, height: 20, base_cell: (0, 0), comm_range: 4, transmission_time: 0 };
    let inst = build_grid_instance(&spec, 6, 26).unwrap();
    let solver = MlpSolver::new(&inst);
    for v in [399usize, 19, 380, 210] {
        let lats_unlocked: Vec<_> = (1..=6).map(|b| solver.min_latency(v, b, false).unwrap()).collect();
        let lats_locked: Vec<_> = (1..=6).map(|b| solver.min_latency(v, b, true)).collect();
        println!("v ({:>2},{:>2}): unlocked {:?} locked {:?}", v % 20, v / 20, lats_unlocked, lats_locked);
    }
}
