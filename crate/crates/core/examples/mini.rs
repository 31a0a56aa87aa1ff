//! Scratch profile run (not part of the deliverable tests).
use tsris::{scenarios, solver};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ex27".into());
    let horizon: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.002);
    let s = scenarios::by_name(&name).unwrap();
    let lambda = s.smallest_lambda();
    let params = s.params_for(lambda);
    let t0 = std::time::Instant::now();
    let traj = solver::run_viscous(&s.problem, &params, &s.u0, horizon).expect("run");
    println!(
        "{name} horizon {horizon}: {:?} records={} substeps={}",
        t0.elapsed(),
        traj.records.len(),
        traj.records.iter().map(|r| r.n_substeps as u64).sum::<u64>()
    );
    let last = traj.states.last().unwrap();
    println!("final: {:?}", &last.0[..last.0.len().min(4)]);
}
