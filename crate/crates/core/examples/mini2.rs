use tsris::{scenarios, solver, grid::Field};
fn main() {
    eprintln!("start");
    let s = scenarios::by_name("ex27").unwrap();
    eprintln!("scenario built");
    let params = s.params_for(2.5e-6);
    eprintln!("params: tau={} delta={}", params.tau, params.delta);
    let reg = s.problem.dissipation.regularize(params.delta).unwrap();
    eprintln!("reg built eta={} ramp={}", reg.eta, reg.ramp_delta);
    // single incremental step from 0
    let v = solver::incremental_step(&s.problem, &params, &Field(vec![0.0]), params.tau, params.tau);
    eprintln!("step 1: {v:?}");
    let v = v.unwrap();
    let v2 = solver::incremental_step(&s.problem, &params, &v, 2.0*params.tau, params.tau);
    eprintln!("step 2: {v2:?}");
    for n in [2, 8, 32, 128, 512] {
        let h = params.tau * n as f64;
        let t0 = std::time::Instant::now();
        let r = solver::run_viscous(&s.problem, &params, &Field(vec![0.0]), h);
        match r {
            Ok(tr) => eprintln!("h={h:.3e} ok in {:?} substeps={} end={:.6}",
                t0.elapsed(), tr.records.iter().map(|r| r.n_substeps as u64).sum::<u64>(),
                tr.states.last().unwrap().0[0]),
            Err(e) => eprintln!("h={h:.3e} ERR {e}"),
        }
    }
}
