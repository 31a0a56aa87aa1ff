//! Scratch probe for scenario numbers (not part of the deliverable tests).
use tsris::scenarios;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "ex24".into());
    let s = scenarios::by_name(&name).expect("scenario");
    let t0 = std::time::Instant::now();
    let arts = scenarios::run_scenario(&s, 2).expect("run");
    let sol = &arts.solution;
    println!("scenario {name}: {:.2?}s, certified = {}", t0.elapsed(), sol.certified);
    for c in sol.failed_certificates() {
        println!("  FAIL {} lhs={:.6e} rhs={:.6e} note={}", c.name, c.lhs, c.rhs, c.note);
    }
    println!("  S0 = {:.6}, horizon = {}", sol.s_horizon, sol.horizon);
    for j in &sol.jumps {
        println!(
        "  jump t_k={:.6} s_k={:.4} range={:?} init={} trans={} slide_var={:?} atoms=({:.6},{:.6}) gap={:.6} unresolved={:?}",
            j.t_k, j.s_k, j.t_range, j.initial_time, j.transients.len(),
            j.slide.as_ref().map(|x| x.var_r1), j.mu_ri_atom, j.mu_rd_atom, j.energy_gap, j.unresolved);
        for tr in &j.transients {
            println!("    transient off={:.6} left={:?} right={:?} d=({:.6},{:.6})",
                tr.anchor_offset, tr.left.0, tr.right.0, tr.ri_diss, tr.rd_diss);
        }
    }
    println!("  ac mass total = {:.6}", sol.measures.ac_mass(0.0, sol.horizon + 1.0));
    println!("  energy-eq residual = {:.3e}", tsris::two_speed::verify_energy_equality(sol, 0.0, sol.s_horizon));
    let last = sol.states.last().unwrap();
    println!("  final state = {:?}", &last.0[..last.0.len().min(4)]);
}
