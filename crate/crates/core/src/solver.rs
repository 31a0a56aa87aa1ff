//! Viscous integration at scale `lambda` by implicit incremental
//! minimization, and the second-order fast-scale relaxation used to resolve
//! jump transients.
//!
//! One implicit step from `u` over `tau` minimizes
//!
//! ```text
//!   lambda/(2 tau) |v - u|^2  +  tau R1^delta((v - u)/tau)  +  E(t1, v)
//! ```
//!
//! solved by damped Newton on the `C^1` first-order system with
//! `delta`-continuation.  Strict convexity of the increment is guaranteed by
//! requiring `lambda / tau > mu + 1`.  The per-step ledger books the exact
//! rate-independent increment `R1(du)`, the viscous increment
//! `lambda |du|^2 / tau`, and the midpoint force work, so the energy-loss
//! process built from it is nondecreasing by construction.

use serde::{Deserialize, Serialize};

use crate::dissipation::{DissipationPotential, RegularizedDissipation};
use crate::grid::{Field, SpatialGrid};
use crate::potentials::TotalEnergy;
use crate::Real;

/// Width floor for the `delta`-continuation when the caller asks for the
/// exact potential (`delta = 0`).
pub const DELTA_FLOOR: Real = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("incremental step failed to converge (last residual {residual:.3e} at t = {t:.6})")]
    StepFailure { t: Real, residual: Real },
    #[error("step failure persisted after {0} bisections")]
    BisectionExhausted(u32),
    #[error("fast relaxation exceeded theta_max = {theta_max} (rate {rate:.3e}, slack {slack:.3e})")]
    UnresolvedJump { theta_max: Real, rate: Real, slack: Real },
}

/// Problem data: total energy plus dissipation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub energy: TotalEnergy<Real>,
    pub dissipation: DissipationPotential<Real>,
}

impl Problem {
    pub fn grid(&self) -> &SpatialGrid<Real> {
        &self.energy.grid
    }

    /// Driving force `-D_u E(t, u)` nodewise.
    pub fn force(&self, t: Real, u: &Field<Real>) -> Field<Real> {
        let mut g = self.energy.gradient(t, u).expect("conforming field");
        for v in g.0.iter_mut() {
            *v = -*v;
        }
        g
    }

    /// Max over nodes of the pointwise stability slack of `-D_u E`.
    pub fn stability_slack_max(&self, t: Real, u: &Field<Real>) -> Real {
        let f = self.force(t, u);
        let m = self.grid().m;
        let mut worst = Real::NEG_INFINITY;
        for i in 0..self.grid().n_nodes {
            worst = worst.max(self.dissipation.stability_slack(f.node(i, m)));
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ViscousParams {
    pub lambda: Real,
    /// Regularization width; `0` means continuation down to the solver floor.
    pub delta: Real,
    /// Base time step; records aggregate `record_stride` of these.
    pub tau: Real,
    pub newton_tol: Real,
    pub newton_max_iter: usize,
    /// Adaptive controller: bisect any substep whose energy drop exceeds
    /// this cap.  `None` disables the controller.
    pub drop_cap: Option<Real>,
    /// Threshold on the positive part of the per-substep balance defect.
    pub balance_tol: Real,
    pub max_bisect: u32,
    /// Integration substeps aggregated into one stored record.
    pub record_stride: usize,
}

impl Default for ViscousParams {
    fn default() -> Self {
        ViscousParams {
            lambda: 0.01,
            delta: 0.0,
            tau: 1e-4,
            newton_tol: 1e-11,
            newton_max_iter: 60,
            drop_cap: None,
            balance_tol: 1e-8,
            max_bisect: 45,
            record_stride: 1,
        }
    }
}

impl ViscousParams {
    pub fn effective_delta(&self) -> Real {
        if self.delta > 0.0 {
            self.delta
        } else {
            DELTA_FLOOR
        }
    }

    fn check(&self, mu: Real) -> Result<(), SolverError> {
        if self.lambda <= 0.0 || self.tau <= 0.0 {
            return Err(SolverError::Config("lambda and tau must be positive".into()));
        }
        if self.lambda / self.tau <= mu + 1.0 {
            return Err(SolverError::Config(format!(
                "lambda/tau = {:.3e} must exceed mu + 1 = {:.3e} for a convex increment",
                self.lambda / self.tau,
                mu + 1.0
            )));
        }
        Ok(())
    }
}

/// Aggregated ledger entry for one stored record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    /// Record end time.
    pub t: Real,
    /// `sum R1(du)` over the record's substeps.
    pub ri_increment: Real,
    /// `sum lambda |du|^2 / tau` over the substeps.
    pub rd_increment: Real,
    /// Midpoint force work `sum <f(t1) - f(t0), (u0 + u1)/2>`.
    pub force_work: Real,
    /// Total energy at the record end.
    pub energy: Real,
    pub newton_iters: u32,
    /// Worst Newton residual over the substeps.
    pub residual: Real,
    /// Worst positive part of the substep balance defect.
    pub balance_violation: Real,
    pub n_substeps: u32,
}

/// One viscous run: states at record boundaries plus the per-record ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViscousTrajectory {
    pub params: ViscousParams,
    /// `times[0] = 0`; `times.len() == states.len() == records.len() + 1`.
    pub times: Vec<Real>,
    pub states: Vec<Field<Real>>,
    pub records: Vec<StepRecord>,
}

impl ViscousTrajectory {
    /// Energy-loss process `omega(t_k)`: cumulative ledger increments,
    /// nondecreasing by construction.
    pub fn omega(&self) -> Vec<Real> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut acc = 0.0;
        out.push(0.0);
        for r in &self.records {
            acc += r.ri_increment + r.rd_increment;
            out.push(acc);
        }
        out
    }

    pub fn horizon(&self) -> Real {
        *self.times.last().unwrap()
    }

    /// `L^1` speed of each record, `|du|_L1 / dt`.
    pub fn speeds(&self, grid: &SpatialGrid<Real>) -> Vec<Real> {
        let mut out = Vec::with_capacity(self.records.len());
        for k in 0..self.records.len() {
            let dt = self.times[k + 1] - self.times[k];
            let d = self.states[k + 1].sub(&self.states[k]);
            out.push(grid.norm_l1(&d) / dt);
        }
        out
    }

    /// Linear interpolant of the stored states at time `t`.
    pub fn state_at(&self, t: Real) -> Field<Real> {
        match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => self.states[i].clone(),
            Err(0) => self.states[0].clone(),
            Err(i) if i >= self.times.len() => self.states.last().unwrap().clone(),
            Err(i) => {
                let w = (t - self.times[i - 1]) / (self.times[i] - self.times[i - 1]);
                let mut s = self.states[i - 1].scaled(1.0 - w);
                s.axpy(w, &self.states[i]);
                s
            }
        }
    }

    pub fn worst_balance_violation(&self) -> Real {
        self.records.iter().map(|r| r.balance_violation).fold(0.0, Real::max)
    }
}

struct SubstepOutcome {
    state: Field<Real>,
    newton_iters: u32,
    residual: Real,
}

/// Workspace for the incremental Newton solves.
struct NewtonScratch {
    rate: Field<Real>,
    residual: Field<Real>,
    direction: Field<Real>,
    trial: Field<Real>,
    jac_diag: Vec<Real>,
    node_hess: Vec<Real>,
    node_hess2: Vec<Real>,
    force: Field<Real>,
}

impl NewtonScratch {
    fn new(grid: &SpatialGrid<Real>) -> Self {
        let m = grid.m;
        NewtonScratch {
            rate: grid.zero_field(),
            residual: grid.zero_field(),
            direction: grid.zero_field(),
            trial: grid.zero_field(),
            jac_diag: vec![0.0; grid.n_nodes * m * m],
            node_hess: vec![0.0; m * m],
            node_hess2: vec![0.0; m * m],
            force: grid.zero_field(),
        }
    }
}

/// One implicit incremental step: the minimizer of the incremental
/// functional at `t_next` over the step `tau`.
pub fn incremental_step(
    problem: &Problem,
    params: &ViscousParams,
    prev: &Field<Real>,
    t_next: Real,
    tau: Real,
) -> Result<Field<Real>, SolverError> {
    params.check(problem.energy.density.semiconvexity)?;
    problem
        .grid()
        .check(prev)
        .map_err(|e| SolverError::Config(e.to_string()))?;
    let mut scratch = NewtonScratch::new(problem.grid());
    let out = substep(problem, params, prev, t_next, tau, &mut scratch)?;
    Ok(out.state)
}

fn substep(
    problem: &Problem,
    params: &ViscousParams,
    prev: &Field<Real>,
    t_next: Real,
    tau: Real,
    ws: &mut NewtonScratch,
) -> Result<SubstepOutcome, SolverError> {
    let reg = problem.dissipation.regularize(params.effective_delta()).unwrap();
    let mut v = prev.clone();
    match newton_solve(problem, params, &reg, prev, t_next, tau, &mut v, ws) {
        Ok((iters, resid)) => Ok(SubstepOutcome { state: v, newton_iters: iters, residual: resid }),
        Err(resid) => Err(SolverError::StepFailure { t: t_next, residual: resid }),
    }
}

/// Semismooth Newton in play-operator form: the step equation
/// `lambda w + DR^delta(w) + D_u E(t1, v) = 0`, `w = (v - u)/tau`, is
/// rewritten as the fixed point `G(v) = v - u - tau P(-D_u E(t1, v)) = 0`
/// with `P` the pointwise inverse of the monotone rate map.  The Newton
/// matrix `lambda I + D2R + tau D2W0 - tau lap` is symmetric positive
/// definite under the convexity gate; backtracking is on `|G|`.
///
/// At the solution `|G| * lambda / tau` bounds the force residual, which is
/// what `residual` reports.
#[allow(clippy::too_many_arguments)]
fn newton_solve(
    problem: &Problem,
    params: &ViscousParams,
    reg: &RegularizedDissipation<Real>,
    prev: &Field<Real>,
    t_next: Real,
    tau: Real,
    v: &mut Field<Real>,
    ws: &mut NewtonScratch,
) -> Result<(u32, Real), Real> {
    let grid = *problem.grid();
    let m = grid.m;
    let n = grid.n_nodes;
    let lam = params.lambda;
    // the |G|-tolerance certifies a force residual of newton_tol; floor it
    // at the float resolution of the states themselves
    let scale = prev.0.iter().fold(1.0 as Real, |a, v| a.max(v.abs()));
    let tol_g = (params.newton_tol * tau / lam).max(1e-15 * scale);

    // G(v) into ws.residual; play rates into ws.rate
    let eval_g = |state: &Field<Real>, rate: &mut Field<Real>, g_out: &mut Field<Real>| {
        let force = problem.energy.gradient(t_next, state).expect("conforming");
        for i in 0..n {
            let mut node_force = [0.0; 8];
            for c in 0..m {
                node_force[c] = -force.0[i * m + c];
            }
            let mut r = [0.0; 8];
            reg.invert_rate(lam, &node_force[..m], &mut r[..m]);
            rate.node_mut(i, m).copy_from_slice(&r[..m]);
        }
        for j in 0..n * m {
            g_out.0[j] = state.0[j] - prev.0[j] - tau * rate.0[j];
        }
    };

    let mut g_field = grid.zero_field();
    eval_g(v, &mut ws.rate, &mut g_field);
    let mut g_norm = grid.norm_l2(&g_field);
    let mut trial_g = grid.zero_field();
    let mut trial_rate = grid.zero_field();
    // the driving force may jump at density kinks; a stalled line search is
    // then allowed a few unconditional full steps to cross them
    let mut crossing_budget = 3u32;

    for iter in 0..params.newton_max_iter {
        if g_norm <= tol_g {
            return Ok((iter as u32, g_norm * lam / tau));
        }
        // matrix: lambda I + D2R(r) + tau D2W0(v) + tau (-lap)
        let lap_diag = if grid.dim == 1 { 2.0 * tau / (grid.h * grid.h) } else { 0.0 };
        for i in 0..n {
            let r_node = ws.rate.node(i, m).to_vec();
            reg.hessian(&r_node, &mut ws.node_hess);
            problem.energy.density.hessian(v.node(i, m), &mut ws.node_hess2);
            for r in 0..m {
                for c in 0..m {
                    let mut val = ws.node_hess[r * m + c] + tau * ws.node_hess2[r * m + c];
                    if r == c {
                        val += lam + lap_diag;
                    }
                    ws.jac_diag[i * m * m + r * m + c] = val;
                }
            }
        }
        let off = if grid.dim == 1 { -tau / (grid.h * grid.h) } else { 0.0 };
        // rhs: -(lambda I + D2R(r)) G
        for i in 0..n {
            let r_node = ws.rate.node(i, m).to_vec();
            reg.hessian(&r_node, &mut ws.node_hess);
            for r in 0..m {
                let mut s = lam * g_field.0[i * m + r];
                for c in 0..m {
                    s += ws.node_hess[r * m + c] * g_field.0[i * m + c];
                }
                ws.direction.0[i * m + r] = -s;
            }
        }
        block_tridiag_solve(m, n, &mut ws.jac_diag, off, &mut ws.direction.0);

        let mut alpha: Real = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            ws.trial.0.copy_from_slice(&v.0);
            ws.trial.axpy(alpha, &ws.direction);
            eval_g(&ws.trial, &mut trial_rate, &mut trial_g);
            let trial_norm = grid.norm_l2(&trial_g);
            if trial_norm < g_norm * (1.0 - 1e-4 * alpha) + 1e-300 {
                v.0.copy_from_slice(&ws.trial.0);
                ws.rate.0.copy_from_slice(&trial_rate.0);
                g_field.0.copy_from_slice(&trial_g.0);
                g_norm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if crossing_budget > 0 {
                crossing_budget -= 1;
                ws.trial.0.copy_from_slice(&v.0);
                ws.trial.axpy(1.0, &ws.direction);
                eval_g(&ws.trial, &mut trial_rate, &mut trial_g);
                v.0.copy_from_slice(&ws.trial.0);
                ws.rate.0.copy_from_slice(&trial_rate.0);
                g_field.0.copy_from_slice(&trial_g.0);
                g_norm = grid.norm_l2(&g_field);
            } else {
                return Err(g_norm * lam / tau);
            }
        }
    }
    if g_norm <= tol_g * 10.0 {
        Ok((params.newton_max_iter as u32, g_norm * lam / tau))
    } else {
        Err(g_norm * lam / tau)
    }
}

/// In-place block-Thomas solve for a block-tridiagonal system with `m x m`
/// diagonal blocks and scalar off-diagonal coupling `off * I`.
fn block_tridiag_solve(m: usize, n: usize, diag: &mut [Real], off: Real, rhs: &mut [Real]) {
    if n == 1 || off == 0.0 {
        for i in 0..n {
            let blk = &mut diag[i * m * m..(i + 1) * m * m];
            let r = &mut rhs[i * m..(i + 1) * m];
            dense_solve(m, blk, r);
        }
        return;
    }
    // forward elimination: D_i -= off^2 D_{i-1}^{-1}; r_i -= off D_{i-1}^{-1} r_{i-1}
    let mut tmp_vec = vec![0.0; m];
    for i in 1..n {
        let (left, right) = diag.split_at_mut(i * m * m);
        let prev_blk = &left[(i - 1) * m * m..];
        // columns of D_{i-1}^{-1}
        let mut inv_full = vec![0.0; m * m];
        for c in 0..m {
            let mut e = vec![0.0; m];
            e[c] = 1.0;
            let mut a = prev_blk[..m * m].to_vec();
            dense_solve(m, &mut a, &mut e);
            for r in 0..m {
                inv_full[r * m + c] = e[r];
            }
        }
        let cur = &mut right[..m * m];
        for r in 0..m {
            for c in 0..m {
                cur[r * m + c] -= off * off * inv_full[r * m + c];
            }
        }
        let (rl, rr) = rhs.split_at_mut(i * m);
        let prev_r = &rl[(i - 1) * m..];
        for r in 0..m {
            tmp_vec[r] = 0.0;
            for c in 0..m {
                tmp_vec[r] += inv_full[r * m + c] * prev_r[c];
            }
        }
        for r in 0..m {
            rr[r] -= off * tmp_vec[r];
        }
    }
    // back substitution
    let last = n - 1;
    {
        let blk = &mut diag[last * m * m..(last + 1) * m * m];
        let r = &mut rhs[last * m..(last + 1) * m];
        dense_solve(m, blk, r);
    }
    for i in (0..last).rev() {
        let (rl, rr) = rhs.split_at_mut((i + 1) * m);
        let cur = &mut rl[i * m..];
        let next = &rr[..m];
        for r in 0..m {
            cur[r] -= off * next[r];
        }
        let blk = &mut diag[i * m * m..(i + 1) * m * m];
        dense_solve(m, blk, &mut cur[..m]);
    }
}

/// Gaussian elimination with partial pivoting; destroys `a`, solves into `b`.
fn dense_solve(m: usize, a: &mut [Real], b: &mut [Real]) {
    if m == 1 {
        b[0] /= a[0];
        return;
    }
    for col in 0..m {
        let mut piv = col;
        for r in (col + 1)..m {
            if a[r * m + col].abs() > a[piv * m + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..m {
                a.swap(col * m + c, piv * m + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * m + col];
        for r in (col + 1)..m {
            let f = a[r * m + col] / d;
            if f != 0.0 {
                for c in col..m {
                    a[r * m + c] -= f * a[col * m + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut s = b[col];
        for c in (col + 1)..m {
            s -= a[col * m + c] * b[c];
        }
        b[col] = s / a[col * m + col];
    }
}

/// March the incremental scheme over `[0, horizon]`.
///
/// Substeps are bisected whenever Newton fails, the energy drop exceeds
/// `drop_cap`, or the booked balance defect exceeds its threshold; records
/// aggregate `record_stride` base steps.
pub fn run_viscous(
    problem: &Problem,
    params: &ViscousParams,
    u0: &Field<Real>,
    horizon: Real,
) -> Result<ViscousTrajectory, SolverError> {
    params.check(problem.energy.density.semiconvexity)?;
    problem
        .grid()
        .check(u0)
        .map_err(|e| SolverError::Config(e.to_string()))?;
    if horizon <= 0.0 {
        return Err(SolverError::Config("horizon must be positive".into()));
    }
    let grid = *problem.grid();
    let mut ws = NewtonScratch::new(&grid);
    let n_records =
        ((horizon / (params.tau * params.record_stride as Real)).ceil() as usize).max(1);
    let t_rec = horizon / n_records as Real;

    let mut times = Vec::with_capacity(n_records + 1);
    let mut states = Vec::with_capacity(n_records + 1);
    let mut records = Vec::with_capacity(n_records);
    times.push(0.0);
    states.push(u0.clone());

    let mut u = u0.clone();
    let mut t = 0.0;
    let mut energy = problem.energy.eval(0.0, &u);
    let mut f0 = grid.zero_field();
    let mut f1 = grid.zero_field();
    let tau_floor = params.tau * 0.5f64.powi(params.max_bisect as i32);
    let kinks = problem.energy.density.kinks.clone();
    // a gradient kink crossed at distance eps books an O(eps) balance
    // defect, so crossing substeps are split to land on the kink first
    let crosses_kink = |a: &Field<Real>, b: &Field<Real>| -> bool {
        if kinks.is_empty() {
            return false;
        }
        a.0.iter().zip(&b.0).any(|(x, y)| {
            kinks
                .iter()
                .any(|k| (x - k) * (y - k) < 0.0 && (x - k).abs() > 1e-11)
        })
    };

    let trace = std::env::var("TSRIS_TRACE").is_ok();
    let mut total_substeps: u64 = 0;
    for k in 0..n_records {
        let t_end = if k + 1 == n_records { horizon } else { (k + 1) as Real * t_rec };
        if trace && k % 200 == 0 {
            eprintln!("record {k}/{n_records} t={t:.8e} substeps={total_substeps} u0={:.6e}", u.0[0]);
        }
        let mut rec = StepRecord {
            t: t_end,
            ri_increment: 0.0,
            rd_increment: 0.0,
            force_work: 0.0,
            energy: 0.0,
            newton_iters: 0,
            residual: 0.0,
            balance_violation: 0.0,
            n_substeps: 0,
        };
        let mut tau_cur = params.tau;
        let mut spins: u64 = 0;
        while t < t_end - 1e-15 * horizon {
            spins += 1;
            if trace && spins % 1_000_000 == 0 {
                eprintln!("spin {spins} at t={t:.12e} tau_cur={tau_cur:.3e} u0={:.9e}", u.0[0]);
            }
            let mut tau_step = tau_cur.min(t_end - t);
            let mut bisect = false;
            let mut why = "";
            let mut attempt = substep(problem, params, &u, t + tau_step, tau_step, &mut ws);
            if let Ok(out) = &attempt {
                if crosses_kink(&u, &out.state) {
                    // split the substep to land on the kink: bisect for the
                    // largest sub-tau whose step stays on this side
                    let full_tau = tau_step;
                    let mut lo = 0.0;
                    let mut hi = full_tau;
                    let mut best: Option<(Real, SubstepOutcome)> = None;
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if !(0.0 < mid && mid < full_tau) {
                            break;
                        }
                        match substep(problem, params, &u, t + mid, mid, &mut ws) {
                            Ok(cand) => {
                                if crosses_kink(&u, &cand.state) {
                                    hi = mid;
                                } else {
                                    lo = mid;
                                    best = Some((mid, cand));
                                }
                            }
                            Err(_) => hi = mid,
                        }
                        if hi - lo <= 1e-9 * full_tau {
                            break;
                        }
                    }
                    if let Some((partial_tau, cand)) = best {
                        tau_step = partial_tau;
                        attempt = Ok(cand);
                    }
                    // with no usable partial step the state already sits at
                    // the kink and the crossing is exact enough to book
                }
            }
            let t1 = t + tau_step;
            match attempt {
                Err(SolverError::StepFailure { .. }) => {
                    bisect = true;
                    why = "newton";
                }
                Err(e) => return Err(e),
                Ok(out) => {
                    let e1 = problem.energy.eval(t1, &out.state);
                    let du = out.state.sub(&u);
                    let ri = problem.dissipation.total(&grid, &du);
                    let rd = params.lambda / tau_step * grid.pair(&du, &du);
                    problem.energy.loading.value(t, &grid, &mut f0);
                    problem.energy.loading.value(t1, &grid, &mut f1);
                    let df = f1.sub(&f0);
                    let mut mid = u.clone();
                    mid.axpy(1.0, &out.state);
                    let fw = 0.5 * grid.pair(&df, &mid);
                    let defect = e1 - energy + ri + rd + fw;
                    let can_bisect = tau_step > tau_floor * 2.0;
                    if let Some(cap) = params.drop_cap {
                        if energy - e1 > cap && can_bisect {
                            bisect = true;
                            why = "drop";
                        }
                    }
                    if defect > params.balance_tol && can_bisect {
                        bisect = true;
                        why = "defect";
                    }
                    if !bisect {
                        u = out.state;
                        t = if t_end - t1 <= 1e-12 * t_rec { t_end } else { t1 };
                        energy = e1;
                        rec.ri_increment += ri;
                        rec.rd_increment += rd;
                        rec.force_work += fw;
                        rec.newton_iters += out.newton_iters;
                        rec.residual = rec.residual.max(out.residual);
                        rec.balance_violation = rec.balance_violation.max(defect.max(0.0));
                        rec.n_substeps += 1;
                        total_substeps += 1;
                        if tau_cur < params.tau {
                            tau_cur = (tau_cur * 2.0).min(params.tau);
                        }
                    }
                }
            }
            if bisect {
                if trace && spins % 100_000 == 0 {
                    eprintln!("  bisect({why}) tau={tau_step:.3e} t={t:.9e}");
                    if why == "defect" {
                        if let Ok(out) = substep(problem, params, &u, t + tau_step, tau_step, &mut ws) {
                            let e1 = problem.energy.eval(t + tau_step, &out.state);
                            let du = out.state.sub(&u);
                            let ri = problem.dissipation.total(&grid, &du);
                            let rd = params.lambda / tau_step * grid.pair(&du, &du);
                            eprintln!("    u={:.17e} v={:.17e}", u.0[0], out.state.0[0]);
                            eprintln!("    de={:.6e} ri={:.6e} rd={:.6e} defect={:.6e}",
                                e1 - energy, ri, rd, e1 - energy + ri + rd);
                        }
                    }
                }
                tau_cur = tau_step * 0.5;
                if tau_cur < tau_floor {
                    return Err(SolverError::BisectionExhausted(params.max_bisect));
                }
            }
        }
        rec.energy = energy;
        times.push(t_end);
        states.push(u.clone());
        records.push(rec);
    }
    Ok(ViscousTrajectory { params: *params, times, states, records })
}

/// Discrete variational-inequality residual of record `k`:
///
/// `max_xi  R1(w) + <-lambda w + lap u - DW0(u) + f, xi - w> - R1(xi)`
///
/// with `w = du/dt` over the record; nonpositive (up to tolerance) certifies
/// the strong-solution inequality at that step.
pub fn strong_solution_residual(
    problem: &Problem,
    traj: &ViscousTrajectory,
    k: usize,
    test_fields: &[Field<Real>],
) -> Real {
    assert!(k < traj.records.len(), "interior step index");
    let grid = *problem.grid();
    let tau = traj.times[k + 1] - traj.times[k];
    let u = &traj.states[k + 1];
    let w = traj.states[k + 1].sub(&traj.states[k]).scaled(1.0 / tau);
    let mut sigma = problem.force(traj.times[k + 1], u);
    sigma.axpy(-traj.params.lambda, &w);
    let base = problem.dissipation.total(&grid, &w) - grid.pair(&sigma, &w);
    let mut worst = Real::NEG_INFINITY;
    for xi in test_fields {
        let val = base + grid.pair(&sigma, xi) - problem.dissipation.total(&grid, xi);
        worst = worst.max(val);
    }
    worst
}

// ---------------------------------------------------------------------------
// fast-scale relaxation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FastParams {
    /// Viscosity of the fast equation (one for the canonical transient).
    pub lambda: Real,
    pub tau: Real,
    pub delta: Real,
    /// Rate threshold below which the motion counts as a tail.
    pub eps_tail: Real,
    /// Stability-slack threshold for endpoint stationarity.
    pub eps_stab: Real,
    pub theta_max: Real,
    /// Thinning of the stored profile.
    pub store_stride: usize,
}

impl Default for FastParams {
    fn default() -> Self {
        FastParams {
            lambda: 1.0,
            tau: 1e-3,
            delta: 1e-8,
            eps_tail: 1e-5,
            eps_stab: 1e-6,
            theta_max: 200.0,
            store_stride: 8,
        }
    }
}

/// Outcome of one fast-scale relaxation with frozen loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FastRelaxation {
    pub thetas: Vec<Real>,
    pub states: Vec<Field<Real>>,
    /// `int R1(dv)` over the run.
    pub ri_diss: Real,
    /// `int |dv|^2_{L2}` over the run.
    pub rd_diss: Real,
    pub rate_end: Real,
    pub slack_end: Real,
    pub stationary: bool,
}

impl FastRelaxation {
    pub fn left(&self) -> &Field<Real> {
        self.states.first().unwrap()
    }

    pub fn right(&self) -> &Field<Real> {
        self.states.last().unwrap()
    }

    pub fn total(&self) -> Real {
        self.ri_diss + self.rd_diss
    }
}

/// Integrate `lambda dv + DR^delta(dv) = -D_u E(t_frozen, v)` by the
/// trapezoidal rule (second order) until the rate falls below `eps_tail`
/// and the state is `eps_stab`-stable.
pub fn fast_relax(
    problem: &Problem,
    t_frozen: Real,
    v0: &Field<Real>,
    p: &FastParams,
) -> Result<FastRelaxation, SolverError> {
    let grid = *problem.grid();
    let m = grid.m;
    let reg = problem.dissipation.regularize(p.delta.max(DELTA_FLOOR)).unwrap();

    // rate field h(v): pointwise inversion of s -> lambda s + DR(s)
    let rate_of = |v: &Field<Real>| -> Field<Real> {
        let g = problem.force(t_frozen, v);
        let mut out = grid.zero_field();
        let mut r = [0.0; 8];
        for i in 0..grid.n_nodes {
            reg.invert_rate(p.lambda, g.node(i, m), &mut r[..m]);
            out.node_mut(i, m).copy_from_slice(&r[..m]);
        }
        out
    };

    let mut v = v0.clone();
    let mut h_cur = rate_of(&v);
    let mut theta = 0.0;
    let mut ri = 0.0;
    let mut rd = 0.0;
    let mut thetas = vec![0.0];
    let mut states = vec![v.clone()];
    let mut step_idx = 0usize;
    let mut rate_norm = grid.norm_l2(&h_cur);
    let mut slack = problem.stability_slack_max(t_frozen, &v);

    while theta < p.theta_max {
        if rate_norm <= p.eps_tail && slack <= p.eps_stab {
            if *thetas.last().unwrap() < theta {
                thetas.push(theta);
                states.push(v.clone());
            }
            return Ok(FastRelaxation {
                thetas,
                states,
                ri_diss: ri,
                rd_diss: rd,
                rate_end: rate_norm,
                slack_end: slack,
                stationary: true,
            });
        }
        let mut tau = p.tau;
        // trapezoidal step with fixed-point iteration; halve on slow contraction
        let (v_next, h_next) = loop {
            let mut candidate = v.clone();
            candidate.axpy(tau, &h_cur);
            let mut h_new = rate_of(&candidate);
            let mut converged = false;
            for _ in 0..60 {
                let mut next = v.clone();
                next.axpy(0.5 * tau, &h_cur);
                next.axpy(0.5 * tau, &h_new);
                let delta = next.sub(&candidate);
                candidate = next;
                h_new = rate_of(&candidate);
                if grid.norm_l2(&delta) <= 1e-13 * (1.0 + grid.norm_l2(&candidate)) {
                    converged = true;
                    break;
                }
            }
            if converged || tau < p.tau * 1e-6 {
                break (candidate, h_new);
            }
            tau *= 0.5;
        };
        let dv = v_next.sub(&v);
        ri += problem.dissipation.total(&grid, &dv);
        // trapezoid of |dv/dtheta|^2 over the stage rates (second order)
        rd += 0.5 * tau * (grid.pair(&h_cur, &h_cur) + grid.pair(&h_next, &h_next));
        v = v_next;
        h_cur = h_next;
        theta += tau;
        rate_norm = grid.norm_l2(&h_cur);
        slack = problem.stability_slack_max(t_frozen, &v);
        step_idx += 1;
        if step_idx % p.store_stride == 0 {
            thetas.push(theta);
            states.push(v.clone());
        }
    }
    Err(SolverError::UnresolvedJump { theta_max: p.theta_max, rate: rate_norm, slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{EnergyDensity, Loading};

    fn scalar_problem(density: EnergyDensity<Real>, loading: Loading<Real>) -> Problem {
        let grid = SpatialGrid::point(density.m);
        Problem {
            energy: TotalEnergy::new(density, loading, grid),
            dissipation: DissipationPotential::absolute_value(),
        }
    }

    #[test]
    fn scalar_closed_form_step() {
        // 2 v + sgn(v) + v = 3  =>  v = 2/3
        let p = scalar_problem(EnergyDensity::quadratic(1), Loading::constant(vec![3.0]));
        let params = ViscousParams { lambda: 1.0, tau: 0.5, delta: 0.0, ..Default::default() };
        let v = incremental_step(&p, &params, &Field(vec![0.0]), 0.0, 0.5).unwrap();
        assert!((v.0[0] - 2.0 / 3.0).abs() < 1e-9, "{}", v.0[0]);
    }

    #[test]
    fn stable_state_does_not_move() {
        let p = scalar_problem(EnergyDensity::quadratic(1), Loading::constant(vec![0.5]));
        let params = ViscousParams { lambda: 1.0, tau: 0.25, delta: 1e-6, ..Default::default() };
        // force at 0 is 0.5, inside the stability set [-1, 1]
        let v = incremental_step(&p, &params, &Field(vec![0.0]), 0.0, 0.25).unwrap();
        assert!(v.0[0].abs() < 1e-6, "{}", v.0[0]);
    }

    #[test]
    fn convexity_gate() {
        let p = scalar_problem(EnergyDensity::double_well_ex24(), Loading::constant(vec![0.0]));
        let params = ViscousParams { lambda: 0.01, tau: 0.01, ..Default::default() };
        // lambda/tau = 1 < mu + 1 = 3
        assert!(matches!(
            incremental_step(&p, &params, &Field(vec![0.0]), 0.0, 0.01),
            Err(SolverError::Config(_))
        ));
    }

    #[test]
    fn double_well_trajectory_follows_strong_branch() {
        let p = scalar_problem(EnergyDensity::double_well_ex24(), Loading::ramp(vec![0.0], vec![1.0]));
        let lambda = 0.01;
        let params = ViscousParams {
            lambda,
            tau: lambda / 200.0,
            delta: 1e-8,
            drop_cap: Some(0.05),
            record_stride: 10,
            ..Default::default()
        };
        let traj = run_viscous(&p, &params, &Field(vec![-1.0]), 5.0).unwrap();
        let at = |t: Real| traj.state_at(t).0[0];
        assert!((at(0.5) + 1.0).abs() < 5e-3, "rest phase: {}", at(0.5));
        assert!((at(2.0) + 0.5).abs() < 2e-2, "sliding phase: {}", at(2.0));
        assert!((at(2.9) + 0.05).abs() < 2e-2, "pre-jump: {}", at(2.9));
        assert!((at(3.2) - 2.1).abs() < 2e-2, "post-jump: {}", at(3.2));
        assert!((at(5.0) - 3.0).abs() < 2e-2, "terminal: {}", at(5.0));
        // ledger sanity
        assert!(traj.worst_balance_violation() <= params.balance_tol);
        let om = traj.omega();
        assert!(om.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        // the jump dissipates about 6 across t = 3
        let idx = |t: Real| traj.times.iter().position(|&x| x >= t).unwrap();
        let drop = om[idx(3.15)] - om[idx(2.95)];
        assert!((drop - 6.0).abs() < 0.3, "jump drop {drop}");
    }

    #[test]
    fn constant_trajectory_for_stable_critical_point() {
        let p = scalar_problem(EnergyDensity::quadratic(1), Loading::constant(vec![0.0]));
        let params = ViscousParams {
            lambda: 0.1,
            tau: 1e-3,
            delta: 1e-9,
            record_stride: 50,
            ..Default::default()
        };
        let traj = run_viscous(&p, &params, &Field(vec![0.0]), 1.0).unwrap();
        for s in &traj.states {
            assert!(s.0[0].abs() < 1e-12);
        }
        assert!(traj.omega().last().unwrap().abs() < 1e-12);
    }

    #[test]
    fn strong_residual_certifies_converged_steps() {
        let p = scalar_problem(EnergyDensity::double_well_ex24(), Loading::ramp(vec![0.0], vec![1.0]));
        let params = ViscousParams {
            lambda: 0.05,
            tau: 5e-4,
            delta: 0.0,
            newton_tol: 1e-12,
            record_stride: 1,
            ..Default::default()
        };
        let traj = run_viscous(&p, &params, &Field(vec![-1.0]), 2.0).unwrap();
        let tests: Vec<Field<Real>> = (0..50)
            .map(|i| Field(vec![(crate::dissipation::halton(i + 1, 2) - 0.5) * 4.0]))
            .collect();
        let k = traj.records.len() / 2;
        // self-test direction contributes zero
        let w = traj.states[k + 1]
            .sub(&traj.states[k])
            .scaled(1.0 / (traj.times[k + 1] - traj.times[k]));
        let self_res = strong_solution_residual(&p, &traj, k, &[w]);
        assert!(self_res.abs() < 1e-10, "self residual {self_res}");
        let res = strong_solution_residual(&p, &traj, k, &tests);
        assert!(res <= 10.0 * params.newton_tol + 1e-10, "residual {res}");
        // perturbed state is detected
        let mut bad = traj.clone();
        bad.states[k + 1].0[0] += 0.1;
        let res_bad = strong_solution_residual(&p, &bad, k, &tests);
        assert!(res_bad > 1e-3, "perturbation not flagged: {res_bad}");
    }

    #[test]
    fn fast_relax_matches_jump_profile() {
        // entry state 0 at the double-well jump time: v(theta) = 2 - 2 exp(-2 theta)
        let p = scalar_problem(EnergyDensity::double_well_ex24(), Loading::ramp(vec![0.0], vec![1.0]));
        let fp = FastParams {
            tau: 1e-3,
            eps_tail: 1e-7,
            eps_stab: 1e-6,
            store_stride: 1,
            ..Default::default()
        };
        let out = fast_relax(&p, 3.0, &Field(vec![0.0]), &fp).unwrap();
        assert!(out.stationary);
        let mut sup: Real = 0.0;
        for (theta, state) in out.thetas.iter().zip(&out.states) {
            if *theta > 10.0 {
                break;
            }
            sup = sup.max((state.0[0] - crate::oracles::ex24::u_jump(*theta, 1.0)).abs());
        }
        assert!(sup <= 1e-4, "sup error {sup}");
        assert!((out.ri_diss - 2.0).abs() < 1e-3, "ri {}", out.ri_diss);
        assert!((out.rd_diss - 4.0).abs() < 1e-3, "rd {}", out.rd_diss);
    }

    #[test]
    fn fast_relax_stays_put_when_stable() {
        let p = scalar_problem(EnergyDensity::quadratic(1), Loading::constant(vec![0.2]));
        let fp = FastParams::default();
        let out = fast_relax(&p, 0.0, &Field(vec![0.2]), &fp).unwrap();
        assert!(out.stationary);
        assert!(out.total() < 1e-10);
    }

    #[test]
    fn block_tridiag_matches_dense() {
        // random SPD-ish block system, m = 2, n = 5
        let m = 2;
        let n = 5;
        let off = -3.0;
        let mut diag = vec![0.0; n * m * m];
        for i in 0..n {
            diag[i * m * m] = 10.0 + i as Real;
            diag[i * m * m + 1] = 1.0;
            diag[i * m * m + 2] = 1.0;
            diag[i * m * m + 3] = 12.0 - i as Real * 0.5;
        }
        let rhs: Vec<Real> = (0..n * m).map(|i| (i as Real * 0.7).sin()).collect();
        // dense reference
        let nm = n * m;
        let mut dense = vec![0.0; nm * nm];
        for i in 0..n {
            for r in 0..m {
                for c in 0..m {
                    dense[(i * m + r) * nm + i * m + c] = diag[i * m * m + r * m + c];
                }
            }
            if i + 1 < n {
                for r in 0..m {
                    dense[(i * m + r) * nm + (i + 1) * m + r] = off;
                    dense[((i + 1) * m + r) * nm + i * m + r] = off;
                }
            }
        }
        let mut x_dense = rhs.clone();
        dense_solve(nm, &mut dense, &mut x_dense);
        let mut diag_b = diag.clone();
        let mut x_block = rhs.clone();
        block_tridiag_solve(m, n, &mut diag_b, off, &mut x_block);
        for i in 0..nm {
            assert!((x_dense[i] - x_block[i]).abs() < 1e-10, "component {i}");
        }
    }

    #[test]
    fn one_dim_smoke_runs() {
        let grid = SpatialGrid::interval(1, 16, 1.0).unwrap();
        let energy = TotalEnergy::new(
            EnergyDensity::double_well_ex24(),
            Loading {
                base: vec![0.0],
                rate: vec![1.0],
                profile: crate::potentials::SpatialProfile::SinePi,
            },
            grid,
        );
        let p = Problem { energy, dissipation: DissipationPotential::absolute_value() };
        let params = ViscousParams {
            lambda: 0.05,
            tau: 1e-3,
            delta: 0.0,
            record_stride: 20,
            ..Default::default()
        };
        let u0 = grid.constant_field(&[-1.0]);
        let traj = run_viscous(&p, &params, &u0, 1.5).unwrap();
        assert!(traj.worst_balance_violation() <= 1e-6);
        assert!(traj.states.last().unwrap().is_finite());
    }
}
