//! Named scenario registry and the end-to-end run driver.
//!
//! A scenario bundles problem data with solver and assembly parameters tuned
//! so that its published reference numbers are reproducible: viscosities,
//! step rules honoring the convexity gate, the regularization width that
//! selects sliding motion at marginal forces, and the detection thresholds.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::dissipation::DissipationPotential;
use crate::grid::{Field, SpatialGrid};
use crate::potentials::{EnergyDensity, Loading, SpatialProfile, TotalEnergy};
use crate::solver::{run_viscous, FastParams, Problem, SolverError, ViscousParams, ViscousTrajectory};
use crate::two_speed::{assemble_two_speed, TwoSpeedParams, TwoSpeedSolution};
use crate::Real;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub problem: Problem,
    pub u0: Field<Real>,
    pub horizon: Real,
    /// Sweep viscosities, strictly decreasing.
    pub lambdas: Vec<Real>,
    /// `tau = lambda / tau_divisor` per run.
    pub tau_divisor: Real,
    pub delta: Real,
    pub drop_cap: Real,
    pub record_stride: usize,
    pub balance_tol: Real,
    pub two_speed: TwoSpeedParams,
}

impl Scenario {
    pub fn params_for(&self, lambda: Real) -> ViscousParams {
        ViscousParams {
            lambda,
            delta: self.delta,
            tau: lambda / self.tau_divisor,
            drop_cap: Some(self.drop_cap),
            balance_tol: self.balance_tol,
            record_stride: self.record_stride,
            ..Default::default()
        }
    }

    pub fn smallest_lambda(&self) -> Real {
        *self.lambdas.last().unwrap()
    }
}

fn scalar_problem(density: EnergyDensity<Real>, loading: Loading<Real>, dissipation: DissipationPotential<Real>) -> Problem {
    let grid = SpatialGrid::point(density.m);
    Problem { energy: TotalEnergy::new(density, loading, grid), dissipation }
}

/// Double-well scenario: rest, slide, one rate-dependent jump at `t = 3`.
pub fn ex24() -> Scenario {
    Scenario {
        name: "ex24".into(),
        description: "scalar double well under a unit ramp: viscosity selects the late jump at t = 3 \
                      with dissipation split 2 + 4"
            .into(),
        problem: scalar_problem(
            EnergyDensity::double_well_ex24(),
            Loading::ramp(vec![0.0], vec![1.0]),
            DissipationPotential::absolute_value(),
        ),
        u0: Field(vec![-1.0]),
        horizon: 5.0,
        lambdas: vec![0.05, 0.01],
        tau_divisor: 200.0,
        delta: 1e-8,
        drop_cap: 0.05,
        record_stride: 8,
        balance_tol: 1e-8,
        two_speed: TwoSpeedParams {
            fast: FastParams { tau: 1e-3, theta_max: 60.0, ..Default::default() },
            ..Default::default()
        },
    }
}

/// Path-length scenario: the whole quasistatic path of length 5/3 compresses
/// into an initial-time jump whose rate-independent mass strictly exceeds
/// the unit jump distance.
pub fn ex25() -> Scenario {
    Scenario {
        name: "ex25".into(),
        description: "two-component potential with a marginal path of length 5/3: a pure \
                      rate-independent slide resolved as an initial-time jump"
            .into(),
        problem: scalar_problem(
            EnergyDensity::path_length_ex25(),
            Loading::constant(vec![0.0, 0.0]),
            DissipationPotential::weighted_l1(vec![1.0, 1.0]).unwrap(),
        ),
        u0: Field(vec![0.0, 0.0]),
        horizon: 0.3,
        lambdas: vec![2e-5, 1e-5],
        tau_divisor: 100.0,
        delta: 8e-3,
        drop_cap: 0.05,
        record_stride: 64,
        balance_tol: 1e-8,
        two_speed: TwoSpeedParams {
            fast: FastParams { tau: 1e-3, theta_max: 40.0, ..Default::default() },
            ..Default::default()
        },
    }
}

/// Guided-path scenario: a strongly unstable initial state shoots along the
/// guide curve; the jump's rate-independent mass approaches the guide
/// arclength while the limit jump has unit variation.
pub fn ex26() -> Scenario {
    ex26_with_stiffness(100.0)
}

pub fn ex26_with_stiffness(k: Real) -> Scenario {
    Scenario {
        name: "ex26".into(),
        description: "guide-curve potential with Euclidean friction: the initial-time jump \
                      dissipates the arclength of the guide rate-independently"
            .into(),
        problem: scalar_problem(
            EnergyDensity::guide_ex26(k),
            Loading::constant(vec![0.0, 0.0]),
            DissipationPotential::euclidean(2),
        ),
        u0: Field(vec![0.0, 0.0]),
        horizon: 0.12,
        lambdas: vec![0.02, 0.005],
        tau_divisor: 10.0 * k * k + 2.0,
        delta: 1e-8,
        drop_cap: 0.05 * k,
        record_stride: 64,
        balance_tol: 1e-8,
        two_speed: TwoSpeedParams {
            fast: FastParams { tau: 2e-6, theta_max: 1.0, ..Default::default() },
            ..Default::default()
        },
    }
}

/// Plateau scenario: fast transient to the plateau edge, rate-independent
/// slide to the far well, rest.
pub fn ex27() -> Scenario {
    Scenario {
        name: "ex27".into(),
        description: "plateau density under unit loading: one fast transient (0 to 1/4) then a \
                      slide (1/4 to 1) inside the initial-time jump"
            .into(),
        problem: scalar_problem(
            EnergyDensity::bump_ex27(),
            Loading::constant(vec![1.0]),
            DissipationPotential::absolute_value(),
        ),
        u0: Field(vec![0.0]),
        horizon: 0.5,
        lambdas: vec![5e-6, 2.5e-6],
        tau_divisor: 10.0,
        delta: 4e-4,
        drop_cap: 0.0625,
        record_stride: 16,
        balance_tol: 1e-8,
        two_speed: TwoSpeedParams {
            fast: FastParams { tau: 1e-4, theta_max: 20.0, ..Default::default() },
            ..Default::default()
        },
    }
}

/// Two plateaus in sequence: a jump resolving into two ordered transients
/// with slides between them.
pub fn double_bump() -> Scenario {
    let density = EnergyDensity::piecewise(
        vec![0.0, 0.25, 0.5, 0.75, 1.0],
        vec![
            vec![0.0, 0.0, 2.0],
            vec![0.25, -2.0, 4.0],
            vec![0.0],
            vec![2.0, -6.0, 4.0],
            vec![-0.25],
            vec![1.75, -4.0, 2.0],
        ],
        2.0,
        8.0,
        8.0,
    );
    Scenario {
        name: "doublebump".into(),
        description: "two plateau bumps: the initial jump splits into two rate-dependent \
                      transients with rate-independent slides between them"
            .into(),
        problem: scalar_problem(
            density,
            Loading::constant(vec![1.0]),
            DissipationPotential::absolute_value(),
        ),
        u0: Field(vec![0.0]),
        horizon: 0.2,
        lambdas: vec![5e-6, 2.5e-6],
        tau_divisor: 10.0,
        delta: 4e-4,
        drop_cap: 0.05,
        record_stride: 16,
        balance_tol: 1e-8,
        two_speed: TwoSpeedParams {
            fast: FastParams { tau: 1e-4, theta_max: 20.0, ..Default::default() },
            ..Default::default()
        },
    }
}

/// Convex sanity scenario: no jumps, purely absolutely continuous measures.
pub fn quadratic() -> Scenario {
    Scenario {
        name: "quadratic".into(),
        description: "convex single well under a slow ramp: empty jump set, near-identity \
                      reparametrization"
            .into(),
        problem: scalar_problem(
            EnergyDensity::quadratic(1),
            Loading::ramp(vec![0.0], vec![0.3]),
            DissipationPotential::absolute_value(),
        ),
        u0: Field(vec![0.0]),
        horizon: 4.0,
        lambdas: vec![0.05, 0.01],
        tau_divisor: 100.0,
        delta: 1e-8,
        drop_cap: 0.05,
        record_stride: 16,
        balance_tol: 1e-8,
        two_speed: TwoSpeedParams::default(),
    }
}

/// One-dimensional double-well interval under a sine-profile ramp.
pub fn double_well_1d() -> Scenario {
    let grid = SpatialGrid::interval(1, 64, 1.0).unwrap();
    let energy = TotalEnergy::new(
        EnergyDensity::double_well_ex24(),
        Loading { base: vec![0.0], rate: vec![1.0], profile: SpatialProfile::SinePi },
        grid,
    );
    Scenario {
        name: "dw1d".into(),
        description: "64-node interval with componentwise double well and ramping sine load: \
                      smooth sliding regime for residual and refinement checks"
            .into(),
        problem: Problem { energy, dissipation: DissipationPotential::absolute_value() },
        u0: grid.constant_field(&[-1.0]),
        horizon: 2.5,
        lambdas: vec![0.1, 0.05],
        tau_divisor: 100.0,
        delta: 0.0,
        drop_cap: 0.05,
        record_stride: 5,
        balance_tol: 1e-6,
        two_speed: TwoSpeedParams::default(),
    }
}

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "ex24" => Some(ex24()),
        "ex25" => Some(ex25()),
        "ex26" => Some(ex26()),
        "ex27" => Some(ex27()),
        "doublebump" => Some(double_bump()),
        "quadratic" => Some(quadratic()),
        "dw1d" => Some(double_well_1d()),
        _ => None,
    }
}

pub fn names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("ex24", "double well, rate-dependent jump at t = 3"),
        ("ex25", "path-length potential, initial-time slide jump"),
        ("ex26", "guide-curve potential, arclength jump mass"),
        ("ex27", "plateau density, transient plus slide"),
        ("doublebump", "two transients with slides between"),
        ("quadratic", "convex sanity case, no jumps"),
        ("dw1d", "1-D interval double well (smooth regime)"),
    ]
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub scenario: String,
    pub lambdas: Vec<Real>,
    pub solution: TwoSpeedSolution,
    /// Coarsest-to-finest sweep trajectories.
    #[serde(skip)]
    pub sweep: Vec<ViscousTrajectory>,
}

/// Run the sweep (fanning out up to `jobs` threads), assemble, certify.
pub fn run_scenario(scenario: &Scenario, jobs: usize) -> Result<RunArtifacts, SolverError> {
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<ViscousTrajectory, SolverError>>> =
        (0..scenario.lambdas.len()).map(|_| None).collect();
    thread::scope(|scope| {
        let mut handles = Vec::new();
        for (idx, &lambda) in scenario.lambdas.iter().enumerate() {
            let params = scenario.params_for(lambda);
            let problem = &scenario.problem;
            let u0 = &scenario.u0;
            let horizon = scenario.horizon;
            handles.push((idx, scope.spawn(move || run_viscous(problem, &params, u0, horizon))));
            if handles.len() >= jobs {
                let (i, h) = handles.remove(0);
                results[i] = Some(h.join().expect("sweep worker panicked"));
            }
        }
        for (i, h) in handles {
            results[i] = Some(h.join().expect("sweep worker panicked"));
        }
    });
    let mut sweep = Vec::with_capacity(results.len());
    for r in results {
        sweep.push(r.expect("all runs scheduled")?);
    }
    let solution = assemble_two_speed(&scenario.problem, &sweep, &scenario.two_speed)?;
    Ok(RunArtifacts { scenario: scenario.name.clone(), lambdas: scenario.lambdas.clone(), solution, sweep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_names() {
        for (name, _) in names() {
            assert!(by_name(name).is_some(), "{name}");
        }
        assert!(by_name("unknown").is_none());
    }

    #[test]
    fn scenario_params_respect_convexity_gate() {
        for (name, _) in names() {
            let s = by_name(name).unwrap();
            for &lambda in &s.lambdas {
                let p = s.params_for(lambda);
                let mu = s.problem.energy.density.semiconvexity;
                assert!(
                    p.lambda / p.tau > mu + 1.0,
                    "{name}: lambda/tau = {} vs mu + 1 = {}",
                    p.lambda / p.tau,
                    mu + 1.0
                );
            }
        }
    }

    #[test]
    fn quadratic_scenario_runs_clean() {
        let s = quadratic();
        let arts = run_scenario(&s, 2).unwrap();
        assert!(arts.solution.certified, "{:?}", arts.solution.failed_certificates());
        assert!(arts.solution.jumps.is_empty());
    }
}
