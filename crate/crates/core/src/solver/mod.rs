//! Stokes solve and Newton iteration for Navier-Stokes.
//!
//! Every linear solve works on the condensed system. The nonlinear residual
//! is the Euclidean norm of the condensed right-hand side at the current
//! iterate, divided by the same quantity for the Stokes problem at the
//! boundary lifting (or 1 when that vanishes).

use log::{debug, info};
use rayon::prelude::*;

use crate::assembly::{
    assemble_linearized, static_condense, CondensedSystem, Discretization, Linearization, PressureField, State,
    VectorField,
};
use crate::fespace::{norm_1h, HybridVelocity};
use crate::local_ops::ConvectiveForm;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Relative tolerance on the condensed residual.
    pub tol: f64,
    pub max_iter: usize,
    pub form: ConvectiveForm,
    /// Step length of the first trial; 1 is a pure Newton step.
    pub damping: f64,
    /// Halvings allowed when a step fails to reduce the residual.
    pub max_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 1.0,
            tol: 1e-10,
            max_iter: 25,
            form: ConvectiveForm::Hho,
            damping: 1.0,
            max_halvings: 5,
        }
    }
}

impl SolverConfig {
    pub fn with_nu(nu: f64) -> Self {
        SolverConfig {
            nu,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::invalid(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if let ConvectiveForm::Hdg { eta } = self.form {
            ConvectiveForm::hdg(eta)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    /// Linear solves performed, the initial Stokes solve included.
    pub iterations: usize,
    /// Relative residual at each iterate.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Step halvings over the whole run.
    pub halvings: usize,
    /// `||u_h||_{1,h}`.
    pub velocity_norm: f64,
    /// `||p_h||_{L2}`.
    pub pressure_norm: f64,
    /// `nu a_h(u_h, u_h)`.
    pub viscous_energy: f64,
    /// `int f . u_h`.
    pub forcing_work: f64,
    /// `|nu a_h(u_h, u_h) - int f . u_h|`; vanishes up to the tolerance for
    /// homogeneous boundary data.
    pub energy_defect: f64,
    /// Largest entry of `B u_h` tested against zero-mean pressures.
    pub mass_residual: f64,
    pub multiplier: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub velocity: HybridVelocity,
    pub pressure: PressureField,
    pub multiplier: f64,
    pub report: SolveReport,
}

struct Iterate {
    state: State,
    system: CondensedSystem,
    residual: f64,
    /// Norm of the uncondensed residual, used to accept damped steps.
    merit: f64,
}

fn linearize(
    disc: &Discretization,
    state: State,
    loads: &[nalgebra::DVector<f64>],
    lin: Linearization,
    scale: f64,
) -> Result<Iterate> {
    let sys = assemble_linearized(disc, &state, loads, lin)?;
    let system = static_condense(disc, &sys)?;
    let residual = system.rhs_norm() / scale;
    Ok(Iterate {
        merit: sys.residual_norm(disc),
        state,
        system,
        residual,
    })
}

fn step(disc: &Discretization, it: &Iterate, alpha: f64) -> Result<State> {
    let ds = it.system.solve()?;
    let inc = it.system.recover_local(disc, &ds)?;
    let mut state = it.state.clone();
    state.velocity.axpy(alpha, &inc.velocity);
    state.pressure.axpy(alpha, &inc.pressure);
    state.multiplier += alpha * inc.multiplier;
    Ok(state)
}

/// Solves the Stokes problem; returns the solution state and the residual
/// scale used for Newton.
fn stokes_state(
    disc: &Discretization,
    config: &SolverConfig,
    loads: &[nalgebra::DVector<f64>],
    g: VectorField,
) -> Result<(State, f64, Vec<f64>)> {
    let state = State {
        velocity: disc.boundary_lifting(g),
        pressure: PressureField::zeros(disc.dofmap.num_elements, disc.spec()),
        multiplier: 0.0,
    };
    let lin = Linearization {
        nu: config.nu,
        convection: None,
    };
    let first = linearize(disc, state, loads, lin, 1.0)?;
    let scale = if first.residual > 0.0 { first.residual } else { 1.0 };
    let solved = step(disc, &first, 1.0)?;
    let check = linearize(disc, solved, loads, lin, scale)?;
    Ok((check.state, scale, vec![first.residual / scale, check.residual]))
}

fn finish(disc: &Discretization, config: &SolverConfig, loads: &[nalgebra::DVector<f64>], state: State, mut report: SolveReport) -> Solution {
    let u = &state.velocity;
    let viscous_energy = config.nu * disc.viscous_form(u, u);
    let forcing_work: f64 = disc
        .space
        .elements
        .iter()
        .zip(loads)
        .map(|(es, l)| {
            u.element_block(es.index)
                .iter()
                .zip(l.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .sum();
    // B u tested against zero-mean pressures: remove the component along the
    // element-mean direction m.
    let bu: Vec<nalgebra::DVector<f64>> = disc
        .space
        .elements
        .par_iter()
        .zip(&disc.packs)
        .map(|(es, pack)| &pack.coupling * u.local(es))
        .collect();
    let weights: Vec<f64> = disc.space.elements.iter().map(|es| es.area.sqrt()).collect();
    let mm: f64 = weights.iter().map(|w| w * w).sum();
    let mb: f64 = bu.iter().zip(&weights).map(|(b, w)| b[0] * w).sum();
    let mut mass_residual: f64 = 0.0;
    for (b, w) in bu.iter().zip(&weights) {
        mass_residual = mass_residual.max((b[0] - mb / mm * w).abs());
        for v in b.iter().skip(1) {
            mass_residual = mass_residual.max(v.abs());
        }
    }
    report.velocity_norm = norm_1h(u, &disc.space);
    report.pressure_norm = state.pressure.l2_norm();
    report.viscous_energy = viscous_energy;
    report.forcing_work = forcing_work;
    report.energy_defect = (viscous_energy - forcing_work).abs();
    report.mass_residual = mass_residual;
    report.multiplier = state.multiplier;
    Solution {
        velocity: state.velocity,
        pressure: state.pressure,
        multiplier: state.multiplier,
        report,
    }
}

/// Stokes problem `nu a_h(u, v) + b_h(v, p) - b_h(u, q) = int f . v` with
/// `u = pi_F^k g` on boundary faces.
pub fn solve_stokes(disc: &Discretization, config: &SolverConfig, f: VectorField, g: VectorField) -> Result<Solution> {
    config.validate()?;
    let loads = disc.load(f);
    let (state, _, history) = stokes_state(disc, config, &loads, g)?;
    let report = SolveReport {
        iterations: 1,
        converged: true,
        residual_history: history,
        ..Default::default()
    };
    Ok(finish(disc, config, &loads, state, report))
}

/// Newton iteration from the Stokes solution.
pub fn solve_navier_stokes(
    disc: &Discretization,
    config: &SolverConfig,
    f: VectorField,
    g: VectorField,
) -> Result<Solution> {
    config.validate()?;
    let loads = disc.load(f);
    let (state, scale, _) = stokes_state(disc, config, &loads, g)?;
    newton(disc, config, &loads, state, scale, 1)
}

/// Newton iteration from a given velocity; its boundary values are reset to
/// `pi_F^k g` and the pressure starts at zero. The residual is scaled as in
/// [`solve_navier_stokes`], whose Stokes solve is performed but not used as
/// the initial guess.
pub fn solve_navier_stokes_from(
    disc: &Discretization,
    config: &SolverConfig,
    f: VectorField,
    g: VectorField,
    initial: &HybridVelocity,
) -> Result<Solution> {
    config.validate()?;
    let loads = disc.load(f);
    let (_, scale, _) = stokes_state(disc, config, &loads, g)?;
    let mut velocity = initial.clone();
    crate::fespace::interpolate_boundary(&mut velocity, g, &disc.space);
    let state = State {
        velocity,
        pressure: PressureField::zeros(disc.dofmap.num_elements, disc.spec()),
        multiplier: 0.0,
    };
    newton(disc, config, &loads, state, scale, 0)
}

fn newton(
    disc: &Discretization,
    config: &SolverConfig,
    loads: &[nalgebra::DVector<f64>],
    state: State,
    scale: f64,
    solves: usize,
) -> Result<Solution> {
    let lin = Linearization {
        nu: config.nu,
        convection: Some(config.form),
    };
    let mut report = SolveReport {
        iterations: solves,
        ..Default::default()
    };
    let mut it = linearize(disc, state, loads, lin, scale)?;
    report.residual_history.push(it.residual);
    debug!("newton initial residual {:.3e}", it.residual);
    loop {
        if it.residual < config.tol {
            report.converged = true;
            break;
        }
        if report.iterations >= config.max_iter || !it.residual.is_finite() {
            break;
        }
        let mut alpha = config.damping;
        let mut halvings = 0;
        let next = loop {
            let trial = linearize(disc, step(disc, &it, alpha)?, loads, lin, scale)?;
            if trial.merit < it.merit || halvings == config.max_halvings {
                break trial;
            }
            alpha *= 0.5;
            halvings += 1;
        };
        report.halvings += halvings;
        report.iterations += 1;
        it = next;
        report.residual_history.push(it.residual);
        debug!("newton step {}: residual {:.3e} (length {alpha})", report.iterations, it.residual);
    }
    let solution = finish(disc, config, loads, it.state, report);
    if !solution.report.converged {
        return Err(Error::Diverged {
            report: Box::new(solution.report),
        });
    }
    info!(
        "converged in {} iterations, residual {:.3e}",
        solution.report.iterations,
        solution.report.final_residual()
    );
    Ok(solution)
}

/// Norms entering the a priori bounds, for homogeneous boundary data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriDiagnostics {
    pub velocity_norm: f64,
    pub pressure_norm: f64,
    pub forcing_norm: f64,
    /// `nu ||u_h||_{1,h} / ||f||`, `None` when `f = 0`.
    pub velocity_ratio: Option<f64>,
    /// `||p_h|| / ||f||`, `None` when `f = 0`.
    pub pressure_ratio: Option<f64>,
}

/// Reports the ratios bounded by the a priori estimates; the constants are
/// unknown, so nothing is flagged.
pub fn apriori_check(disc: &Discretization, solution: &Solution, nu: f64, f: VectorField) -> AprioriDiagnostics {
    let velocity_norm = norm_1h(&solution.velocity, &disc.space);
    let pressure_norm = solution.pressure.l2_norm();
    let forcing_norm = disc
        .space
        .elements
        .par_iter()
        .map(|es| {
            es.quad.integrate(|p| {
                let v = f(p);
                v[0] * v[0] + v[1] * v[1]
            })
        })
        .sum::<f64>()
        .sqrt();
    let ratio = |x: f64| (forcing_norm > 0.0).then(|| x / forcing_norm);
    let d = AprioriDiagnostics {
        velocity_norm,
        pressure_norm,
        forcing_norm,
        velocity_ratio: ratio(nu * velocity_norm),
        pressure_ratio: ratio(pressure_norm),
    };
    info!(
        "a priori: h = {:.3e}, |u|_1h = {:.3e}, |p| = {:.3e}, |f| = {:.3e}",
        disc.mesh().meshsize(),
        velocity_norm,
        pressure_norm,
        forcing_norm
    );
    d
}
