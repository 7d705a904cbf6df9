//! Implicit Euler, first-order upwind tracer transport on a frozen flow field.
//!
//! The step solves `(S/dt + U) c_new = S/dt c_old + b_in`, where `S` is the storage
//! `eps * phi * measure` per unknown and `U` collects outflow on the diagonal and
//! upstream inflow off the diagonal, over the same connections the flow used. The
//! diagonal carries the larger of a cell's total outflow and total inflow, which is
//! the outflow for an exactly balanced flow field.

use thiserror::Error;

use crate::flow::{FlowDiscretization, FlowSolution};
use crate::sparse::{GeneralSolver, SparseError, TripletBuilder};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("invalid storage for unknown {dof}: {value}")]
    InvalidStorage { dof: usize, value: f64 },
    #[error("flow field is not conservative at unknown {dof} (imbalance {imbalance:e}, flux scale {scale:e})")]
    NonConservative { dof: usize, imbalance: f64, scale: f64 },
    #[error("input size mismatch: {0}")]
    Mismatch(String),
    #[error("linear solve failed at step {step}: {source}")]
    Solve { step: usize, source: SparseError },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Relative per-cell flux imbalance accepted from the flow solver.
pub const CONSERVATION_TOLERANCE: f64 = 1e-6;

/// Upwind value across a connection oriented from `a` to `b`.
pub fn upwind_value(flux: f64, c_a: f64, c_b: f64) -> f64 {
    if flux > 0.0 {
        c_a
    } else if flux < 0.0 {
        c_b
    } else {
        0.0
    }
}

/// Concentrations at one time level, in the flow unknown ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportState {
    pub time: f64,
    pub c: Vec<f64>,
}

/// Per-step tracer budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// Total stored tracer `sum S c`.
    pub mass: f64,
    /// Tracer entering through boundaries during the step (rate).
    pub inflow: f64,
    /// Tracer leaving through boundaries during the step (rate).
    pub outflow: f64,
    /// `|mass_new - mass_old - dt (inflow - outflow)|` relative to the larger of the
    /// stored mass and the exchanged amount.
    pub budget_error: f64,
}

/// Assembled implicit Euler step operator.
pub struct TransportSystem {
    pub dt: f64,
    pub storage: Vec<f64>,
    /// Inflow load per unknown (rate of tracer entering through boundary faces).
    pub load: Vec<f64>,
    /// Outward flux per boundary connection that leaves the domain, zero otherwise.
    pub boundary_outflow: Vec<f64>,
    solver: GeneralSolver,
}

impl TransportSystem {
    pub fn matrix(&self) -> &crate::sparse::CsrMatrix {
        self.solver.matrix()
    }

    pub fn solver_method(&self) -> &'static str {
        self.solver.method()
    }

    fn outflow_rate(&self, disc_boundary_dofs: &[usize], c: &[f64]) -> f64 {
        disc_boundary_dofs.iter().zip(&self.boundary_outflow).map(|(&i, q)| q * c[i]).sum()
    }

    /// Advances one step.
    pub fn step(&self, c_old: &[f64]) -> Result<Vec<f64>, SparseError> {
        let b: Vec<f64> =
            c_old.iter().zip(&self.storage).zip(&self.load).map(|((c, s), l)| s / self.dt * c + l).collect();
        self.solver.solve(&b)
    }
}

/// Assembles the step operator.
///
/// `storage` is `eps * phi * measure` per unknown; `inflow_concentration` gives the
/// prescribed concentration for each boundary connection (only used where the flux
/// enters the domain).
pub fn assemble_transport(
    disc: &FlowDiscretization,
    flow: &FlowSolution,
    storage: Vec<f64>,
    inflow_concentration: impl Fn(usize) -> f64,
    dt: f64,
) -> Result<TransportSystem, TransportError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(TransportError::InvalidTimeStep(dt));
    }
    let n = disc.num_dofs();
    if storage.len() != n {
        return Err(TransportError::Mismatch(format!("{} storage values for {n} unknowns", storage.len())));
    }
    if let Some((dof, &value)) = storage.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(TransportError::InvalidStorage { dof, value });
    }
    check_conservative(disc, flow)?;

    let mut builder = TripletBuilder::with_capacity(n, n, 2 * n + 2 * disc.connections.len());
    for (i, s) in storage.iter().enumerate() {
        builder.push(i, i, s / dt);
    }
    let mut inflow = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    for (c, &q) in disc.connections.iter().zip(&flow.connection_flux) {
        let (up, down) = if q > 0.0 { (c.from, c.to) } else { (c.to, c.from) };
        let q = q.abs();
        if q > 0.0 {
            builder.push(up, up, q);
            builder.push(down, up, -q);
            outflow[up] += q;
            inflow[down] += q;
        }
    }
    let mut load = vec![0.0; n];
    let mut boundary_outflow = vec![0.0; disc.boundary.len()];
    for (k, (b, &q)) in disc.boundary.iter().zip(&flow.boundary_flux).enumerate() {
        if q > 0.0 {
            builder.push(b.dof, b.dof, q);
            boundary_outflow[k] = q;
            outflow[b.dof] += q;
        } else if q < 0.0 {
            load[b.dof] += -q * inflow_concentration(k);
            inflow[b.dof] -= q;
        }
    }
    // a cell whose inflow exceeds its outflow by solver rounding would otherwise
    // accumulate above the upstream values
    for i in 0..n {
        if inflow[i] > outflow[i] {
            builder.push(i, i, inflow[i] - outflow[i]);
        }
    }
    let solver = GeneralSolver::new(builder.build(), 1e-13, 10 * n + 1000)?;
    Ok(TransportSystem { dt, storage, load, boundary_outflow, solver })
}

fn check_conservative(disc: &FlowDiscretization, flow: &FlowSolution) -> Result<(), TransportError> {
    let n = disc.num_dofs();
    let mut scale = vec![0.0f64; n];
    for (c, q) in disc.connections.iter().zip(&flow.connection_flux) {
        scale[c.from] += q.abs();
        scale[c.to] += q.abs();
    }
    for (b, q) in disc.boundary.iter().zip(&flow.boundary_flux) {
        scale[b.dof] += q.abs();
    }
    for (i, q) in disc.sources.iter().enumerate() {
        scale[i] += q.abs();
        if *q != 0.0 {
            return Err(TransportError::Mismatch("transport with volumetric sources is not supported".into()));
        }
    }
    let global = scale.iter().copied().fold(0.0, f64::max);
    for (dof, r) in flow.cell_imbalance(disc).into_iter().enumerate() {
        let s = scale[dof].max(1e-3 * global);
        if r.abs() > CONSERVATION_TOLERANCE * s && s > 0.0 {
            return Err(TransportError::NonConservative { dof, imbalance: r, scale: s });
        }
    }
    Ok(())
}

/// Trajectory of a transport run, including the initial state.
#[derive(Debug, Clone)]
pub struct TransportRun {
    pub states: Vec<TransportState>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Runs `nsteps` implicit Euler steps from `initial`.
pub fn run_transport(
    system: &TransportSystem,
    disc: &FlowDiscretization,
    initial: TransportState,
    nsteps: usize,
) -> Result<TransportRun, TransportError> {
    if initial.c.len() != system.storage.len() {
        return Err(TransportError::Mismatch("initial state has the wrong length".into()));
    }
    let boundary_dofs: Vec<usize> = disc.boundary.iter().map(|b| b.dof).collect();
    let inflow: f64 = system.load.iter().sum();
    let mass_of = |c: &[f64]| -> f64 { c.iter().zip(&system.storage).map(|(c, s)| c * s).sum() };
    let mut states = Vec::with_capacity(nsteps + 1);
    let mut diagnostics = Vec::with_capacity(nsteps);
    let mut mass = mass_of(&initial.c);
    states.push(initial);
    for step in 1..=nsteps {
        let prev = states.last().expect("trajectory starts with the initial state");
        let c = system.step(&prev.c).map_err(|source| TransportError::Solve { step, source })?;
        let time = step as f64 * system.dt;
        let new_mass = mass_of(&c);
        let outflow = system.outflow_rate(&boundary_dofs, &c);
        let exchanged = system.dt * (inflow - outflow);
        let scale = new_mass.abs().max(mass.abs()).max(system.dt * (inflow + outflow));
        let budget_error = if scale > 0.0 { (new_mass - mass - exchanged).abs() / scale } else { 0.0 };
        diagnostics.push(StepDiagnostics { step, time, mass: new_mass, inflow, outflow, budget_error });
        mass = new_mass;
        states.push(TransportState { time, c });
    }
    Ok(TransportRun { states, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{assemble_flow, solve_flow, ConductivityField, FaceBc, FlowBc, IntersectionModel};
    use crate::geometry::{isotropic, BoundingBox};
    use crate::mesh_io::{cartesian_dfm_mesher, Lattice};

    #[test]
    fn upwind_picks_upstream() {
        assert_eq!(upwind_value(2.0, 1.0, 0.0), 1.0);
        assert_eq!(upwind_value(-2.0, 1.0, 0.0), 0.0);
        assert_eq!(upwind_value(0.0, 1.0, 3.0), 0.0);
    }

    fn column(n: usize) -> (FlowDiscretization, FlowSolution) {
        let lattice = Lattice { domain: BoundingBox::new([0.0; 3], [n as f64, 1.0, 1.0]), cells: [n, 1, 1] };
        let grid = cartesian_dfm_mesher(&lattice, &[], |_| 0).unwrap();
        let cond = ConductivityField::from_fn(&grid, |_, _| isotropic(1.0), |_, _| 1.0);
        let bc = FlowBc::from_fn(&grid, |d, f| {
            let x = grid.subdomains[d].faces[f].centroid[0];
            if x < 1e-12 {
                FaceBc::Flux(-1.0)
            } else if x > n as f64 - 1e-12 {
                FaceBc::Head(0.0)
            } else {
                FaceBc::NoFlux
            }
        });
        let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).unwrap();
        let sol = solve_flow(&disc, 1e-13).unwrap();
        (disc, sol)
    }

    #[test]
    fn single_cell_step() {
        let (disc, sol) = column(1);
        let sys = assemble_transport(&disc, &sol, vec![1.0], |_| 1.0, 1.0).unwrap();
        let c = sys.step(&[0.0]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mass_budget_telescopes() {
        let (disc, sol) = column(10);
        let sys = assemble_transport(&disc, &sol, vec![0.3; 10], |_| 1.0, 0.7).unwrap();
        assert_eq!(sys.solver_method(), "ordered-substitution");
        let run = run_transport(&sys, &disc, TransportState { time: 0.0, c: vec![0.0; 10] }, 20).unwrap();
        for d in &run.diagnostics {
            assert!(d.budget_error < 1e-12, "{d:?}");
        }
        for s in &run.states {
            assert!(s.c.iter().all(|&c| (0.0..=1.0 + 1e-12).contains(&c)));
        }
    }

    #[test]
    fn rejects_bad_time_step() {
        let (disc, sol) = column(2);
        assert!(matches!(
            assemble_transport(&disc, &sol, vec![1.0; 2], |_| 1.0, 0.0),
            Err(TransportError::InvalidTimeStep(_))
        ));
    }
}
