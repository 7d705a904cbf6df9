use crate::flow::{
    assemble_flow, solve_flow, ConductivityField, FaceBc, FlowBc, FlowDiscretization, FlowSolution, IntersectionModel,
};
use crate::geometry::{isotropic, Vec3};
use crate::mdgrid::{validate, MixedDimGrid};
use crate::mesh_io::{cartesian_dfm_mesher, FractureRectangle, Lattice};
use crate::postproc::{
    boundary_tracer_flux, fracture_means, plot_over_line, region_average, region_integral, Field, LineSample,
};
use crate::transport::{assemble_transport, run_transport, TransportRun, TransportState};

use super::{region_id, BenchError, CaseId, CaseSpec, LowerDimBoundary, PatchCondition, PatchRole, REGULAR_FRACTURES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Relative residual target for the flow solve.
    pub solver_tol: f64,
    pub model: IntersectionModel,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { solver_tol: 1e-13, model: IntersectionModel::Resolved }
    }
}

/// File names for one run, relative to the case output folder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub results: String,
    pub dol: Vec<String>,
    pub dot: String,
}

pub fn output_files(case: CaseId, cond: Option<u8>, refinement: usize) -> OutputFiles {
    match case {
        CaseId::Single => OutputFiles {
            results: "results.csv".into(),
            dol: vec![format!("dol_refinement_{refinement}.csv")],
            dot: format!("dot_refinement_{refinement}.csv"),
        },
        CaseId::Regular => {
            let c = cond.unwrap_or(0);
            OutputFiles {
                results: format!("results_cond_{c}.csv"),
                dol: vec![format!("dol_cond_{c}_refinement_{refinement}.csv")],
                dot: format!("dot_cond_{c}.csv"),
            }
        }
        CaseId::SmallFeatures => OutputFiles {
            results: "results.csv".into(),
            dol: (0..2).map(|l| format!("dol_line_{l}_refinement_{refinement}.csv")).collect(),
            dot: format!("dot_refinement_{refinement}.csv"),
        },
        CaseId::Field => OutputFiles {
            results: "results.csv".into(),
            dol: (0..2).map(|l| format!("dol_line_{l}.csv")).collect(),
            dot: "dot.csv".into(),
        },
    }
}

/// Payloads for the three report files.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub results_row: Vec<Field>,
    /// One entry per dol file, each a list of sampled columns.
    pub dol: Vec<Vec<LineSample>>,
    /// Rows of the dot file, time first, one per time step.
    pub dot_rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    pub num_dofs: usize,
    pub nnz: usize,
    pub flow_iterations: usize,
    pub flow_residual: f64,
    /// `|sum boundary flux| / sum inflow`.
    pub flow_imbalance: f64,
    /// Net flux through all inlet patches (negative for inflow).
    pub inlet_flux: f64,
    /// Net flux through each outlet patch, in patch order.
    pub outlet_flux: Vec<f64>,
    pub head_range: (f64, f64),
    /// Concentration range over all time levels.
    pub concentration_range: (f64, f64),
    pub max_budget_error: f64,
    pub transport_method: &'static str,
}

pub struct CaseOutcome {
    pub spec: CaseSpec,
    pub grid: MixedDimGrid,
    pub conductivity: ConductivityField,
    pub bc: FlowBc,
    pub disc: FlowDiscretization,
    pub flow: FlowSolution,
    /// Storage `eps * phi * measure` per unknown.
    pub storage: Vec<f64>,
    /// Prescribed concentration per boundary connection (zero off the inlets).
    pub inflow_concentration: Vec<f64>,
    pub transport: TransportRun,
    pub report: CaseReport,
    pub diagnostics: RunDiagnostics,
}

/// Builds the lattice grid of the regular case with region tags from the block partition.
pub fn build_regular_grid(spec: &CaseSpec) -> Result<MixedDimGrid, BenchError> {
    let n =
        spec.lattice_cells().ok_or_else(|| BenchError::Config(format!("case {} has no built-in mesh", spec.case)))?;
    let lattice = Lattice::cube(spec.domain, n);
    let fractures: Vec<FractureRectangle> = REGULAR_FRACTURES
        .iter()
        .enumerate()
        .map(|(i, corners)| FractureRectangle { id: i as i32, corners: *corners })
        .collect();
    let grid = cartesian_dfm_mesher(&lattice, &fractures, |p| region_id(p).unwrap_or(-1))?;
    if let Some(c) = grid.subdomains[3].cells.iter().find(|c| c.region_tag < 0) {
        return Err(BenchError::Config(format!("cell at {:?} has no unique region", c.centroid)));
    }
    Ok(grid)
}

/// Per face of every dimension: index of the boundary patch it belongs to.
fn classify_faces(spec: &CaseSpec, grid: &MixedDimGrid) -> [Vec<Option<usize>>; 4] {
    [0, 1, 2, 3].map(|d| {
        grid.subdomains[d]
            .faces
            .iter()
            .map(|f| {
                let active = d == 3 || spec.lower_dim_boundary == LowerDimBoundary::Inherit;
                if f.kind == crate::mdgrid::FaceKind::Domain && active {
                    spec.classify(f.centroid)
                } else {
                    None
                }
            })
            .collect()
    })
}

fn check_parameters(spec: &CaseSpec, grid: &MixedDimGrid) -> Result<(), BenchError> {
    for d in 0..3 {
        if grid.subdomains[d].num_cells() > 0 && spec.features[d].is_none() {
            return Err(BenchError::Config(format!(
                "grid has {d}-dimensional cells but case {} defines none",
                spec.case
            )));
        }
    }
    for c in &grid.subdomains[3].cells {
        if spec.matrix_params(c.region_tag).is_none() {
            return Err(BenchError::Config(format!("no matrix parameters for region tag {}", c.region_tag)));
        }
    }
    Ok(())
}

fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Runs flow and transport for one configuration and assembles the reports.
pub fn run_case(spec: &CaseSpec, mut grid: MixedDimGrid, options: RunOptions) -> Result<CaseOutcome, BenchError> {
    check_parameters(spec, &grid)?;
    let eps = |d: usize| if d == 3 { 1.0 } else { spec.features[d].map_or(1.0, |f| f.aperture) };
    grid.set_apertures([eps(0), eps(1), eps(2), 1.0]);
    let report = validate(&grid);
    if !report.is_valid() {
        return Err(BenchError::invalid_grid(&report));
    }

    let matrix_k = |c: usize| spec.matrix_params(grid.subdomains[3].cells[c].region_tag).map_or(0.0, |p| p.0);
    let matrix_phi = |c: usize| spec.matrix_params(grid.subdomains[3].cells[c].region_tag).map_or(0.0, |p| p.1);
    let cond = ConductivityField::from_fn(
        &grid,
        |d, c| match d {
            3 => isotropic(matrix_k(c)),
            _ => isotropic(spec.features[d].map_or(0.0, |f| f.tangential)),
        },
        |d, _| spec.features[d].map_or(0.0, |f| f.normal),
    );

    let patch_of = classify_faces(spec, &grid);
    let uniform_velocity = match spec.total_inflow {
        Some(total) => {
            let mut weighted_area = 0.0;
            for d in 0..4 {
                for (f, p) in patch_of[d].iter().enumerate() {
                    if p.is_some_and(|k| spec.patches[k].condition == PatchCondition::UniformInflow) {
                        weighted_area += eps(d) * grid.subdomains[d].faces[f].measure;
                    }
                }
            }
            if weighted_area == 0.0 {
                return Err(BenchError::Config("no boundary face lies on an inflow patch".into()));
            }
            Some(total / weighted_area)
        }
        None => None,
    };
    let bc = FlowBc::from_fn(&grid, |d, f| match patch_of[d][f] {
        None => FaceBc::NoFlux,
        Some(k) => match spec.patches[k].condition {
            PatchCondition::Head(h) => FaceBc::Head(h),
            PatchCondition::Velocity(u) => FaceBc::Flux(u),
            PatchCondition::UniformInflow => FaceBc::Flux(uniform_velocity.unwrap_or(0.0)),
        },
    });

    let disc = assemble_flow(&grid, &cond, &bc, None, options.model)?;
    let flow = solve_flow(&disc, options.solver_tol)?;

    // boundary connection -> patch
    let bpatch: Vec<Option<usize>> = disc.boundary.iter().map(|b| patch_of[b.dim][b.face]).collect();
    let is_inlet = |k: usize| bpatch[k].is_some_and(|p| spec.patches[p].role == PatchRole::Inlet);
    let inflow_c = |k: usize| if is_inlet(k) { spec.c_in } else { 0.0 };

    let mut storage = Vec::with_capacity(disc.num_dofs());
    for d in [3, 2, 1, 0] {
        for c in 0..disc.dofs.counts[d] {
            let cell = &grid.subdomains[d].cells[c];
            let phi = if d == 3 { matrix_phi(c) } else { spec.features[d].map_or(0.0, |f| f.porosity) };
            storage.push(grid.subdomains[d].aperture[c] * phi * cell.measure);
        }
    }
    let inflow_concentration: Vec<f64> = (0..disc.boundary.len()).map(inflow_c).collect();
    let system = assemble_transport(&disc, &flow, storage.clone(), |k| inflow_concentration[k], spec.dt)?;
    let initial = TransportState { time: 0.0, c: vec![0.0; disc.num_dofs()] };
    let transport = run_transport(&system, &disc, initial, spec.nsteps)?;

    let patch_flux = |p: usize| -> f64 {
        disc.boundary
            .iter()
            .zip(&flow.boundary_flux)
            .enumerate()
            .filter(|(k, _)| bpatch[*k] == Some(p))
            .map(|(_, (_, q))| q)
            .sum()
    };
    let inlet_flux: f64 =
        (0..spec.patches.len()).filter(|&p| spec.patches[p].role == PatchRole::Inlet).map(patch_flux).sum();
    let outlet_flux: Vec<f64> =
        (0..spec.patches.len()).filter(|&p| spec.patches[p].role == PatchRole::Outlet).map(patch_flux).collect();

    let ctx = ReportContext { spec, grid: &grid, disc: &disc, flow: &flow, transport: &transport, bpatch: &bpatch };
    let report = ctx.report(&outlet_flux)?;

    let diagnostics = RunDiagnostics {
        num_dofs: disc.num_dofs(),
        nnz: disc.nnz(),
        flow_iterations: flow.stats.iterations,
        flow_residual: flow.stats.relative_residual,
        flow_imbalance: flow.global_imbalance(&disc),
        inlet_flux,
        outlet_flux,
        head_range: range(flow.heads.iter().flatten().copied()),
        concentration_range: range(transport.states.iter().flat_map(|s| s.c.iter().copied())),
        max_budget_error: transport.diagnostics.iter().map(|d| d.budget_error).fold(0.0, f64::max),
        transport_method: system.solver_method(),
    };
    Ok(CaseOutcome {
        spec: spec.clone(),
        grid,
        conductivity: cond,
        bc,
        disc,
        flow,
        storage,
        inflow_concentration,
        transport,
        report,
        diagnostics,
    })
}

struct ReportContext<'a> {
    spec: &'a CaseSpec,
    grid: &'a MixedDimGrid,
    disc: &'a FlowDiscretization,
    flow: &'a FlowSolution,
    transport: &'a TransportRun,
    bpatch: &'a [Option<usize>],
}

impl ReportContext<'_> {
    /// Cell values of dimension `d` from a global dof vector.
    fn split(&self, x: &[f64], d: usize) -> Vec<f64> {
        let o = self.disc.dofs.offsets[d];
        x[o..o + self.disc.dofs.counts[d]].to_vec()
    }

    fn report(&self, outlet_flux: &[f64]) -> Result<CaseReport, BenchError> {
        let counts = self.grid.cell_counts();
        let mut row: Vec<Field> = counts.iter().map(|&n| Field::Int(n as i64)).collect();
        row.push(Field::Int(self.disc.num_dofs() as i64));
        row.push(Field::Int(self.disc.nnz() as i64));
        if matches!(self.spec.case, CaseId::SmallFeatures | CaseId::Field) {
            row.extend(outlet_flux.iter().map(|&q| Field::Float(q)));
            row.push(Field::Float(self.mean_inlet_head()?));
        }
        let dol = self.lines()?;
        let dot_rows = self.time_series()?;
        Ok(CaseReport { results_row: row, dol, dot_rows })
    }

    /// Area-weighted mean of the reconstructed matrix heads on inlet faces.
    fn mean_inlet_head(&self) -> Result<f64, BenchError> {
        let (mut num, mut den) = (0.0, 0.0);
        for (k, b) in self.disc.boundary.iter().enumerate() {
            let inlet = self.bpatch[k].is_some_and(|p| self.spec.patches[p].role == PatchRole::Inlet);
            if inlet && b.dim == 3 {
                let a = self.grid.subdomains[3].faces[b.face].measure;
                num += a * self.flow.boundary_face_head(self.disc, k);
                den += a;
            }
        }
        if den == 0.0 {
            return Err(BenchError::Config("no matrix face on the inlet".into()));
        }
        Ok(num / den)
    }

    fn lines(&self) -> Result<Vec<Vec<LineSample>>, BenchError> {
        let h3 = &self.flow.heads[3];
        let last = self.transport.states.last().expect("trajectory is never empty");
        let line = |d: usize, field: &[f64], p0: Vec3, p1: Vec3| plot_over_line(self.grid, d, field, p0, p1);
        Ok(match self.spec.case {
            CaseId::Single => {
                let c3 = self.split(&last.c, 3);
                let c2 = self.split(&last.c, 2);
                let (a0, a1) = ([0.0, 100.0, 100.0], [100.0, 0.0, 0.0]);
                vec![vec![
                    line(3, h3, a0, a1)?,
                    line(3, &c3, a0, a1)?,
                    line(2, &c2, [0.0, 100.0, 80.0], [100.0, 0.0, 20.0])?,
                ]]
            }
            CaseId::Regular => vec![vec![line(3, h3, [0.0; 3], [1.0; 3])?]],
            CaseId::SmallFeatures => vec![
                vec![line(3, h3, [0.5, 1.1, 0.0], [0.5, 1.1, 1.0])?],
                vec![line(3, h3, [0.0, 2.15, 0.5], [1.0, 2.15, 0.5])?],
            ],
            CaseId::Field => vec![
                vec![line(3, h3, [350.0, 100.0, -100.0], [-500.0, 1500.0, 500.0])?],
                vec![line(3, h3, [-500.0, 100.0, -100.0], [350.0, 1500.0, 500.0])?],
            ],
        })
    }

    fn time_series(&self) -> Result<Vec<Vec<f64>>, BenchError> {
        let g3 = &self.grid.subdomains[3];
        let mut rows = Vec::with_capacity(self.spec.nsteps);
        for state in &self.transport.states[1..] {
            let mut row = vec![state.time];
            match self.spec.case {
                CaseId::Single => {
                    let c3 = self.split(&state.c, 3);
                    let c2 = self.split(&state.c, 2);
                    let phi3 = |c: usize| self.spec.matrix_params(g3.cells[c].region_tag).map_or(0.0, |p| p.1);
                    row.push(region_integral(
                        self.grid,
                        3,
                        &c3,
                        phi3,
                        |c| g3.cells[c].region_tag == 3,
                        "matrix region 3",
                    )?);
                    let f = self.spec.features[2].expect("single case defines fracture parameters");
                    let w2 = |c: usize| self.grid.subdomains[2].aperture[c] * f.porosity;
                    row.push(region_integral(self.grid, 2, &c2, w2, |_| true, "fracture")?);
                    let outlet =
                        |k: usize| self.bpatch[k].is_some_and(|p| self.spec.patches[p].role == PatchRole::Outlet);
                    row.push(boundary_tracer_flux(
                        self.disc,
                        self.flow,
                        &state.c,
                        |_| self.spec.c_in,
                        outlet,
                        "outlet",
                    )?);
                }
                CaseId::Regular => {
                    let c3 = self.split(&state.c, 3);
                    for id in 0..super::NUM_REGULAR_REGIONS as i32 {
                        let name = format!("region {id}");
                        row.push(region_average(self.grid, 3, &c3, |_| 1.0, |c| g3.cells[c].region_tag == id, &name)?);
                    }
                }
                CaseId::SmallFeatures | CaseId::Field => {
                    let c2 = self.split(&state.c, 2);
                    let f = self.spec.features[2].expect("network cases define fracture parameters");
                    let w = |c: usize| self.grid.subdomains[2].aperture[c] * f.porosity;
                    row.extend(fracture_means(self.grid, &c2, w, self.spec.fracture_count)?);
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_coarse_counts() {
        let spec = CaseSpec::new(CaseId::Regular, 0, Some(0)).unwrap();
        let grid = build_regular_grid(&spec).unwrap();
        assert_eq!(grid.subdomains[3].num_cells(), 512);
        let regions: std::collections::BTreeSet<i32> = grid.subdomains[3].cells.iter().map(|c| c.region_tag).collect();
        assert_eq!(regions.len(), super::super::NUM_REGULAR_REGIONS);
    }

    #[test]
    fn file_names() {
        let f = output_files(CaseId::Regular, Some(1), 2);
        assert_eq!(
            (f.results.as_str(), f.dol[0].as_str(), f.dot.as_str()),
            ("results_cond_1.csv", "dol_cond_1_refinement_2.csv", "dot_cond_1.csv")
        );
        assert_eq!(output_files(CaseId::Field, None, 0).dol, vec!["dol_line_0.csv", "dol_line_1.csv"]);
    }
}
