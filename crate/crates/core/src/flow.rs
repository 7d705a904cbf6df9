//! Two-point flux approximation of the mixed-dimensional flow problem.
//!
//! Every cell of every dimension carries one head unknown. Cells talk to each other
//! through [`Connection`]s: tangential faces inside a subdomain, and interface pairs
//! between a `(d+1)`-dimensional face and the `d`-dimensional cell it sits on. The
//! flux across a connection is `trans * (h[from] - h[to])`. Transport reuses the same
//! connection list, so both problems see the same geometry.

use thiserror::Error;

use crate::geometry::{dot, mat_vec, sub, Tensor3};
use crate::mdgrid::{FaceKind, MixedDimGrid};
use crate::sparse::{solve_spd, CsrMatrix, SolveStats, SparseError, TripletBuilder, DEFAULT_TOLERANCE};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate geometry in dimension {dim}, cell {cell}, face {face}")]
    Degenerate { dim: usize, cell: usize, face: usize },
    #[error("no head (Dirichlet) boundary face: the system is singular")]
    NoDirichlet,
    #[error("input size mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Tangential effective conductivity `K_d = eps_d * K_eq`.
pub fn effective_tangential(k_eq: f64, eps: f64) -> Result<f64, FlowError> {
    if !(k_eq > 0.0 && eps > 0.0) {
        return Err(FlowError::InvalidParameter(format!("K_eq = {k_eq}, eps = {eps}")));
    }
    Ok(eps * k_eq)
}

/// Normal effective conductivity `kappa_d = eps_{d+1} * (2 / a_d) * kappa_eq`.
pub fn effective_normal(kappa_eq: f64, eps_high: f64, a_low: f64) -> Result<f64, FlowError> {
    if !(kappa_eq > 0.0 && eps_high > 0.0 && a_low > 0.0) {
        return Err(FlowError::InvalidParameter(format!(
            "kappa_eq = {kappa_eq}, eps_high = {eps_high}, a_low = {a_low}"
        )));
    }
    Ok(eps_high * 2.0 / a_low * kappa_eq)
}

/// Conductance between a cell centroid and one of its faces:
/// `measure * (n . K . d) / |d|^2` with `d` the centroid-to-face vector.
pub fn half_transmissibility(
    cell_centroid: [f64; 3],
    face_centroid: [f64; 3],
    normal: [f64; 3],
    measure: f64,
    k: &Tensor3,
) -> Option<f64> {
    let d = sub(face_centroid, cell_centroid);
    let dd = dot(d, d);
    let t = measure * dot(normal, mat_vec(k, d)) / dd;
    (dd > 0.0 && t > 0.0 && t.is_finite()).then_some(t)
}

/// Harmonic combination of two half transmissibilities.
pub fn harmonic(t1: f64, t2: f64) -> f64 {
    if t1 == 0.0 || t2 == 0.0 {
        0.0
    } else {
        t1 * t2 / (t1 + t2)
    }
}

/// Series combination of the higher-dimensional half transmissibility with the
/// interfacial conductance `area * kappa`.
pub fn interface_transmissibility(t_high: f64, area: f64, kappa: f64) -> Result<f64, FlowError> {
    if !(kappa > 0.0) {
        return Err(FlowError::InvalidParameter(format!("normal conductivity {kappa} must be positive")));
    }
    let c = area * kappa;
    Ok(if t_high.is_infinite() { c } else { harmonic(t_high, c) })
}

/// Effective conductivities for every cell and interface.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityField {
    /// Tangential tensor per cell, indexed by dimension (dimension 0 is unused).
    pub tangential: [Vec<Tensor3>; 4],
    /// Normal conductivity per low-dimensional cell of `Γ_d`, indexed by `d`.
    pub normal: [Vec<f64>; 3],
}

impl ConductivityField {
    /// Builds the field from per-cell callbacks `(dim, cell) -> K` and `(d, cell) -> kappa`.
    pub fn from_fn(
        grid: &MixedDimGrid,
        tangential: impl Fn(usize, usize) -> Tensor3,
        normal: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let tangential = [0, 1, 2, 3].map(|d| (0..grid.subdomains[d].num_cells()).map(|c| tangential(d, c)).collect());
        let normal = [0, 1, 2].map(|d| (0..grid.subdomains[d].num_cells()).map(|c| normal(d, c)).collect());
        ConductivityField { tangential, normal }
    }
}

/// Boundary condition on one face of some subdomain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceBc {
    /// Prescribed head (m).
    Head(f64),
    /// Prescribed normal velocity `u . n` (m/s, positive outward); the face carries
    /// `eps_d * u * measure`.
    Flux(f64),
    NoFlux,
}

/// Boundary conditions for every face of every subdomain. Only faces of kind
/// [`FaceKind::Domain`] are consulted; fracture tips are always no-flux.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBc {
    pub faces: [Vec<FaceBc>; 4],
}

impl FlowBc {
    pub fn from_fn(grid: &MixedDimGrid, f: impl Fn(usize, usize) -> FaceBc) -> Self {
        let faces = [0, 1, 2, 3].map(|d| {
            let g = &grid.subdomains[d];
            (0..g.faces.len())
                .map(|i| if g.faces[i].kind == FaceKind::Domain { f(d, i) } else { FaceBc::NoFlux })
                .collect()
        });
        FlowBc { faces }
    }
}

/// How intersection lines and points enter the discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntersectionModel {
    /// Lines and points carry their own unknowns, storage and tangential flow.
    #[default]
    Resolved,
    /// Lines and points are removed; fracture cells meeting at a line are connected
    /// pairwise by a star-delta transform of their half transmissibilities.
    Condensed,
}

/// Unknown numbering: matrix cells first, then fractures, lines, points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub offsets: [usize; 4],
    pub counts: [usize; 4],
}

impl DofMap {
    fn new(counts: [usize; 4]) -> Self {
        let mut offsets = [0; 4];
        let mut next = 0;
        for d in [3, 2, 1, 0] {
            offsets[d] = next;
            next += counts[d];
        }
        DofMap { offsets, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn global(&self, dim: usize, cell: usize) -> Option<usize> {
        (cell < self.counts[dim]).then(|| self.offsets[dim] + cell)
    }

    /// Inverse of [`DofMap::global`].
    pub fn local(&self, dof: usize) -> (usize, usize) {
        for d in 0..4 {
            if dof >= self.offsets[d] && dof < self.offsets[d] + self.counts[d] {
                return (d, dof - self.offsets[d]);
            }
        }
        panic!("dof {dof} out of range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionOrigin {
    /// Interior face `face` of the subdomain of dimension `dim`.
    Face { dim: usize, face: usize },
    /// Interface pair `pair` of `Γ_dim_low`.
    Interface { dim_low: usize, pair: usize },
    /// Star-delta link between two fracture cells around intersection line `line`.
    Condensed { line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub from: usize,
    pub to: usize,
    pub trans: f64,
    pub origin: ConnectionOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Dirichlet {
        head: f64,
    },
    /// Fixed outward volumetric flux (m^3/s).
    Neumann {
        flux: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConnection {
    pub dof: usize,
    pub dim: usize,
    pub face: usize,
    /// Half transmissibility between the cell centroid and the face.
    pub trans: f64,
    pub kind: BoundaryKind,
}

/// Assembled flow problem.
#[derive(Debug, Clone)]
pub struct FlowDiscretization {
    pub dofs: DofMap,
    pub connections: Vec<Connection>,
    pub boundary: Vec<BoundaryConnection>,
    /// Integrated source per dof (m^3/s).
    pub sources: Vec<f64>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub model: IntersectionModel,
}

impl FlowDiscretization {
    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }
}

fn half_or_err(grid: &MixedDimGrid, k: &[Tensor3], dim: usize, cell: usize, face: usize) -> Result<f64, FlowError> {
    let g = &grid.subdomains[dim];
    let f = &g.faces[face];
    let c = &g.cells[cell];
    // the face normal points out of `f.cell`; flip for the neighbor
    let normal = if f.cell == cell { f.normal } else { f.normal.map(|v| -v) };
    half_transmissibility(c.centroid, f.centroid, normal, f.measure, &k[cell]).ok_or(FlowError::Degenerate {
        dim,
        cell,
        face,
    })
}

/// Assembles the symmetric positive definite flow system.
///
/// `sources` holds integrated source rates per cell and dimension (m^3/s); pass `None`
/// for a source-free problem.
pub fn assemble_flow(
    grid: &MixedDimGrid,
    cond: &ConductivityField,
    bc: &FlowBc,
    sources: Option<&[Vec<f64>; 4]>,
    model: IntersectionModel,
) -> Result<FlowDiscretization, FlowError> {
    let mut counts = grid.cell_counts();
    if model == IntersectionModel::Condensed {
        counts[0] = 0;
        counts[1] = 0;
    }
    for d in 0..4 {
        let n = grid.subdomains[d].num_cells();
        if d > 0 && cond.tangential[d].len() != n {
            return Err(FlowError::Mismatch(format!(
                "{} tangential values for {n} cells in dim {d}",
                cond.tangential[d].len()
            )));
        }
        if d < 3 && cond.normal[d].len() != n {
            return Err(FlowError::Mismatch(format!(
                "{} normal values for {n} cells in dim {d}",
                cond.normal[d].len()
            )));
        }
        if bc.faces[d].len() != grid.subdomains[d].faces.len() {
            return Err(FlowError::Mismatch(format!("boundary conditions do not cover the faces of dim {d}")));
        }
    }
    let dofs = DofMap::new(counts);
    let mut connections = Vec::new();
    let mut boundary = Vec::new();

    for d in 1..4 {
        if dofs.counts[d] == 0 {
            continue;
        }
        let g = &grid.subdomains[d];
        let k = &cond.tangential[d];
        for (fi, f) in g.faces.iter().enumerate() {
            match f.kind {
                FaceKind::Interior => {
                    let nb = f.neighbor.expect("interior face has a neighbor");
                    let t1 = half_or_err(grid, k, d, f.cell, fi)?;
                    let t2 = half_or_err(grid, k, d, nb, fi)?;
                    connections.push(Connection {
                        from: dofs.offsets[d] + f.cell,
                        to: dofs.offsets[d] + nb,
                        trans: harmonic(t1, t2),
                        origin: ConnectionOrigin::Face { dim: d, face: fi },
                    });
                }
                FaceKind::Domain => {
                    let kind = match bc.faces[d][fi] {
                        FaceBc::Head(h) => BoundaryKind::Dirichlet { head: h },
                        FaceBc::Flux(u) => BoundaryKind::Neumann { flux: g.aperture[f.cell] * u * f.measure },
                        FaceBc::NoFlux => continue,
                    };
                    boundary.push(BoundaryConnection {
                        dof: dofs.offsets[d] + f.cell,
                        dim: d,
                        face: fi,
                        trans: half_or_err(grid, k, d, f.cell, fi)?,
                        kind,
                    });
                }
                FaceKind::Interface { .. } | FaceKind::Tip => {}
            }
        }
    }

    for dl in 0..3 {
        let high = &grid.subdomains[dl + 1];
        if dofs.counts[dl + 1] == 0 {
            continue;
        }
        let condensed = dofs.counts[dl] == 0;
        if condensed && dl != 1 {
            continue;
        }
        let mut star: Vec<Vec<(usize, f64)>> =
            vec![Vec::new(); if condensed { grid.subdomains[dl].num_cells() } else { 0 }];
        for (p, pair) in grid.interfaces[dl].pairs.iter().enumerate() {
            let f = &high.faces[pair.high_face];
            let t_high = half_or_err(grid, &cond.tangential[dl + 1], dl + 1, f.cell, pair.high_face)?;
            if condensed {
                star[pair.low_cell].push((dofs.offsets[dl + 1] + f.cell, t_high));
                continue;
            }
            let trans = interface_transmissibility(t_high, pair.area, cond.normal[dl][pair.low_cell])?;
            connections.push(Connection {
                from: dofs.offsets[dl + 1] + f.cell,
                to: dofs.offsets[dl] + pair.low_cell,
                trans,
                origin: ConnectionOrigin::Interface { dim_low: dl, pair: p },
            });
        }
        for (line, arms) in star.iter().enumerate() {
            let total: f64 = arms.iter().map(|a| a.1).sum();
            for i in 0..arms.len() {
                for j in i + 1..arms.len() {
                    connections.push(Connection {
                        from: arms[i].0,
                        to: arms[j].0,
                        trans: arms[i].1 * arms[j].1 / total,
                        origin: ConnectionOrigin::Condensed { line },
                    });
                }
            }
        }
    }

    if !boundary.iter().any(|b| matches!(b.kind, BoundaryKind::Dirichlet { .. })) {
        return Err(FlowError::NoDirichlet);
    }

    let n = dofs.len();
    let mut src = vec![0.0; n];
    if let Some(q) = sources {
        for d in 0..4 {
            if dofs.counts[d] == 0 {
                continue;
            }
            if q[d].len() != dofs.counts[d] {
                return Err(FlowError::Mismatch(format!("sources for dim {d} have wrong length")));
            }
            for (c, v) in q[d].iter().enumerate() {
                src[dofs.offsets[d] + c] = *v;
            }
        }
    }

    let mut builder = TripletBuilder::with_capacity(n, n, n + 4 * connections.len());
    let mut rhs = src.clone();
    for c in &connections {
        builder.push(c.from, c.from, c.trans);
        builder.push(c.to, c.to, c.trans);
        builder.push(c.from, c.to, -c.trans);
        builder.push(c.to, c.from, -c.trans);
    }
    for b in &boundary {
        match b.kind {
            BoundaryKind::Dirichlet { head } => {
                builder.push(b.dof, b.dof, b.trans);
                rhs[b.dof] += b.trans * head;
            }
            BoundaryKind::Neumann { flux } => rhs[b.dof] -= flux,
        }
    }
    // keep every unknown on the diagonal, even if fully isolated
    for i in 0..n {
        builder.push(i, i, 0.0);
    }
    let matrix = builder.build();
    Ok(FlowDiscretization { dofs, connections, boundary, sources: src, matrix, rhs, model })
}

/// Heads and fluxes of a solved flow problem.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    /// Head per cell, indexed by dimension. Condensed dimensions are empty.
    pub heads: [Vec<f64>; 4],
    /// Flux per connection, positive from `from` to `to` (m^3/s).
    pub connection_flux: Vec<f64>,
    /// Outward flux per boundary connection (m^3/s).
    pub boundary_flux: Vec<f64>,
    /// Flux per interface pair from the higher- to the lower-dimensional cell.
    pub interface_flux: [Vec<f64>; 3],
    pub stats: SolveStats,
}

impl FlowSolution {
    fn dof_head(&self, dofs: &DofMap, dof: usize) -> f64 {
        let (d, c) = dofs.local(dof);
        self.heads[d][c]
    }

    /// Head reconstructed on a boundary face from its cell head and flux.
    pub fn boundary_face_head(&self, disc: &FlowDiscretization, index: usize) -> f64 {
        let b = &disc.boundary[index];
        match b.kind {
            BoundaryKind::Dirichlet { head } => head,
            BoundaryKind::Neumann { flux } => self.dof_head(&disc.dofs, b.dof) - flux / b.trans,
        }
    }

    /// Sum of outward boundary fluxes minus sources, relative to the total inflow.
    pub fn global_imbalance(&self, disc: &FlowDiscretization) -> f64 {
        let net: f64 = self.boundary_flux.iter().sum::<f64>() - disc.sources.iter().sum::<f64>();
        let inflow: f64 = self.boundary_flux.iter().filter(|&&q| q < 0.0).map(|q| -q).sum::<f64>()
            + disc.sources.iter().filter(|&&q| q > 0.0).sum::<f64>();
        if inflow == 0.0 {
            net.abs()
        } else {
            net.abs() / inflow
        }
    }

    /// Net outflow minus source per dof; zero for an exactly balanced solution.
    pub fn cell_imbalance(&self, disc: &FlowDiscretization) -> Vec<f64> {
        let mut r: Vec<f64> = disc.sources.iter().map(|q| -q).collect();
        for (c, q) in disc.connections.iter().zip(&self.connection_flux) {
            r[c.from] += q;
            r[c.to] -= q;
        }
        for (b, q) in disc.boundary.iter().zip(&self.boundary_flux) {
            r[b.dof] += q;
        }
        r
    }
}

/// Solves the assembled system and reconstructs all fluxes.
pub fn solve_flow(disc: &FlowDiscretization, tol: f64) -> Result<FlowSolution, FlowError> {
    let n = disc.num_dofs();
    let (x, stats) = solve_spd(&disc.matrix, &disc.rhs, tol, 20 * n + 1000)?;
    Ok(flow_solution_from_heads(disc, x, stats))
}

/// Solves with the default relative tolerance.
pub fn solve_flow_default(disc: &FlowDiscretization) -> Result<FlowSolution, FlowError> {
    solve_flow(disc, DEFAULT_TOLERANCE)
}

fn flow_solution_from_heads(disc: &FlowDiscretization, x: Vec<f64>, stats: SolveStats) -> FlowSolution {
    let connection_flux: Vec<f64> = disc.connections.iter().map(|c| c.trans * (x[c.from] - x[c.to])).collect();
    let boundary_flux = disc
        .boundary
        .iter()
        .map(|b| match b.kind {
            BoundaryKind::Dirichlet { head } => b.trans * (x[b.dof] - head),
            BoundaryKind::Neumann { flux } => flux,
        })
        .collect();
    let mut interface_flux: [Vec<f64>; 3] = Default::default();
    let mut pair_counts = [0usize; 3];
    for c in &disc.connections {
        if let ConnectionOrigin::Interface { dim_low, pair } = c.origin {
            pair_counts[dim_low] = pair_counts[dim_low].max(pair + 1);
        }
    }
    for d in 0..3 {
        interface_flux[d] = vec![0.0; pair_counts[d]];
    }
    for (c, q) in disc.connections.iter().zip(&connection_flux) {
        if let ConnectionOrigin::Interface { dim_low, pair } = c.origin {
            interface_flux[dim_low][pair] = *q;
        }
    }
    let heads = [0, 1, 2, 3].map(|d| {
        let o = disc.dofs.offsets[d];
        x[o..o + disc.dofs.counts[d]].to_vec()
    });
    FlowSolution { heads, connection_flux, boundary_flux, interface_flux, stats }
}
