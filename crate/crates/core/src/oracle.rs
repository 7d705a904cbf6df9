//! Independent reference computations used to check the mixed-dimensional solver:
//! an equi-dimensional Cartesian TPFA with the fracture resolved as a thin slab, a
//! dense reassembly of the flow system, and a dense transport recursion.
//!
//! Nothing here calls into the flow assembly.

use thiserror::Error;

use crate::flow::{ConductivityField, FaceBc, FlowBc, FlowDiscretization, FlowSolution, IntersectionModel};
use crate::geometry::{dot, isotropic, mat_vec, sub, BoundingBox};
use crate::mdgrid::{FaceKind, MixedDimGrid};
use crate::mesh_io::{cartesian_dfm_mesher, FractureRectangle, Lattice};
use crate::sparse::{solve_dense, solve_spd, SparseError, TripletBuilder};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid oracle setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Which faces of the unit cube carry Dirichlet data in the reference problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlabRegime {
    /// `h = 1` on `x = 0`, `h = 0` on `y = 1`: flow turns into the fracture plane.
    Conductive,
    /// `h = 1` on `x = 0`, `h = 0` on `x = 1`: flow crosses the fracture.
    Blocking,
}

impl SlabRegime {
    /// Dirichlet head on a boundary face with outward axis `axis` and side `hi`.
    pub fn head(self, axis: usize, hi: bool) -> Option<f64> {
        match (self, axis, hi) {
            (_, 0, false) => Some(1.0),
            (SlabRegime::Conductive, 1, true) => Some(0.0),
            (SlabRegime::Blocking, 0, true) => Some(0.0),
            _ => None,
        }
    }
}

/// Unit cube with a fracture slab `|x - 0.5| < eps/2`, resolved by `slab_cells` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabProblem {
    /// Matrix cells per axis; must be even so the slab sits between two columns.
    pub n: usize,
    pub slab_cells: usize,
    pub eps: f64,
    pub k_matrix: f64,
    /// Tangential conductivity inside the slab.
    pub k_fracture: f64,
    /// Normal conductivity inside the slab.
    pub kappa_fracture: f64,
    pub regime: SlabRegime,
}

/// Cell-centred heads of the slab problem on its nonuniform grid.
#[derive(Debug, Clone)]
pub struct EquidimSolution {
    /// Cell boundaries along x.
    pub x_edges: Vec<f64>,
    pub n: usize,
    pub heads: Vec<f64>,
}

impl EquidimSolution {
    pub fn nx(&self) -> usize {
        self.x_edges.len() - 1
    }

    pub fn head(&self, i: usize, j: usize, k: usize) -> f64 {
        self.heads[i + self.nx() * (j + self.n * k)]
    }
}

impl SlabProblem {
    fn x_edges(&self) -> Vec<f64> {
        let half = self.n / 2;
        let left = 0.5 - self.eps / 2.0;
        let mut e: Vec<f64> = (0..=half).map(|i| left * i as f64 / half as f64).collect();
        for s in 1..=self.slab_cells {
            e.push(left + self.eps * s as f64 / self.slab_cells as f64);
        }
        let right = 0.5 + self.eps / 2.0;
        for i in 1..=half {
            e.push(right + (1.0 - right) * i as f64 / half as f64);
        }
        *e.last_mut().expect("edges are nonempty") = 1.0;
        e
    }

    fn in_slab(&self, i: usize) -> bool {
        let half = self.n / 2;
        i >= half && i < half + self.slab_cells
    }

    /// Solves the equi-dimensional problem.
    pub fn solve(&self) -> Result<EquidimSolution, OracleError> {
        if self.n < 2 || !self.n.is_multiple_of(2) || self.slab_cells == 0 {
            return Err(OracleError::Setup(format!("n = {} must be even, slab needs at least one cell", self.n)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(OracleError::Setup(format!("slab width {} outside (0, 1)", self.eps)));
        }
        let xe = self.x_edges();
        let nx = xe.len() - 1;
        let n = self.n;
        let h = 1.0 / n as f64;
        let dx: Vec<f64> = xe.windows(2).map(|w| w[1] - w[0]).collect();
        // principal conductivities per x column: (K_xx, K_yy = K_zz)
        let k: Vec<(f64, f64)> =
            (0..nx)
                .map(|i| {
                    if self.in_slab(i) {
                        (self.kappa_fracture, self.k_fracture)
                    } else {
                        (self.k_matrix, self.k_matrix)
                    }
                })
                .collect();
        let idx = |i: usize, j: usize, l: usize| i + nx * (j + n * l);
        let total = nx * n * n;
        let mut a = TripletBuilder::new(total, total);
        let mut b = vec![0.0; total];
        let mut link = |p: usize, q: usize, t: f64| {
            a.push(p, p, t);
            a.push(q, q, t);
            a.push(p, q, -t);
            a.push(q, p, -t);
        };
        for l in 0..n {
            for j in 0..n {
                for i in 0..nx {
                    let p = idx(i, j, l);
                    if i + 1 < nx {
                        let t = h * h / (dx[i] / (2.0 * k[i].0) + dx[i + 1] / (2.0 * k[i + 1].0));
                        link(p, idx(i + 1, j, l), t);
                    }
                    let ty = dx[i] * h / (h / k[i].1);
                    if j + 1 < n {
                        link(p, idx(i, j + 1, l), ty);
                    }
                    if l + 1 < n {
                        link(p, idx(i, j, l + 1), ty);
                    }
                }
            }
        }
        let mut any_dirichlet = false;
        for l in 0..n {
            for j in 0..n {
                for i in 0..nx {
                    let p = idx(i, j, l);
                    let mut fix = |head: Option<f64>, t: f64| {
                        if let Some(v) = head {
                            a.push(p, p, t);
                            b[p] += t * v;
                            any_dirichlet = true;
                        }
                    };
                    if i == 0 {
                        fix(self.regime.head(0, false), h * h * 2.0 * k[i].0 / dx[i]);
                    }
                    if i + 1 == nx {
                        fix(self.regime.head(0, true), h * h * 2.0 * k[i].0 / dx[i]);
                    }
                    let ty = dx[i] * h * 2.0 * k[i].1 / h;
                    if j == 0 {
                        fix(self.regime.head(1, false), ty);
                    }
                    if j + 1 == n {
                        fix(self.regime.head(1, true), ty);
                    }
                }
            }
        }
        if !any_dirichlet {
            return Err(OracleError::Setup("no Dirichlet face".into()));
        }
        let (heads, _) = solve_spd(&a.build(), &b, 1e-13, 50 * total + 1000)?;
        Ok(EquidimSolution { x_edges: xe, n, heads })
    }

    /// Matrix cell `(i, j, k)` of the uniform mixed-dimensional grid mapped to the
    /// slab grid, which has the slab columns inserted at `i = n/2`.
    pub fn matrix_column(&self, i: usize) -> usize {
        if i < self.n / 2 {
            i
        } else {
            i + self.slab_cells
        }
    }
}

impl SlabProblem {
    /// The same problem with the fracture as a plane `x = 0.5` on a uniform lattice.
    pub fn mixed_setup(&self) -> Result<(MixedDimGrid, ConductivityField, FlowBc), OracleError> {
        let lattice = Lattice::cube(BoundingBox::unit_cube(), self.n);
        let plane =
            FractureRectangle { id: 0, corners: [[0.5, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, 1.0, 1.0], [0.5, 0.0, 1.0]] };
        let mut grid =
            cartesian_dfm_mesher(&lattice, &[plane], |_| 0).map_err(|e| OracleError::Setup(e.to_string()))?;
        grid.set_apertures([1.0, 1.0, self.eps, 1.0]);
        let (kt, kn) = (self.eps * self.k_fracture, 2.0 / self.eps * self.kappa_fracture);
        let km = self.k_matrix;
        let cond = ConductivityField::from_fn(&grid, |d, _| isotropic(if d == 3 { km } else { kt }), |_, _| kn);
        let regime = self.regime;
        let bc = FlowBc::from_fn(&grid, |d, f| {
            let p = grid.subdomains[d].faces[f].centroid;
            let side = (0..3).find_map(|axis| {
                if p[axis].abs() < 1e-12 {
                    Some((axis, false))
                } else if (p[axis] - 1.0).abs() < 1e-12 {
                    Some((axis, true))
                } else {
                    None
                }
            });
            match side.and_then(|(axis, hi)| regime.head(axis, hi)) {
                Some(h) => FaceBc::Head(h),
                None => FaceBc::NoFlux,
            }
        });
        Ok((grid, cond, bc))
    }
}

/// Relative volume-weighted L2 difference of matrix heads between a mixed-dimensional
/// solution on the uniform `n^3` lattice (cells ordered x fastest) and the slab solution.
pub fn matrix_head_l2(problem: &SlabProblem, reference: &EquidimSolution, mixed: &[f64]) -> f64 {
    let n = problem.n;
    let (mut num, mut den) = (0.0, 0.0);
    for l in 0..n {
        for j in 0..n {
            for i in 0..n {
                let r = reference.head(problem.matrix_column(i), j, l);
                let m = mixed[i + n * (j + n * l)];
                num += (m - r) * (m - r);
                den += r * r;
            }
        }
    }
    (num / den).sqrt()
}

/// Mean head drop across the fracture between the two adjacent matrix columns.
pub fn head_jump(problem: &SlabProblem, heads: impl Fn(usize, usize, usize) -> f64, shifted: bool) -> f64 {
    let n = problem.n;
    let (left, right) = (n / 2 - 1, n / 2);
    let (il, ir) = if shifted { (problem.matrix_column(left), problem.matrix_column(right)) } else { (left, right) };
    let mut total = 0.0;
    for l in 0..n {
        for j in 0..n {
            total += heads(il, j, l) - heads(ir, j, l);
        }
    }
    total / (n * n) as f64
}

/// Dense matrix and right-hand side of the flow problem, rebuilt face by face.
pub fn dense_flow_system(
    grid: &MixedDimGrid,
    cond: &ConductivityField,
    bc: &FlowBc,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), OracleError> {
    let counts = grid.cell_counts();
    let offset = [counts[3] + counts[2] + counts[1], counts[3] + counts[2], counts[3], 0];
    let n: usize = counts.iter().sum();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    let half = |d: usize, cell: usize, face: usize| -> Result<f64, OracleError> {
        let g = &grid.subdomains[d];
        let f = &g.faces[face];
        let c = &g.cells[cell];
        let sign = if f.cell == cell { 1.0 } else { -1.0 };
        let v = sub(f.centroid, c.centroid);
        let t = sign * f.measure * dot(f.normal, mat_vec(&cond.tangential[d][cell], v)) / dot(v, v);
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(OracleError::Setup(format!("bad half transmissibility at dim {d} cell {cell} face {face}")))
        }
    };
    for d in 1..4 {
        let g = &grid.subdomains[d];
        for (fi, f) in g.faces.iter().enumerate() {
            let p = offset[d] + f.cell;
            match f.kind {
                FaceKind::Interior => {
                    let nb = f.neighbor.ok_or_else(|| OracleError::Setup("interior face without neighbor".into()))?;
                    let (t1, t2) = (half(d, f.cell, fi)?, half(d, nb, fi)?);
                    let t = 1.0 / (1.0 / t1 + 1.0 / t2);
                    let q = offset[d] + nb;
                    // each interior face is stored once
                    a[p][p] += t;
                    a[q][q] += t;
                    a[p][q] -= t;
                    a[q][p] -= t;
                }
                FaceKind::Domain => match bc.faces[d][fi] {
                    FaceBc::Head(h) => {
                        let t = half(d, f.cell, fi)?;
                        a[p][p] += t;
                        b[p] += t * h;
                    }
                    FaceBc::Flux(u) => b[p] -= g.aperture[f.cell] * u * f.measure,
                    FaceBc::NoFlux => {}
                },
                FaceKind::Interface { .. } | FaceKind::Tip => {}
            }
        }
    }
    for dl in 0..3 {
        for pair in &grid.interfaces[dl].pairs {
            let high = &grid.subdomains[dl + 1];
            let cell = high.faces[pair.high_face].cell;
            let t_high = half(dl + 1, cell, pair.high_face)?;
            let t = 1.0 / (1.0 / t_high + 1.0 / (pair.area * cond.normal[dl][pair.low_cell]));
            let (p, q) = (offset[dl + 1] + cell, offset[dl] + pair.low_cell);
            a[p][p] += t;
            a[q][q] += t;
            a[p][q] -= t;
            a[q][p] -= t;
        }
    }
    Ok((a, b))
}

/// Largest entry-wise difference between the assembled sparse system and the dense
/// rebuild, relative to the largest matrix entry and right-hand side entry.
pub fn dense_reassembly_check(
    grid: &MixedDimGrid,
    cond: &ConductivityField,
    bc: &FlowBc,
    disc: &FlowDiscretization,
) -> Result<f64, OracleError> {
    if disc.model != IntersectionModel::Resolved {
        return Err(OracleError::Setup("dense rebuild covers the resolved model only".into()));
    }
    let (a, b) = dense_flow_system(grid, cond, bc)?;
    let n = a.len();
    if disc.num_dofs() != n {
        return Err(OracleError::Setup(format!("{} unknowns assembled, {n} expected", disc.num_dofs())));
    }
    let sparse = disc.matrix.to_dense();
    let amax = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[i][j] - sparse[i][j]).abs() / amax);
        }
        if bmax > 0.0 {
            worst = worst.max((b[i] - disc.rhs[i]).abs() / bmax);
        }
    }
    Ok(worst)
}

/// Implicit Euler upwind transport by dense matrix inversion at every step. A cell
/// receiving more than it releases keeps the surplus on its diagonal.
///
/// Returns the concentration after each step (excluding the initial state).
pub fn dense_transport(
    disc: &FlowDiscretization,
    flow: &FlowSolution,
    storage: &[f64],
    inflow_concentration: impl Fn(usize) -> f64,
    dt: f64,
    initial: &[f64],
    nsteps: usize,
) -> Result<Vec<Vec<f64>>, OracleError> {
    let n = disc.num_dofs();
    if storage.len() != n || initial.len() != n {
        return Err(OracleError::Setup("storage or initial state has the wrong length".into()));
    }
    let mut a = vec![vec![0.0; n]; n];
    let mut load = vec![0.0; n];
    for i in 0..n {
        a[i][i] = storage[i] / dt;
    }
    // net inflow minus outflow per cell
    let mut surplus = vec![0.0; n];
    for (c, &q) in disc.connections.iter().zip(&flow.connection_flux) {
        if q > 0.0 {
            a[c.from][c.from] += q;
            a[c.to][c.from] -= q;
        } else if q < 0.0 {
            a[c.to][c.to] -= q;
            a[c.from][c.to] += q;
        }
        surplus[c.to] += q;
        surplus[c.from] -= q;
    }
    for (k, (bnd, &q)) in disc.boundary.iter().zip(&flow.boundary_flux).enumerate() {
        if q > 0.0 {
            a[bnd.dof][bnd.dof] += q;
        } else {
            load[bnd.dof] -= q * inflow_concentration(k);
        }
        surplus[bnd.dof] -= q;
    }
    for i in 0..n {
        if surplus[i] > 0.0 {
            a[i][i] += surplus[i];
        }
    }
    let mut c = initial.to_vec();
    let mut out = Vec::with_capacity(nsteps);
    for _ in 0..nsteps {
        let rhs: Vec<f64> = (0..n).map(|i| storage[i] / dt * c[i] + load[i]).collect();
        c = solve_dense(&a, &rhs)?;
        out.push(c.clone());
    }
    Ok(out)
}
