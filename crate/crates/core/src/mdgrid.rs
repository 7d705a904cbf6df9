//! Conforming mixed-dimensional grids.
//!
//! A [`MixedDimGrid`] holds one [`SubdomainGrid`] per dimension (matrix, fractures,
//! intersection lines, intersection points) together with the interface sets that pair
//! a face of a `(d+1)`-dimensional cell with the `d`-dimensional cell it coincides with.
//!
//! Faces that couple to a lower-dimensional cell are never shared between two cells: a
//! fracture splits the matrix faces it lies on into one face per side, and the same holds
//! for fracture faces on an intersection line and line end points at an intersection point.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::geometry::{distance, dot, sub, BoundingBox, Vec3};

/// Relative tolerance (times the domain diameter) for geometric coincidence checks.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Volume, area, length or 1 depending on the dimension.
    pub measure: f64,
    pub centroid: Vec3,
    /// Matrix region for 3D cells, fracture id for 2D cells, -1 otherwise.
    pub region_tag: i32,
    /// Plane normal for 2D cells, unit tangent for 1D cells, zero otherwise.
    pub axis: Vec3,
    /// Global node ids (into [`MixedDimGrid::nodes`]).
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Shared by `cell` and `neighbor`.
    Interior,
    /// Coupled to a lower-dimensional cell through the given interface pair.
    Interface { pair: usize },
    /// Lies on the outer boundary of the domain.
    Domain,
    /// Boundary of a lower-dimensional subdomain strictly inside the domain
    /// (embedded fracture ending); always no-flux.
    Tip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub measure: f64,
    pub centroid: Vec3,
    /// Unit normal pointing out of `cell`.
    pub normal: Vec3,
    pub cell: usize,
    pub neighbor: Option<usize>,
    pub kind: FaceKind,
    /// Physical boundary tag carried from the mesh file, -1 when absent.
    pub boundary_tag: i32,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, FaceKind::Domain | FaceKind::Tip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainGrid {
    pub dim: usize,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    /// Cross-sectional measure per cell (m^(3-dim)).
    pub aperture: Vec<f64>,
    /// Typical length per cell, `aperture = typical_length^(3-dim)`.
    pub typical_length: Vec<f64>,
}

impl SubdomainGrid {
    pub fn empty(dim: usize) -> Self {
        SubdomainGrid { dim, cells: Vec::new(), faces: Vec::new(), aperture: Vec::new(), typical_length: Vec::new() }
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// Faces adjacent to each cell.
    pub fn cell_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells.len()];
        for (f, face) in self.faces.iter().enumerate() {
            out[face.cell].push(f);
            if let Some(nb) = face.neighbor {
                out[nb].push(f);
            }
        }
        out
    }

    /// Sets a constant aperture on every cell and derives the typical length.
    pub fn set_aperture(&mut self, eps: f64) {
        let power = (3 - self.dim) as f64;
        let a = if self.dim == 3 { 1.0 } else { eps.powf(1.0 / power) };
        self.aperture = vec![eps; self.cells.len()];
        self.typical_length = vec![a; self.cells.len()];
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePair {
    /// Face id in the `(d+1)`-dimensional subdomain.
    pub high_face: usize,
    /// Cell id in the `d`-dimensional subdomain.
    pub low_cell: usize,
    /// Measure of the coinciding face.
    pub area: f64,
    /// +1 when the face normal points out of the higher-dimensional cell.
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSet {
    pub dim_low: usize,
    pub pairs: Vec<InterfacePair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDimGrid {
    pub nodes: Vec<Vec3>,
    /// Indexed by dimension; absent dimensions hold empty grids.
    pub subdomains: [SubdomainGrid; 4],
    /// Indexed by the lower dimension `d` of `Γ_d`.
    pub interfaces: [InterfaceSet; 3],
    pub domain: BoundingBox,
}

impl MixedDimGrid {
    pub fn subdomain(&self, dim: usize) -> &SubdomainGrid {
        &self.subdomains[dim]
    }

    pub fn interface(&self, dim_low: usize) -> &InterfaceSet {
        &self.interfaces[dim_low]
    }

    /// Cell counts ordered by dimension 0..=3.
    pub fn cell_counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|d| self.subdomains[d].num_cells())
    }

    pub fn num_cells_total(&self) -> usize {
        self.cell_counts().iter().sum()
    }

    /// Sets constant apertures per dimension; `eps[3]` is ignored (always one).
    pub fn set_apertures(&mut self, eps: [f64; 4]) {
        for d in 0..4 {
            let e = if d == 3 { 1.0 } else { eps[d] };
            self.subdomains[d].set_aperture(e);
        }
    }

    /// Coincidence tolerance scaled with the domain diameter.
    pub fn tolerance(&self) -> f64 {
        COINCIDENCE_TOLERANCE * self.domain.diameter().max(f64::MIN_POSITIVE)
    }

    /// Connected components of the fracture grid, counting two fracture cells as
    /// connected when they share an interior face, or when they carry the same
    /// fracture tag and touch the same intersection cell.
    pub fn fracture_components(&self) -> usize {
        let g2 = &self.subdomains[2];
        let n = g2.num_cells();
        let mut uf = UnionFind::new(n);
        for face in &g2.faces {
            if let Some(nb) = face.neighbor {
                uf.union(face.cell, nb);
            }
        }
        let mut by_line: HashMap<(usize, i32), usize> = HashMap::new();
        for pair in &self.interfaces[1].pairs {
            let cell = g2.faces[pair.high_face].cell;
            let key = (pair.low_cell, g2.cells[cell].region_tag);
            match by_line.get(&key) {
                Some(&other) => uf.union(other, cell),
                None => {
                    by_line.insert(key, cell);
                }
            }
        }
        (0..n).filter(|&i| uf.find(i) == i).count()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Maps each `d`-dimensional cell to the interface pairs it receives flux from,
/// with the orientation sign of each pair.
pub type JumpIncidence = Vec<Vec<(usize, f64)>>;

/// Incidence structure of the jump operator on `Ω_d`.
///
/// Applying it to per-pair fluxes sums all contributions that coincide with each
/// lower-dimensional cell. Returns an empty map for `d > 2` or when no pairs exist.
pub fn jump_incidence(grid: &MixedDimGrid, d: usize) -> JumpIncidence {
    if d > 2 || grid.interfaces[d].pairs.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Vec::new(); grid.subdomains[d].num_cells()];
    for (p, pair) in grid.interfaces[d].pairs.iter().enumerate() {
        out[pair.low_cell].push((p, pair.orientation));
    }
    out
}

/// Applies a jump incidence to per-pair fluxes.
pub fn apply_jump(incidence: &JumpIncidence, pair_flux: &[f64]) -> Vec<f64> {
    incidence.iter().map(|entries| entries.iter().map(|&(p, s)| s * pair_flux[p]).sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub severity: Severity,
    pub dim: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Info => "info",
        };
        write!(f, "[{sev}] dim {}: {}", self.dim, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Well-formed means no error-level violations; informational notes are allowed.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    fn error(&mut self, dim: usize, message: String) {
        self.violations.push(Violation { severity: Severity::Error, dim, message });
    }

    fn info(&mut self, dim: usize, message: String) {
        self.violations.push(Violation { severity: Severity::Info, dim, message });
    }
}

/// Checks every structural invariant of the grid and lists the violations found.
pub fn validate(grid: &MixedDimGrid) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = grid.tolerance();

    for (d, sub) in grid.subdomains.iter().enumerate() {
        if sub.dim != d {
            report.error(d, format!("subdomain stored at slot {d} reports dim {}", sub.dim));
        }
        validate_subdomain(grid, sub, &mut report);
    }

    for (d, set) in grid.interfaces.iter().enumerate() {
        if set.dim_low != d {
            report.error(d, format!("interface set at slot {d} reports dim {}", set.dim_low));
        }
        let high = &grid.subdomains[d + 1];
        let low = &grid.subdomains[d];
        let mut count = vec![0usize; low.num_cells()];
        let mut face_seen = HashSet::new();
        for (p, pair) in set.pairs.iter().enumerate() {
            if pair.high_face >= high.faces.len() || pair.low_cell >= low.num_cells() {
                report.error(d, format!("pair {p} references out-of-range face or cell"));
                continue;
            }
            if !face_seen.insert(pair.high_face) {
                report.error(d, format!("face {} appears in more than one pair", pair.high_face));
            }
            count[pair.low_cell] += 1;
            let face = &high.faces[pair.high_face];
            if face.kind != (FaceKind::Interface { pair: p }) {
                report.error(d, format!("pair {p}: face {} is not marked as its interface face", pair.high_face));
            }
            let gap = distance(face.centroid, low.cells[pair.low_cell].centroid);
            if gap > tol {
                report.error(
                    d,
                    format!(
                        "pair {p}: face {} does not coincide with cell {} (distance {gap:e})",
                        pair.high_face, pair.low_cell
                    ),
                );
            }
            if (pair.area - face.measure).abs() > 1e-12 * face.measure.max(1.0) {
                report.error(d, format!("pair {p}: area {} differs from face measure {}", pair.area, face.measure));
            }
            let outward = dot(face.normal, sub(face.centroid, high.cells[face.cell].centroid));
            if pair.orientation * outward <= 0.0 {
                report.error(d, format!("pair {p}: orientation inconsistent with the outward normal"));
            }
        }
        for (c, &n) in count.iter().enumerate() {
            if n == 0 {
                report.error(d, format!("cell {c} has no coupling to dimension {}", d + 1));
            } else if d == 2 && n == 1 {
                let on_boundary = grid.domain.on_boundary(low.cells[c].centroid, tol);
                if on_boundary {
                    report.info(d, format!("fracture cell {c} on the domain boundary is coupled one-sided"));
                } else {
                    report.error(d, format!("fracture cell {c} coupled to one side only"));
                }
            }
        }
    }

    // Ω_d must not lie inside a single higher-dimensional subdomain: a lower-dimensional
    // cell may not coincide with an interior face of the grid one dimension up.
    for d in 0..3 {
        let high = &grid.subdomains[d + 1];
        let interior: HashSet<Vec<usize>> =
            high.faces.iter().filter(|f| f.kind == FaceKind::Interior).filter_map(|f| face_node_key(high, f)).collect();
        for (c, cell) in grid.subdomains[d].cells.iter().enumerate() {
            let mut key = cell.nodes.clone();
            key.sort_unstable();
            if !key.is_empty() && interior.contains(&key) {
                report.error(d, format!("cell {c} lies inside dimension {} (interior face)", d + 1));
            }
        }
    }

    report
}

/// Node set of a face, recovered as the nodes shared by the adjacent cell and the
/// face's geometric support. Only available when both neighbors exist.
fn face_node_key(grid: &SubdomainGrid, face: &Face) -> Option<Vec<usize>> {
    let nb = face.neighbor?;
    let a: HashSet<usize> = grid.cells[face.cell].nodes.iter().copied().collect();
    let mut key: Vec<usize> = grid.cells[nb].nodes.iter().copied().filter(|n| a.contains(n)).collect();
    key.sort_unstable();
    Some(key)
}

fn validate_subdomain(grid: &MixedDimGrid, sub: &SubdomainGrid, report: &mut ValidationReport) {
    let d = sub.dim;
    let n = sub.num_cells();
    if sub.aperture.len() != n || sub.typical_length.len() != n {
        report.error(d, format!("aperture/typical length arrays do not match {n} cells"));
    }
    for (c, cell) in sub.cells.iter().enumerate() {
        if !(cell.measure > 0.0) {
            report.error(d, format!("cell {c} has nonpositive measure {}", cell.measure));
        }
        if d == 0 && cell.measure != 1.0 {
            report.error(d, format!("point cell {c} must have unit measure"));
        }
        if cell.nodes.iter().any(|&v| v >= grid.nodes.len()) {
            report.error(d, format!("cell {c} references a missing node"));
        }
    }
    for (c, (&eps, &a)) in sub.aperture.iter().zip(&sub.typical_length).enumerate() {
        if !(eps > 0.0) {
            report.error(d, format!("cell {c} has nonpositive aperture {eps}"));
        }
        if d == 3 && eps != 1.0 {
            report.error(d, format!("matrix cell {c} aperture must be 1, found {eps}"));
        }
        let expected = a.powi((3 - d) as i32);
        if d < 3 && (expected - eps).abs() > 1e-10 * eps {
            report.error(d, format!("cell {c}: aperture {eps} != typical length^(3-d) = {expected}"));
        }
    }
    if d == 0 && !sub.faces.is_empty() {
        report.error(d, "point grid must not have faces".to_string());
    }
    for (f, face) in sub.faces.iter().enumerate() {
        if face.cell >= n || face.neighbor.is_some_and(|nb| nb >= n) {
            report.error(d, format!("face {f} references an out-of-range cell"));
            continue;
        }
        if !(face.measure > 0.0) {
            report.error(d, format!("face {f} has nonpositive measure"));
        }
        match (face.kind, face.neighbor) {
            (FaceKind::Interior, None) => report.error(d, format!("interior face {f} has one adjacent cell")),
            (FaceKind::Interior, Some(nb)) if nb == face.cell => {
                report.error(d, format!("interior face {f} has the same cell on both sides"))
            }
            (FaceKind::Interior, Some(_)) => {}
            (_, Some(_)) => report.error(d, format!("boundary face {f} has two adjacent cells")),
            (FaceKind::Interface { .. }, None) if d == 0 => {
                report.error(d, format!("point face {f} cannot couple downwards"))
            }
            (FaceKind::Interface { pair }, None) => {
                let set = &grid.interfaces[d - 1];
                if pair >= set.pairs.len() || set.pairs[pair].high_face != f {
                    report.error(d, format!("interface face {f} points at a pair that does not reference it"));
                }
            }
            (_, None) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_cell_grid() -> MixedDimGrid {
        let nodes = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
        ];
        let mut g3 = SubdomainGrid::empty(3);
        g3.cells.push(Cell {
            measure: 1.0,
            centroid: [0.5; 3],
            region_tag: 0,
            axis: [0.0; 3],
            nodes: (0..8).collect(),
        });
        for k in 0..3 {
            for side in [0.0, 1.0] {
                let mut c = [0.5; 3];
                c[k] = side;
                let mut n = [0.0; 3];
                n[k] = if side == 0.0 { -1.0 } else { 1.0 };
                g3.faces.push(Face {
                    measure: 1.0,
                    centroid: c,
                    normal: n,
                    cell: 0,
                    neighbor: None,
                    kind: FaceKind::Domain,
                    boundary_tag: -1,
                });
            }
        }
        let mut grid = MixedDimGrid {
            nodes,
            subdomains: [SubdomainGrid::empty(0), SubdomainGrid::empty(1), SubdomainGrid::empty(2), g3],
            interfaces: [0, 1, 2].map(|d| InterfaceSet { dim_low: d, pairs: Vec::new() }),
            domain: BoundingBox::unit_cube(),
        };
        grid.set_apertures([1.0; 4]);
        grid
    }

    #[test]
    fn single_hex_is_valid() {
        let grid = single_cell_grid();
        let report = validate(&grid);
        assert!(report.is_empty(), "{:?}", report);
    }

    #[test]
    fn detects_bad_measure_and_aperture() {
        let mut grid = single_cell_grid();
        grid.subdomains[3].cells[0].measure = 0.0;
        grid.subdomains[3].aperture[0] = 2.0;
        let report = validate(&grid);
        assert_eq!(report.errors().count(), 2);
    }

    #[test]
    fn jump_sums_four_branches() {
        let incidence: JumpIncidence = vec![vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)]];
        assert_eq!(apply_jump(&incidence, &[0.5; 4]), vec![2.0]);
    }

    #[test]
    fn jump_cancels_opposite_sides() {
        let incidence: JumpIncidence = vec![vec![(0, 1.0), (1, 1.0)]];
        let q = 3.25;
        assert_eq!(apply_jump(&incidence, &[q, -q]), vec![0.0]);
    }

    #[test]
    fn jump_of_missing_dimension_is_empty() {
        let grid = single_cell_grid();
        assert!(jump_incidence(&grid, 2).is_empty());
        assert!(jump_incidence(&grid, 3).is_empty());
    }
}
