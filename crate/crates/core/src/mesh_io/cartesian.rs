//! Hexahedral meshes of a box with axis-aligned fracture rectangles on lattice planes.

use super::complex::{assemble, RawCell, RawComplex};
use super::MeshError;
use crate::geometry::{BoundingBox, Vec3};
use crate::mdgrid::MixedDimGrid;

/// Lattice description: box and number of cells per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub domain: BoundingBox,
    pub cells: [usize; 3],
}

impl Lattice {
    pub fn cube(domain: BoundingBox, n: usize) -> Self {
        Lattice { domain, cells: [n; 3] }
    }

    pub fn spacing(&self) -> Vec3 {
        [0, 1, 2].map(|k| (self.domain.max[k] - self.domain.min[k]) / self.cells[k] as f64)
    }

    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.cells;
        i + (nx + 1) * (j + (ny + 1) * k)
    }

    /// Lattice index of `value` along `axis`, if it sits on a lattice plane.
    fn index_of(&self, axis: usize, value: f64) -> Option<usize> {
        let h = self.spacing()[axis];
        let t = (value - self.domain.min[axis]) / h;
        let r = t.round();
        if (t - r).abs() <= 1e-9 * t.abs().max(1.0) && r >= 0.0 && r as usize <= self.cells[axis] {
            Some(r as usize)
        } else {
            None
        }
    }
}

/// An axis-aligned fracture rectangle given by its four corners.
#[derive(Debug, Clone, PartialEq)]
pub struct FractureRectangle {
    pub id: i32,
    pub corners: [Vec3; 4],
}

/// Normal axis, plane coordinate and (min, max) along every axis.
type Extent = (usize, f64, [(f64, f64); 3]);

impl FractureRectangle {
    fn extent(&self) -> Result<Extent, MeshError> {
        let mut range = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        for c in &self.corners {
            for k in 0..3 {
                range[k].0 = range[k].0.min(c[k]);
                range[k].1 = range[k].1.max(c[k]);
            }
        }
        let flat: Vec<usize> = (0..3).filter(|&k| range[k].0 == range[k].1).collect();
        if flat.len() != 1 {
            return Err(MeshError::OffLattice(format!("fracture {} is not an axis-aligned rectangle", self.id)));
        }
        Ok((flat[0], range[flat[0]].0, range))
    }
}

/// Builds the hexahedral matrix grid with fractures on lattice faces.
///
/// Every fracture coordinate must lie on a lattice plane; otherwise the mesher refuses
/// rather than snapping the geometry.
pub fn cartesian_dfm_mesher(
    lattice: &Lattice,
    fractures: &[FractureRectangle],
    region: impl Fn(Vec3) -> i32,
) -> Result<MixedDimGrid, MeshError> {
    let [nx, ny, nz] = lattice.cells;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(MeshError::Structure("lattice needs at least one cell per axis".into()));
    }
    let h = lattice.spacing();
    let lo = lattice.domain.min;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let mut p = [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1], lo[2] + k as f64 * h[2]];
                // pin the far faces exactly to the box
                if i == nx {
                    p[0] = lattice.domain.max[0];
                }
                if j == ny {
                    p[1] = lattice.domain.max[1];
                }
                if k == nz {
                    p[2] = lattice.domain.max[2];
                }
                nodes.push(p);
            }
        }
    }
    let volume = h[0] * h[1] * h[2];
    let mut cells = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let n = |a, b, c| lattice.node(i + a, j + b, k + c);
                let corners =
                    [n(0, 0, 0), n(1, 0, 0), n(1, 1, 0), n(0, 1, 0), n(0, 0, 1), n(1, 0, 1), n(1, 1, 1), n(0, 1, 1)];
                let facets = vec![
                    vec![n(0, 0, 0), n(0, 1, 0), n(0, 1, 1), n(0, 0, 1)],
                    vec![n(1, 0, 0), n(1, 1, 0), n(1, 1, 1), n(1, 0, 1)],
                    vec![n(0, 0, 0), n(1, 0, 0), n(1, 0, 1), n(0, 0, 1)],
                    vec![n(0, 1, 0), n(1, 1, 0), n(1, 1, 1), n(0, 1, 1)],
                    vec![n(0, 0, 0), n(1, 0, 0), n(1, 1, 0), n(0, 1, 0)],
                    vec![n(0, 0, 1), n(1, 0, 1), n(1, 1, 1), n(0, 1, 1)],
                ];
                let centroid =
                    [lo[0] + (i as f64 + 0.5) * h[0], lo[1] + (j as f64 + 0.5) * h[1], lo[2] + (k as f64 + 0.5) * h[2]];
                cells.push(RawCell {
                    nodes: corners.to_vec(),
                    facets,
                    measure: volume,
                    centroid,
                    region: region(centroid),
                });
            }
        }
    }

    let mut polygons = Vec::new();
    for frac in fractures {
        let (axis, coord, range) = frac.extent()?;
        let off = |what: String| MeshError::OffLattice(format!("fracture {}: {what} is not on the lattice", frac.id));
        let plane = lattice.index_of(axis, coord).ok_or_else(|| off(format!("plane coordinate {coord}")))?;
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let idx = |ax: usize, val: f64| lattice.index_of(ax, val).ok_or_else(|| off(format!("coordinate {val}")));
        let (u0, u1) = (idx(u, range[u].0)?, idx(u, range[u].1)?);
        let (v0, v1) = (idx(v, range[v].0)?, idx(v, range[v].1)?);
        for a in u0..u1 {
            for b in v0..v1 {
                let at = |da: usize, db: usize| {
                    let mut ijk = [0usize; 3];
                    ijk[axis] = plane;
                    ijk[u] = a + da;
                    ijk[v] = b + db;
                    lattice.node(ijk[0], ijk[1], ijk[2])
                };
                polygons.push((vec![at(0, 0), at(1, 0), at(1, 1), at(0, 1)], frac.id));
            }
        }
    }

    assemble(RawComplex { nodes, cells, fractures: polygons, domain: Some(lattice.domain), ..RawComplex::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdgrid::{validate, FaceKind};

    fn plane_x(id: i32, x: f64) -> FractureRectangle {
        FractureRectangle { id, corners: [[x, 0.0, 0.0], [x, 1.0, 0.0], [x, 1.0, 1.0], [x, 0.0, 1.0]] }
    }

    #[test]
    fn fracture_free_cube() {
        let grid = cartesian_dfm_mesher(&Lattice::cube(BoundingBox::unit_cube(), 3), &[], |_| 0).unwrap();
        assert_eq!(grid.cell_counts(), [0, 0, 0, 27]);
        let boundary = grid.subdomains[3].faces.iter().filter(|f| f.kind == FaceKind::Domain).count();
        assert_eq!(boundary, 6 * 9);
        assert!(validate(&grid).is_empty());
    }

    #[test]
    fn single_plane_splits_faces() {
        let grid =
            cartesian_dfm_mesher(&Lattice::cube(BoundingBox::unit_cube(), 4), &[plane_x(0, 0.5)], |_| 0).unwrap();
        assert_eq!(grid.cell_counts(), [0, 0, 16, 64]);
        assert_eq!(grid.interfaces[2].pairs.len(), 32);
        let area: f64 = grid.subdomains[2].total_measure();
        assert!((area - 1.0).abs() < 1e-14);
        // fracture edges on the box boundary
        let domain_faces = grid.subdomains[2].faces.iter().filter(|f| f.kind == FaceKind::Domain).count();
        assert_eq!(domain_faces, 16);
        assert!(validate(&grid).is_empty(), "{:?}", validate(&grid));
    }

    #[test]
    fn refuses_off_lattice_fracture() {
        let err = cartesian_dfm_mesher(&Lattice::cube(BoundingBox::unit_cube(), 4), &[plane_x(0, 0.3)], |_| 0);
        assert!(matches!(err, Err(MeshError::OffLattice(_))));
    }

    #[test]
    fn embedded_fracture_has_tips() {
        let frac = FractureRectangle {
            id: 0,
            corners: [[0.5, 0.25, 0.25], [0.5, 0.75, 0.25], [0.5, 0.75, 0.75], [0.5, 0.25, 0.75]],
        };
        let grid = cartesian_dfm_mesher(&Lattice::cube(BoundingBox::unit_cube(), 4), &[frac], |_| 0).unwrap();
        let tips = grid.subdomains[2].faces.iter().filter(|f| f.kind == FaceKind::Tip).count();
        assert_eq!(tips, 8);
        assert!(validate(&grid).is_empty());
    }
}
