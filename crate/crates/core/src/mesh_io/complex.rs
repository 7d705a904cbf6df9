//! Assembly of a [`MixedDimGrid`] from a conforming polyhedral cell complex.
//!
//! The input lists 3D cells by their polygonal facets, and fracture polygons as node
//! sets that must coincide with such facets. Intersection lines are the fracture edges
//! shared by more than one fracture (or explicitly tagged), intersection points the
//! vertices where intersection lines meet at an angle (or explicitly tagged).

use std::collections::{HashMap, HashSet};

use super::MeshError;
use crate::geometry::{add, cross, dot, norm, normalize, polygon_geometry, scale, sub, BoundingBox, Vec3};
use crate::mdgrid::{
    Cell, Face, FaceKind, InterfacePair, InterfaceSet, MixedDimGrid, SubdomainGrid, COINCIDENCE_TOLERANCE,
};

#[derive(Debug, Clone)]
pub(crate) struct RawCell {
    pub nodes: Vec<usize>,
    /// Facets as cyclically ordered node lists.
    pub facets: Vec<Vec<usize>>,
    pub measure: f64,
    pub centroid: Vec3,
    pub region: i32,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RawComplex {
    pub nodes: Vec<Vec3>,
    pub cells: Vec<RawCell>,
    /// Fracture polygons (cyclic node lists) with their fracture id.
    pub fractures: Vec<(Vec<usize>, i32)>,
    pub tagged_lines: Vec<[usize; 2]>,
    pub tagged_points: Vec<usize>,
    /// Boundary polygons carrying a physical tag.
    pub boundary_tags: Vec<(Vec<usize>, i32)>,
    pub domain: Option<BoundingBox>,
}

fn key_of(nodes: &[usize]) -> Vec<usize> {
    let mut k = nodes.to_vec();
    k.sort_unstable();
    k
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Points `normal` away from `inside`.
fn orient_outward(normal: Vec3, face_centroid: Vec3, inside: Vec3) -> Vec3 {
    if dot(normal, sub(face_centroid, inside)) < 0.0 {
        scale(normal, -1.0)
    } else {
        normal
    }
}

pub(crate) fn assemble(raw: RawComplex) -> Result<MixedDimGrid, MeshError> {
    if raw.cells.is_empty() {
        return Err(MeshError::Structure("mesh contains no 3D cells".into()));
    }
    let domain = raw.domain.unwrap_or_else(|| BoundingBox::of_points(&raw.nodes));
    let tol = COINCIDENCE_TOLERANCE * domain.diameter();
    let coords = |ids: &[usize]| ids.iter().map(|&i| raw.nodes[i]).collect::<Vec<_>>();

    // --- fractures (Ω_2 cells) ---
    let mut fracture_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut fractures: Vec<(Vec<usize>, i32)> = Vec::new();
    for (poly, id) in &raw.fractures {
        let key = key_of(poly);
        match fracture_index.get(&key) {
            Some(&existing) if fractures[existing].1 == *id => continue,
            Some(&existing) => {
                return Err(MeshError::Structure(format!(
                    "fractures {} and {id} overlap on the polygon {poly:?}",
                    fractures[existing].1
                )))
            }
            None => {
                fracture_index.insert(key, fractures.len());
                fractures.push((poly.clone(), *id));
            }
        }
    }
    let boundary_tags: HashMap<Vec<usize>, i32> = raw.boundary_tags.iter().map(|(p, t)| (key_of(p), *t)).collect();

    // --- Ω_3 ---
    let mut g3 = SubdomainGrid::empty(3);
    let mut pairs2: Vec<InterfacePair> = Vec::new();
    let mut pair2_fracture: Vec<usize> = Vec::new();
    let mut facet_face: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut fracture_hits = vec![0usize; fractures.len()];
    for (c, cell) in raw.cells.iter().enumerate() {
        g3.cells.push(Cell {
            measure: cell.measure,
            centroid: cell.centroid,
            region_tag: cell.region,
            axis: [0.0; 3],
            nodes: cell.nodes.clone(),
        });
        for facet in &cell.facets {
            let key = key_of(facet);
            if let Some(&frac) = fracture_index.get(&key) {
                fracture_hits[frac] += 1;
                if fracture_hits[frac] > 2 {
                    return Err(MeshError::NonConforming(format!(
                        "fracture polygon {:?} is a facet of more than two cells",
                        fractures[frac].0
                    )));
                }
                let (area, centroid, n) = polygon_geometry(&coords(facet));
                let face_id = g3.faces.len();
                pairs2.push(InterfacePair { high_face: face_id, low_cell: frac, area, orientation: 1.0 });
                pair2_fracture.push(frac);
                g3.faces.push(Face {
                    measure: area,
                    centroid,
                    normal: orient_outward(n, centroid, cell.centroid),
                    cell: c,
                    neighbor: None,
                    kind: FaceKind::Interface { pair: pairs2.len() - 1 },
                    boundary_tag: -1,
                });
                continue;
            }
            match facet_face.get(&key) {
                Some(&f) => {
                    let face = &mut g3.faces[f];
                    if face.neighbor.is_some() {
                        return Err(MeshError::NonConforming(format!(
                            "facet {facet:?} is shared by more than two cells"
                        )));
                    }
                    face.neighbor = Some(c);
                    face.kind = FaceKind::Interior;
                }
                None => {
                    let (area, centroid, n) = polygon_geometry(&coords(facet));
                    facet_face.insert(key.clone(), g3.faces.len());
                    g3.faces.push(Face {
                        measure: area,
                        centroid,
                        normal: orient_outward(n, centroid, cell.centroid),
                        cell: c,
                        neighbor: None,
                        kind: FaceKind::Domain,
                        boundary_tag: boundary_tags.get(&key).copied().unwrap_or(-1),
                    });
                }
            }
        }
    }
    if let Some(missing) = fracture_hits.iter().position(|&h| h == 0) {
        return Err(MeshError::NonConforming(format!(
            "fracture {} polygon {:?} is not a facet of any 3D cell",
            fractures[missing].1, fractures[missing].0
        )));
    }

    // --- Ω_2 ---
    let mut g2 = SubdomainGrid::empty(2);
    for (poly, id) in &fractures {
        let (area, centroid, n) = polygon_geometry(&coords(poly));
        g2.cells.push(Cell { measure: area, centroid, region_tag: *id, axis: n, nodes: poly.clone() });
    }
    let tagged_lines: HashSet<[usize; 2]> = raw.tagged_lines.iter().map(|e| edge_key(e[0], e[1])).collect();
    let mut edge_cells: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    let mut edge_order: Vec<[usize; 2]> = Vec::new();
    for (c, cell) in g2.cells.iter().enumerate() {
        let n = cell.nodes.len();
        for k in 0..n {
            let e = edge_key(cell.nodes[k], cell.nodes[(k + 1) % n]);
            let entry = edge_cells.entry(e).or_default();
            if entry.is_empty() {
                edge_order.push(e);
            }
            entry.push(c);
        }
    }
    let mut line_index: HashMap<[usize; 2], usize> = HashMap::new();
    let mut lines: Vec<[usize; 2]> = Vec::new();
    for e in &edge_order {
        let cells = &edge_cells[e];
        let ids: HashSet<i32> = cells.iter().map(|&c| g2.cells[c].region_tag).collect();
        if cells.len() >= 3 || ids.len() >= 2 || tagged_lines.contains(e) {
            line_index.insert(*e, lines.len());
            lines.push(*e);
        }
    }
    let mut pairs1: Vec<InterfacePair> = Vec::new();
    let mut edge_face: HashMap<[usize; 2], usize> = HashMap::new();
    for c in 0..g2.cells.len() {
        let (nodes, centroid, axis) = {
            let cell = &g2.cells[c];
            (cell.nodes.clone(), cell.centroid, cell.axis)
        };
        let n = nodes.len();
        for k in 0..n {
            let (a, b) = (nodes[k], nodes[(k + 1) % n]);
            let e = edge_key(a, b);
            let (pa, pb) = (raw.nodes[a], raw.nodes[b]);
            let length = norm(sub(pb, pa));
            let mid = scale(add(pa, pb), 0.5);
            let normal = orient_outward(normalize(cross(sub(pb, pa), axis)), mid, centroid);
            if let Some(&line) = line_index.get(&e) {
                let face_id = g2.faces.len();
                pairs1.push(InterfacePair { high_face: face_id, low_cell: line, area: length, orientation: 1.0 });
                g2.faces.push(Face {
                    measure: length,
                    centroid: mid,
                    normal,
                    cell: c,
                    neighbor: None,
                    kind: FaceKind::Interface { pair: pairs1.len() - 1 },
                    boundary_tag: -1,
                });
                continue;
            }
            match edge_face.get(&e) {
                Some(&f) => {
                    g2.faces[f].neighbor = Some(c);
                    g2.faces[f].kind = FaceKind::Interior;
                }
                None => {
                    edge_face.insert(e, g2.faces.len());
                    let kind = if domain.on_boundary(mid, tol) { FaceKind::Domain } else { FaceKind::Tip };
                    g2.faces.push(Face {
                        measure: length,
                        centroid: mid,
                        normal,
                        cell: c,
                        neighbor: None,
                        kind,
                        boundary_tag: -1,
                    });
                }
            }
        }
    }

    // --- Ω_1 ---
    let mut g1 = SubdomainGrid::empty(1);
    let mut vertex_lines: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut vertex_order: Vec<usize> = Vec::new();
    for (l, e) in lines.iter().enumerate() {
        let (pa, pb) = (raw.nodes[e[0]], raw.nodes[e[1]]);
        g1.cells.push(Cell {
            measure: norm(sub(pb, pa)),
            centroid: scale(add(pa, pb), 0.5),
            region_tag: -1,
            axis: normalize(sub(pb, pa)),
            nodes: e.to_vec(),
        });
        for v in e {
            let entry = vertex_lines.entry(*v).or_default();
            if entry.is_empty() {
                vertex_order.push(*v);
            }
            entry.push(l);
        }
    }
    let tagged_points: HashSet<usize> = raw.tagged_points.iter().copied().collect();
    let mut point_index: HashMap<usize, usize> = HashMap::new();
    let mut points: Vec<usize> = Vec::new();
    for v in &vertex_order {
        let incident = &vertex_lines[v];
        let crossing = match incident.len() {
            0 | 1 => false,
            2 => {
                let (t0, t1) = (g1.cells[incident[0]].axis, g1.cells[incident[1]].axis);
                norm(cross(t0, t1)) > 1e-6
            }
            _ => true,
        };
        if crossing || tagged_points.contains(v) {
            point_index.insert(*v, points.len());
            points.push(*v);
        }
    }
    let mut pairs0: Vec<InterfacePair> = Vec::new();
    let mut vertex_face: HashMap<usize, usize> = HashMap::new();
    for l in 0..g1.cells.len() {
        let cell = g1.cells[l].clone();
        for &v in &cell.nodes {
            let p = raw.nodes[v];
            let normal = orient_outward(cell.axis, p, cell.centroid);
            if let Some(&pt) = point_index.get(&v) {
                let face_id = g1.faces.len();
                pairs0.push(InterfacePair { high_face: face_id, low_cell: pt, area: 1.0, orientation: 1.0 });
                g1.faces.push(Face {
                    measure: 1.0,
                    centroid: p,
                    normal,
                    cell: l,
                    neighbor: None,
                    kind: FaceKind::Interface { pair: pairs0.len() - 1 },
                    boundary_tag: -1,
                });
                continue;
            }
            match vertex_face.get(&v) {
                Some(&f) => {
                    g1.faces[f].neighbor = Some(l);
                    g1.faces[f].kind = FaceKind::Interior;
                }
                None => {
                    vertex_face.insert(v, g1.faces.len());
                    let kind = if domain.on_boundary(p, tol) { FaceKind::Domain } else { FaceKind::Tip };
                    g1.faces.push(Face {
                        measure: 1.0,
                        centroid: p,
                        normal,
                        cell: l,
                        neighbor: None,
                        kind,
                        boundary_tag: -1,
                    });
                }
            }
        }
    }

    // --- Ω_0 ---
    let mut g0 = SubdomainGrid::empty(0);
    for &v in &points {
        g0.cells.push(Cell { measure: 1.0, centroid: raw.nodes[v], region_tag: -1, axis: [0.0; 3], nodes: vec![v] });
    }

    let mut grid = MixedDimGrid {
        nodes: raw.nodes,
        subdomains: [g0, g1, g2, g3],
        interfaces: [
            InterfaceSet { dim_low: 0, pairs: pairs0 },
            InterfaceSet { dim_low: 1, pairs: pairs1 },
            InterfaceSet { dim_low: 2, pairs: pairs2 },
        ],
        domain,
    };
    grid.set_apertures([1.0; 4]);
    Ok(grid)
}
