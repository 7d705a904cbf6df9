//! Conversion of tagged MSH documents into mixed-dimensional grids.

use std::collections::HashMap;

use super::complex::{assemble, RawCell, RawComplex};
use super::msh::{ElementType, MshDocument};
use super::MeshError;
use crate::geometry::tetrahedron_geometry;
use crate::mdgrid::MixedDimGrid;

/// What an element contributes to the mixed-dimensional grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Tetrahedron of the given matrix region.
    Matrix(i32),
    /// Triangle belonging to the given fracture.
    Fracture(i32),
    /// Line on a fracture intersection.
    Intersection,
    /// Point where intersection lines meet.
    Point,
    /// Boundary triangle with a physical tag.
    Boundary(i32),
    Ignore,
}

/// Physical group to role mapping.
///
/// The default convention reads physical names: `MATRIX_<region>`, `FRACTURE_<k>`,
/// `INTERSECTION[_<k>]`, `POINT[_<k>]` and `BOUNDARY_<name>`. Unnamed volume tags are
/// taken as matrix regions numbered by the tag itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagConvention {
    roles: HashMap<(usize, i32), Role>,
}

impl TagConvention {
    pub fn from_physical_names(doc: &MshDocument) -> Result<Self, MeshError> {
        let mut conv = TagConvention::default();
        for p in &doc.physical_names {
            let role = parse_role(&p.name, p.tag)
                .ok_or_else(|| MeshError::Tag(format!("physical name '{}' matches no known role", p.name)))?;
            let expected_dim = match role {
                Role::Matrix(_) => Some(3),
                Role::Fracture(_) | Role::Boundary(_) => Some(2),
                Role::Intersection => Some(1),
                Role::Point => Some(0),
                Role::Ignore => None,
            };
            if expected_dim.is_some_and(|d| d != p.dim) {
                return Err(MeshError::Tag(format!(
                    "physical name '{}' has dimension {} which does not fit its role",
                    p.name, p.dim
                )));
            }
            conv.roles.insert((p.dim, p.tag), role);
        }
        Ok(conv)
    }

    pub fn with_role(mut self, dim: usize, tag: i32, role: Role) -> Self {
        self.roles.insert((dim, tag), role);
        self
    }

    pub fn resolve(&self, dim: usize, tag: i32) -> Option<Role> {
        self.roles.get(&(dim, tag)).copied().or(if dim == 3 { Some(Role::Matrix(tag)) } else { None })
    }
}

fn parse_role(name: &str, tag: i32) -> Option<Role> {
    let suffix_num = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<i32>().ok());
    if let Some(r) = suffix_num("MATRIX_") {
        return Some(Role::Matrix(r));
    }
    if let Some(k) = suffix_num("FRACTURE_") {
        return Some(Role::Fracture(k));
    }
    if name == "INTERSECTION" || name.starts_with("INTERSECTION_") {
        return Some(Role::Intersection);
    }
    if name == "POINT" || name.starts_with("POINT_") {
        return Some(Role::Point);
    }
    if name.starts_with("BOUNDARY_") {
        return Some(Role::Boundary(tag));
    }
    if name == "IGNORE" {
        return Some(Role::Ignore);
    }
    None
}

/// Builds the mixed-dimensional grid described by a tagged MSH document.
pub fn build_mixed_grid(doc: &MshDocument, conv: &TagConvention) -> Result<MixedDimGrid, MeshError> {
    let mut index = HashMap::with_capacity(doc.nodes.len());
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (id, p) in &doc.nodes {
        index.insert(*id, nodes.len());
        nodes.push(*p);
    }
    let mut raw = RawComplex::default();
    for (id, e) in &doc.elements {
        let dim = e.kind.dim();
        let role = conv.resolve(dim, e.physical).ok_or_else(|| {
            MeshError::Tag(format!("element {id}: physical tag {} (dim {dim}) has no role", e.physical))
        })?;
        let ids: Vec<usize> = e.nodes.iter().map(|n| index[n]).collect();
        match (e.kind, role) {
            (ElementType::Tetrahedron, Role::Matrix(region)) => {
                let p = [nodes[ids[0]], nodes[ids[1]], nodes[ids[2]], nodes[ids[3]]];
                let (measure, centroid) = tetrahedron_geometry(p);
                if measure <= 0.0 {
                    return Err(MeshError::Structure(format!("element {id}: degenerate tetrahedron")));
                }
                let [a, b, c, d] = [ids[0], ids[1], ids[2], ids[3]];
                raw.cells.push(RawCell {
                    nodes: ids.clone(),
                    facets: vec![vec![a, b, c], vec![a, b, d], vec![a, c, d], vec![b, c, d]],
                    measure,
                    centroid,
                    region,
                });
            }
            (ElementType::Triangle, Role::Fracture(k)) => raw.fractures.push((ids, k)),
            (ElementType::Triangle, Role::Boundary(t)) => raw.boundary_tags.push((ids, t)),
            (ElementType::Line, Role::Intersection) => raw.tagged_lines.push([ids[0], ids[1]]),
            (ElementType::Point, Role::Point) => raw.tagged_points.push(ids[0]),
            (_, Role::Ignore) => {}
            (kind, role) => {
                return Err(MeshError::Tag(format!("element {id}: {kind:?} cannot take role {role:?}")));
            }
        }
    }
    raw.nodes = nodes;
    if raw.cells.is_empty() {
        return Err(MeshError::Structure("mesh contains no tetrahedra".into()));
    }
    assemble(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdgrid::validate;
    use crate::mesh_io::msh::parse_msh;

    pub(crate) const TWO_TETS: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
2 10 \"FRACTURE_0\"
3 1 \"MATRIX_0\"
$EndPhysicalNames
$Nodes
5
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
5 0 0 -1
$EndNodes
$Elements
3
1 4 2 1 1 1 2 3 4
2 4 2 1 1 1 3 2 5
3 2 2 10 2 1 2 3
$EndElements
";

    #[test]
    fn smallest_dfm_mesh() {
        let doc = parse_msh(TWO_TETS).unwrap();
        let grid = build_mixed_grid(&doc, &TagConvention::from_physical_names(&doc).unwrap()).unwrap();
        assert_eq!(grid.cell_counts(), [0, 0, 1, 2]);
        assert_eq!(grid.interfaces[2].pairs.len(), 2);
        assert!((grid.subdomains[3].cells[0].measure - 1.0 / 6.0).abs() < 1e-15);
        // fracture edges lie on the bounding box faces
        let report = validate(&grid);
        assert!(report.is_valid(), "{report:?}");
    }

    #[test]
    fn non_conforming_fracture_is_rejected() {
        let text = TWO_TETS.replace("3 2 2 10 2 1 2 3", "3 2 2 10 2 2 4 5");
        let doc = parse_msh(&text).unwrap();
        let err = build_mixed_grid(&doc, &TagConvention::from_physical_names(&doc).unwrap());
        assert!(matches!(err, Err(MeshError::NonConforming(_))), "{err:?}");
    }

    #[test]
    fn unknown_physical_name_is_rejected() {
        let text = TWO_TETS.replace("FRACTURE_0", "CRACK");
        let doc = parse_msh(&text).unwrap();
        assert!(matches!(TagConvention::from_physical_names(&doc), Err(MeshError::Tag(_))));
    }
}
