//! Mesh ingestion: Gmsh MSH 2.2 files, the fracture polygon CSV, and the built-in
//! Cartesian mesher for axis-aligned fracture networks.

mod cartesian;
mod complex;
mod gmsh;
mod msh;

use thiserror::Error;

pub use cartesian::{cartesian_dfm_mesher, FractureRectangle, Lattice};
pub use gmsh::{build_mixed_grid, Role, TagConvention};
pub use msh::{parse_msh, write_msh, Element, ElementType, MshDocument, PhysicalName};

use crate::geometry::Vec3;
use crate::mdgrid::MixedDimGrid;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unresolved physical tag: {0}")]
    Tag(String),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("invalid mesh structure: {0}")]
    Structure(String),
    #[error("geometry off the lattice: {0}")]
    OffLattice(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads an MSH file and builds the grid with the default tag convention.
pub fn load_msh_grid(path: &std::path::Path) -> Result<MixedDimGrid, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let doc = parse_msh(&text)?;
    let conv = TagConvention::from_physical_names(&doc)?;
    build_mixed_grid(&doc, &conv)
}

/// Parses a fracture polygon file: one polygon per line as `x0,y0,z0,x1,y1,z1,...`.
///
/// Blank lines are skipped. Each polygon needs at least three vertices.
pub fn parse_fracture_csv(text: &str) -> Result<Vec<Vec<Vec3>>, MeshError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| MeshError::Parse { line: i + 1, message: format!("invalid number: {e}") })?;
        if !values.len().is_multiple_of(3) || values.len() < 9 {
            return Err(MeshError::Parse {
                line: i + 1,
                message: format!("expected at least three x,y,z triples, found {} values", values.len()),
            });
        }
        out.push(values.chunks(3).map(|c| [c[0], c[1], c[2]]).collect());
    }
    Ok(out)
}

pub fn write_fracture_csv(polygons: &[Vec<Vec3>]) -> String {
    let mut out = String::new();
    for poly in polygons {
        let fields: Vec<String> = poly.iter().flat_map(|p| p.iter().map(|v| format!("{v:?}"))).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fracture_csv_parses_polygons() {
        let polys = parse_fracture_csv("0,0,0,1,0,0,1,1,0,0,1,0\n\n0,0,1,1,0,1,1,1,1\n").unwrap();
        assert_eq!(polys.len(), 2);
        assert_eq!(polys[0].len(), 4);
        assert_eq!(polys[1][2], [1.0, 1.0, 1.0]);
        assert_eq!(parse_fracture_csv(&write_fracture_csv(&polys)).unwrap(), polys);
    }

    #[test]
    fn fracture_csv_rejects_ragged_rows() {
        assert!(matches!(parse_fracture_csv("0,0,0,1,0"), Err(MeshError::Parse { line: 1, .. })));
        assert!(matches!(parse_fracture_csv("0,0,0\n0,0,x,1,1,1,2,2,2"), Err(MeshError::Parse { line: 1, .. })));
    }
}
