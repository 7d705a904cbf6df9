//! Derived quantities (line samples, region integrals, boundary tracer fluxes, fracture
//! means) and the comma-separated report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::flow::{FlowDiscretization, FlowSolution};
use crate::geometry::{add, distance, dot, scale, sub, BoundingBox, Vec3};
use crate::mdgrid::{MixedDimGrid, SubdomainGrid};

#[derive(Debug, Error)]
pub enum PostprocError {
    #[error("sampling line has coincident end points")]
    DegenerateLine,
    #[error("field has {found} values but dimension {dim} has {expected} cells")]
    FieldSize { dim: usize, expected: usize, found: usize },
    #[error("selection '{0}' matches nothing")]
    EmptySelection(String),
    #[error("row {row} has {found} columns, expected {expected}")]
    ColumnCount { row: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse '{field}'")]
    Parse { line: usize, field: String },
    #[error("line samples differ in length: {0:?}")]
    SampleLength(Vec<usize>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Number of equidistant samples in every line plot.
pub const DOL_SAMPLES: usize = 2000;

/// Distance within which a sample point falling between cells takes the nearest value.
pub const GAP_TOLERANCE: f64 = 1e-6;

/// Piecewise-constant samples along a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSample {
    pub arc_length: Vec<f64>,
    /// `NaN` where no cell was found (see `gaps`).
    pub values: Vec<f64>,
    /// Indices of samples that found no cell.
    pub gaps: Vec<usize>,
}

/// Bucketed cell lookup for one subdomain.
pub struct CellLocator<'a> {
    grid: &'a SubdomainGrid,
    cell_faces: Vec<Vec<usize>>,
    bounds: BoundingBox,
    divisions: [usize; 3],
    buckets: Vec<Vec<usize>>,
    tol: f64,
}

impl<'a> CellLocator<'a> {
    pub fn new(grid: &'a MixedDimGrid, dim: usize) -> Self {
        let sub = &grid.subdomains[dim];
        let bounds = grid.domain;
        let n = sub.num_cells().max(1) as f64;
        let m = (n.cbrt().ceil() as usize).clamp(1, 64);
        let divisions = [m; 3];
        let mut buckets = vec![Vec::new(); m * m * m];
        let mut locator = CellLocator {
            grid: sub,
            cell_faces: sub.cell_faces(),
            bounds,
            divisions,
            buckets: Vec::new(),
            tol: 1e-9 * bounds.diameter(),
        };
        for (c, cell) in sub.cells.iter().enumerate() {
            let bb = BoundingBox::of_points(cell.nodes.iter().map(|&i| &grid.nodes[i]));
            let lo = locator.bucket_coords(bb.min);
            let hi = locator.bucket_coords(bb.max);
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        buckets[i + m * (j + m * k)].push(c);
                    }
                }
            }
        }
        locator.buckets = buckets;
        locator
    }

    fn bucket_coords(&self, p: Vec3) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let span = self.bounds.max[k] - self.bounds.min[k];
            let t = if span > 0.0 { (p[k] - self.bounds.min[k]) / span } else { 0.0 };
            ((t * self.divisions[k] as f64).floor().max(0.0) as usize).min(self.divisions[k] - 1)
        })
    }

    /// How far `p` lies outside cell `c` (zero or negative inside).
    fn outside(&self, c: usize, p: Vec3) -> f64 {
        let cell = &self.grid.cells[c];
        let mut worst = f64::NEG_INFINITY;
        for &f in &self.cell_faces[c] {
            let face = &self.grid.faces[f];
            let n = if face.cell == c { face.normal } else { scale(face.normal, -1.0) };
            worst = worst.max(dot(n, sub(p, face.centroid)));
        }
        if self.grid.dim == 2 {
            worst = worst.max(dot(cell.axis, sub(p, cell.centroid)).abs());
        }
        if self.grid.dim == 0 || self.cell_faces[c].is_empty() {
            worst = distance(p, cell.centroid);
        }
        worst
    }

    /// Lowest-index cell containing `p`, or the nearest one within [`GAP_TOLERANCE`].
    pub fn locate(&self, p: Vec3) -> Option<usize> {
        let [i, j, k] = self.bucket_coords(p);
        let m = self.divisions[0];
        let candidates = &self.buckets[i + m * (j + m * k)];
        let mut best: Option<(f64, usize)> = None;
        for &c in candidates {
            let d = self.outside(c, p);
            if d <= self.tol {
                return Some(c);
            }
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        best.filter(|&(d, _)| d <= GAP_TOLERANCE).map(|(_, c)| c)
    }
}

/// Samples a cell field of dimension `dim` at [`DOL_SAMPLES`] equidistant points.
pub fn plot_over_line(
    grid: &MixedDimGrid,
    dim: usize,
    field: &[f64],
    p0: Vec3,
    p1: Vec3,
) -> Result<LineSample, PostprocError> {
    let length = distance(p0, p1);
    if length == 0.0 {
        return Err(PostprocError::DegenerateLine);
    }
    check_field(grid, dim, field)?;
    let locator = CellLocator::new(grid, dim);
    let last = (DOL_SAMPLES - 1) as f64;
    let mut sample = LineSample { arc_length: Vec::new(), values: Vec::new(), gaps: Vec::new() };
    for k in 0..DOL_SAMPLES {
        let t = k as f64 / last;
        let p = add(p0, scale(sub(p1, p0), t));
        sample.arc_length.push(k as f64 * length / last);
        match locator.locate(p) {
            Some(c) => sample.values.push(field[c]),
            None => {
                sample.gaps.push(k);
                sample.values.push(f64::NAN);
            }
        }
    }
    Ok(sample)
}

fn check_field(grid: &MixedDimGrid, dim: usize, field: &[f64]) -> Result<(), PostprocError> {
    let expected = grid.subdomains[dim].num_cells();
    if field.len() != expected {
        return Err(PostprocError::FieldSize { dim, expected, found: field.len() });
    }
    Ok(())
}

/// `sum weight(c) * field(c) * measure(c)` over the selected cells of one dimension.
pub fn region_integral(
    grid: &MixedDimGrid,
    dim: usize,
    field: &[f64],
    weight: impl Fn(usize) -> f64,
    select: impl Fn(usize) -> bool,
    name: &str,
) -> Result<f64, PostprocError> {
    check_field(grid, dim, field)?;
    let mut total = 0.0;
    let mut any = false;
    for (c, cell) in grid.subdomains[dim].cells.iter().enumerate() {
        if select(c) {
            any = true;
            total += weight(c) * field[c] * cell.measure;
        }
    }
    if !any {
        return Err(PostprocError::EmptySelection(name.to_string()));
    }
    Ok(total)
}

/// Weighted average `sum w c |cell| / sum w |cell|` over the selected cells.
pub fn region_average(
    grid: &MixedDimGrid,
    dim: usize,
    field: &[f64],
    weight: impl Fn(usize) -> f64,
    select: impl Fn(usize) -> bool,
    name: &str,
) -> Result<f64, PostprocError> {
    check_field(grid, dim, field)?;
    let (mut num, mut den) = (0.0, 0.0);
    let mut uniform: Option<f64> = None;
    let mut is_uniform = true;
    for (c, cell) in grid.subdomains[dim].cells.iter().enumerate() {
        if select(c) {
            let w = weight(c) * cell.measure;
            num += w * field[c];
            den += w;
            is_uniform &= uniform.is_none_or(|u| u == field[c]);
            uniform = Some(field[c]);
        }
    }
    if den == 0.0 {
        return Err(PostprocError::EmptySelection(name.to_string()));
    }
    // a constant field averages to itself without rounding
    Ok(match uniform {
        Some(u) if is_uniform => u,
        _ => num / den,
    })
}

/// Upwinded tracer flux leaving through the selected boundary connections.
///
/// Outflow faces carry the adjacent cell value, inflow faces the prescribed
/// concentration `inflow_c(k)`.
pub fn boundary_tracer_flux(
    disc: &FlowDiscretization,
    flow: &FlowSolution,
    c: &[f64],
    inflow_c: impl Fn(usize) -> f64,
    select: impl Fn(usize) -> bool,
    name: &str,
) -> Result<f64, PostprocError> {
    let mut total = 0.0;
    let mut any = false;
    for (k, (b, &q)) in disc.boundary.iter().zip(&flow.boundary_flux).enumerate() {
        if !select(k) {
            continue;
        }
        any = true;
        total += if q > 0.0 { q * c[b.dof] } else { q * inflow_c(k) };
    }
    if !any {
        return Err(PostprocError::EmptySelection(name.to_string()));
    }
    Ok(total)
}

/// Volume-weighted mean concentration per fracture id `0..count`.
pub fn fracture_means(
    grid: &MixedDimGrid,
    c2: &[f64],
    weight: impl Fn(usize) -> f64,
    count: usize,
) -> Result<Vec<f64>, PostprocError> {
    (0..count as i32)
        .map(|id| {
            region_average(
                grid,
                2,
                c2,
                &weight,
                |c| grid.subdomains[2].cells[c].region_tag == id,
                &format!("fracture {id}"),
            )
        })
        .collect()
}

/// One CSV field: counts are printed as integers, everything else as shortest
/// round-trip decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
}

impl Field {
    fn parse(s: &str) -> Option<Field> {
        if let Ok(i) = s.parse::<i64>() {
            return Some(Field::Int(i));
        }
        s.parse::<f64>().ok().map(Field::Float)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Int(i) => write!(f, "{i}"),
            Field::Float(v) => f.write_str(&format_float(*v)),
        }
    }
}

/// Serializes rows with a comma delimiter and no header.
pub fn to_csv(rows: &[Vec<Field>]) -> String {
    let mut out = String::new();
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn float_rows(rows: &[Vec<f64>]) -> Vec<Vec<Field>> {
    rows.iter().map(|r| r.iter().map(|&v| Field::Float(v)).collect()).collect()
}

/// Parses a headerless CSV written by [`to_csv`], checking a fixed column count.
pub fn parse_csv(text: &str, columns: Option<usize>) -> Result<Vec<Vec<Field>>, PostprocError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row: Vec<Field> = line
            .split(',')
            .map(|s| Field::parse(s).ok_or_else(|| PostprocError::Parse { line: i + 1, field: s.to_string() }))
            .collect::<Result<_, _>>()?;
        if let Some(n) = columns {
            if row.len() != n {
                return Err(PostprocError::ColumnCount { row: i + 1, expected: n, found: row.len() });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Interleaves several line samples into `arc, value, arc, value, ...` rows.
pub fn dol_rows(samples: &[&LineSample]) -> Result<Vec<Vec<f64>>, PostprocError> {
    let lengths: Vec<usize> = samples.iter().flat_map(|s| [s.arc_length.len(), s.values.len()]).collect();
    let rows = lengths.first().copied().unwrap_or(0);
    if lengths.iter().any(|&l| l != rows) {
        return Err(PostprocError::SampleLength(lengths));
    }
    Ok((0..rows).map(|k| samples.iter().flat_map(|s| [s.arc_length[k], s.values[k]]).collect()).collect())
}

fn write_file(path: &Path, contents: &str) -> Result<(), PostprocError> {
    let io = |source| PostprocError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

/// Writes a dol file and, if any sample fell outside all cells, a `.gaps.log` sidecar.
pub fn write_dol(path: &Path, samples: &[&LineSample]) -> Result<(), PostprocError> {
    write_file(path, &to_csv(&float_rows(&dol_rows(samples)?)))?;
    let mut log = String::new();
    for (i, s) in samples.iter().enumerate() {
        for &k in &s.gaps {
            let _ = writeln!(
                log,
                "line {i} sample {k} (arc length {}) has no containing cell",
                format_float(s.arc_length[k])
            );
        }
    }
    let sidecar = path.with_extension("gaps.log");
    if log.is_empty() {
        if sidecar.exists() {
            std::fs::remove_file(&sidecar).map_err(|source| PostprocError::Io { path: sidecar.clone(), source })?;
        }
        Ok(())
    } else {
        write_file(&sidecar, &log)
    }
}

pub fn write_dot(path: &Path, rows: &[Vec<f64>]) -> Result<(), PostprocError> {
    write_file(path, &to_csv(&float_rows(rows)))
}

pub fn write_results(path: &Path, rows: &[Vec<Field>]) -> Result<(), PostprocError> {
    write_file(path, &to_csv(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_rows_are_verbatim() {
        let rows = vec![vec![0.0, 3.36948657742311], vec![0.5, 5.38490345323433], vec![1.0, 8.34820934803293]];
        let text = to_csv(&float_rows(&rows));
        assert_eq!(text, "0.0,3.36948657742311\n0.5,5.38490345323433\n1.0,8.34820934803293\n");
        assert_eq!(to_csv(&parse_csv(&text, Some(2)).unwrap()), text);
    }

    #[test]
    fn integers_stay_integers() {
        let row = vec![vec![Field::Int(0), Field::Int(512), Field::Float(1e-12), Field::Float(-0.25)]];
        let text = to_csv(&row);
        assert_eq!(text, "0,512,1e-12,-0.25\n");
        assert_eq!(to_csv(&parse_csv(&text, Some(4)).unwrap()), text);
    }

    #[test]
    fn column_count_is_checked() {
        assert!(matches!(parse_csv("1,2\n1\n", Some(2)), Err(PostprocError::ColumnCount { row: 2, .. })));
    }
}
