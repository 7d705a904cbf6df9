//! The four benchmark configurations: parameters, boundary patches, time stepping
//! and the reports each one asks for.

mod run;
mod tables;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::flow::FlowError;
use crate::geometry::{BoundingBox, Vec3};
use crate::mdgrid::ValidationReport;
use crate::mesh_io::MeshError;
use crate::postproc::PostprocError;
use crate::transport::TransportError;

pub use run::{
    build_regular_grid, output_files, run_case, CaseOutcome, CaseReport, OutputFiles, RunDiagnostics, RunOptions,
};
pub use tables::{
    region_id, NUM_REGULAR_REGIONS, REGULAR_FRACTURES, REGULAR_LOW_CONDUCTIVITY_REGIONS, SINGLE_FRACTURE,
    SMALL_FEATURES_FRACTURES,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown case '{0}' (expected single, regular, small_features or field)")]
    UnknownCase(String),
    #[error("refinement {refinement} out of range for case {case} (0..={max})")]
    Refinement { case: CaseId, refinement: usize, max: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("grid failed validation:\n{0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Postproc(#[from] PostprocError),
}

impl BenchError {
    pub(crate) fn invalid_grid(report: &ValidationReport) -> Self {
        let lines: Vec<String> = report.errors().map(|v| v.to_string()).collect();
        BenchError::InvalidGrid(lines.join("\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    Single,
    Regular,
    SmallFeatures,
    Field,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Single, CaseId::Regular, CaseId::SmallFeatures, CaseId::Field];

    /// Folder name used in the output layout.
    pub fn name(self) -> &'static str {
        match self {
            CaseId::Single => "single",
            CaseId::Regular => "regular",
            CaseId::SmallFeatures => "small_features",
            CaseId::Field => "field",
        }
    }

    pub fn max_refinement(self) -> usize {
        match self {
            CaseId::Single | CaseId::Regular => 2,
            CaseId::SmallFeatures => 1,
            CaseId::Field => 0,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| BenchError::UnknownCase(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchRole {
    Inlet,
    Outlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchCondition {
    Head(f64),
    /// Prescribed normal velocity (m/s, negative for inflow).
    Velocity(f64),
    /// Share of the case's total inflow, spread uniformly over all such patches.
    UniformInflow,
}

/// Axis-aligned rectangle on a face of the domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPatch {
    pub name: String,
    pub role: PatchRole,
    /// Axis normal to the patch and the plane coordinate.
    pub axis: usize,
    pub value: f64,
    /// Open intervals for the two in-plane axes; the entry for `axis` is ignored.
    pub ranges: [(f64, f64); 3],
    pub condition: PatchCondition,
}

impl BoundaryPatch {
    /// True if a face centroid lies on the patch: on the plane within `tol`, strictly
    /// inside the in-plane intervals.
    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        (p[self.axis] - self.value).abs() <= tol
            && (0..3).filter(|&k| k != self.axis).all(|k| p[k] > self.ranges[k].0 && p[k] < self.ranges[k].1)
    }
}

/// How lower-dimensional faces on the domain boundary are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerDimBoundary {
    /// Same patch condition as the matrix.
    Inherit,
    /// Always no-flux.
    NoFlux,
}

/// Matrix conductivity (m/s) and porosity for a set of region tags.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixZone {
    pub tags: Vec<i32>,
    pub conductivity: f64,
    pub porosity: f64,
}

/// Effective parameters of one lower-dimensional feature class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    /// Effective tangential conductivity `K_d` (unused for points).
    pub tangential: f64,
    /// Effective normal conductivity `kappa_d`.
    pub normal: f64,
    pub porosity: f64,
    pub aperture: f64,
}

/// Full description of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub case: CaseId,
    pub refinement: usize,
    pub cond: Option<u8>,
    pub domain: BoundingBox,
    pub matrix_zones: Vec<MatrixZone>,
    /// Parameters for matrix tags not listed in any zone.
    pub matrix_default: Option<(f64, f64)>,
    /// Indexed by dimension 0..=2; `None` where the case defines no such features.
    pub features: [Option<FeatureParams>; 3],
    pub patches: Vec<BoundaryPatch>,
    pub lower_dim_boundary: LowerDimBoundary,
    /// Total volumetric inflow over all [`PatchCondition::UniformInflow`] patches (m^3/s).
    pub total_inflow: Option<f64>,
    pub c_in: f64,
    pub dt: f64,
    pub nsteps: usize,
    /// Number of fractures whose mean concentration is reported.
    pub fracture_count: usize,
}

fn patch(
    name: &str,
    role: PatchRole,
    axis: usize,
    value: f64,
    ranges: [(f64, f64); 3],
    condition: PatchCondition,
) -> BoundaryPatch {
    BoundaryPatch { name: name.to_string(), role, axis, value, ranges, condition }
}

const ANY: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

impl CaseSpec {
    pub fn new(case: CaseId, refinement: usize, cond: Option<u8>) -> Result<Self, BenchError> {
        if refinement > case.max_refinement() {
            return Err(BenchError::Refinement { case, refinement, max: case.max_refinement() });
        }
        match (case, cond) {
            (CaseId::Regular, Some(0 | 1)) => {}
            (CaseId::Regular, Some(c)) => return Err(BenchError::Config(format!("cond must be 0 or 1, got {c}"))),
            (CaseId::Regular, None) => return Err(BenchError::Config("case regular needs a cond value".into())),
            (_, Some(_)) => return Err(BenchError::Config(format!("cond only applies to case regular, not {case}"))),
            _ => {}
        }
        Ok(match case {
            CaseId::Single => Self::single(refinement),
            CaseId::Regular => Self::regular(refinement, cond.unwrap_or(0)),
            CaseId::SmallFeatures => Self::small_features(refinement),
            CaseId::Field => Self::field(),
        })
    }

    fn single(refinement: usize) -> Self {
        use PatchCondition::Head;
        use PatchRole::*;
        CaseSpec {
            case: CaseId::Single,
            refinement,
            cond: None,
            domain: BoundingBox::new([0.0; 3], [100.0; 3]),
            matrix_zones: vec![
                MatrixZone { tags: vec![1, 2], conductivity: 1e-6, porosity: 2e-1 },
                MatrixZone { tags: vec![3], conductivity: 1e-5, porosity: 2.5e-1 },
            ],
            matrix_default: None,
            features: [
                None,
                None,
                Some(FeatureParams { tangential: 1e-3, normal: 20.0, porosity: 4e-1, aperture: 1e-2 }),
            ],
            patches: vec![
                patch("inlet", Inlet, 0, 0.0, [ANY, (0.0, 100.0), (90.0, 100.0)], Head(4.0)),
                patch("outlet", Outlet, 1, 0.0, [(0.0, 100.0), ANY, (0.0, 100.0)], Head(1.0)),
            ],
            lower_dim_boundary: LowerDimBoundary::Inherit,
            total_inflow: None,
            c_in: 1e-2,
            dt: 1e7,
            nsteps: 100,
            fracture_count: 1,
        }
    }

    fn regular(refinement: usize, cond: u8) -> Self {
        let (k2, kappa2, k1, kappa1, kappa0, phi_f) =
            if cond == 0 { (1.0, 2e8, 1e-4, 2e4, 2.0, 9e-1) } else { (1e-8, 2.0, 1e-12, 2e-4, 2e-8, 1e-2) };
        let mut patches = Vec::new();
        // three faces meeting at each of the two corners
        for axis in 0..3 {
            let mut hi = [ANY; 3];
            let mut lo = [ANY; 3];
            for k in (0..3).filter(|&k| k != axis) {
                hi[k] = (0.875, f64::INFINITY);
                lo[k] = (f64::NEG_INFINITY, 0.25);
            }
            patches.push(patch("flux", PatchRole::Inlet, axis, 0.0, lo, PatchCondition::Velocity(-1.0)));
            patches.push(patch("head", PatchRole::Outlet, axis, 1.0, hi, PatchCondition::Head(1.0)));
        }
        CaseSpec {
            case: CaseId::Regular,
            refinement,
            cond: Some(cond),
            domain: BoundingBox::unit_cube(),
            matrix_zones: vec![MatrixZone {
                tags: REGULAR_LOW_CONDUCTIVITY_REGIONS.to_vec(),
                conductivity: 1e-1,
                porosity: 1e-1,
            }],
            matrix_default: Some((1.0, 1e-1)),
            features: [
                Some(FeatureParams { tangential: 0.0, normal: kappa0, porosity: phi_f, aperture: 1e-12 }),
                Some(FeatureParams { tangential: k1, normal: kappa1, porosity: phi_f, aperture: 1e-8 }),
                Some(FeatureParams { tangential: k2, normal: kappa2, porosity: phi_f, aperture: 1e-4 }),
            ],
            patches,
            lower_dim_boundary: LowerDimBoundary::NoFlux,
            total_inflow: None,
            c_in: 1.0,
            dt: 0.25 / 100.0,
            nsteps: 100,
            fracture_count: 9,
        }
    }

    /// Parameters shared by the small-features and field cases.
    fn network_features() -> [Option<FeatureParams>; 3] {
        [
            Some(FeatureParams { tangential: 0.0, normal: 2e2, porosity: 2e-1, aperture: 1e-6 }),
            Some(FeatureParams { tangential: 1.0, normal: 2e4, porosity: 2e-1, aperture: 1e-4 }),
            Some(FeatureParams { tangential: 1e2, normal: 2e6, porosity: 2e-1, aperture: 1e-2 }),
        ]
    }

    fn small_features(refinement: usize) -> Self {
        use PatchRole::*;
        let third = 1.0 / 3.0;
        let two_thirds = 2.0 / 3.0;
        CaseSpec {
            case: CaseId::SmallFeatures,
            refinement,
            cond: None,
            domain: BoundingBox::new([0.0; 3], [1.0, 2.25, 1.0]),
            matrix_zones: Vec::new(),
            matrix_default: Some((1.0, 2e-1)),
            features: Self::network_features(),
            patches: vec![
                patch("in", Inlet, 1, 0.0, [(0.0, 1.0), ANY, (third, two_thirds)], PatchCondition::UniformInflow),
                patch("out0", Outlet, 1, 2.25, [(0.0, 1.0), ANY, (0.0, third)], PatchCondition::Head(0.0)),
                patch("out1", Outlet, 1, 2.25, [(0.0, 1.0), ANY, (two_thirds, 1.0)], PatchCondition::Head(0.0)),
            ],
            lower_dim_boundary: LowerDimBoundary::Inherit,
            total_inflow: Some(-1.0 / 3.0),
            c_in: 1.0,
            dt: 1e-2,
            nsteps: 100,
            fracture_count: 8,
        }
    }

    fn field() -> Self {
        use PatchRole::*;
        CaseSpec {
            case: CaseId::Field,
            refinement: 0,
            cond: None,
            domain: BoundingBox::new([-500.0, 100.0, -100.0], [350.0, 1500.0, 500.0]),
            matrix_zones: Vec::new(),
            matrix_default: Some((1.0, 2e-1)),
            features: Self::network_features(),
            patches: vec![
                patch("in0", Inlet, 1, 1500.0, [(-500.0, -200.0), ANY, (300.0, 500.0)], PatchCondition::UniformInflow),
                patch("in1", Inlet, 0, -500.0, [ANY, (1200.0, 1500.0), (300.0, 500.0)], PatchCondition::UniformInflow),
                patch("out0", Outlet, 0, -500.0, [ANY, (100.0, 400.0), (-100.0, 100.0)], PatchCondition::Head(0.0)),
                patch("out1", Outlet, 0, 350.0, [ANY, (100.0, 400.0), (-100.0, 100.0)], PatchCondition::Head(0.0)),
            ],
            lower_dim_boundary: LowerDimBoundary::Inherit,
            total_inflow: Some(-1.2e5),
            c_in: 1.0,
            dt: 50.0,
            nsteps: 100,
            fracture_count: 52,
        }
    }

    /// Restricts the single-fracture outlet to the band `z < 10` instead of the whole
    /// `y = 0` face.
    pub fn with_outlet_band(mut self) -> Result<Self, BenchError> {
        if self.case != CaseId::Single {
            return Err(BenchError::Config("the outlet band option only applies to case single".into()));
        }
        for p in &mut self.patches {
            if p.role == PatchRole::Outlet {
                p.ranges[2] = (0.0, 10.0);
            }
        }
        Ok(self)
    }

    /// Replaces the time step, keeping the total simulated time.
    pub fn with_time_step(mut self, dt: f64) -> Result<Self, BenchError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(BenchError::Config(format!("time step must be positive, got {dt}")));
        }
        let total = self.total_time();
        let steps = (total / dt).round();
        if steps < 1.0 || ((steps * dt - total).abs() > 1e-9 * total) {
            return Err(BenchError::Config(format!("time step {dt} does not divide the simulated time {total}")));
        }
        self.dt = dt;
        self.nsteps = steps as usize;
        Ok(self)
    }

    pub fn with_fracture_count(mut self, count: usize) -> Self {
        self.fracture_count = count;
        self
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.nsteps as f64
    }

    /// Cells per axis of the built-in lattice for the regular case.
    pub fn lattice_cells(&self) -> Option<usize> {
        (self.case == CaseId::Regular).then(|| 8 << self.refinement)
    }

    /// Conductivity and porosity of a matrix region tag.
    pub fn matrix_params(&self, tag: i32) -> Option<(f64, f64)> {
        self.matrix_zones
            .iter()
            .find(|z| z.tags.contains(&tag))
            .map(|z| (z.conductivity, z.porosity))
            .or(self.matrix_default)
    }

    /// Index of the patch containing a boundary face centroid.
    pub fn classify(&self, p: Vec3) -> Option<usize> {
        let tol = 1e-8 * self.domain.diameter();
        self.patches.iter().position(|patch| patch.contains(p, tol))
    }

    /// Human-readable parameter table.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<44} {v}\n"));
        line("case", self.case.to_string());
        if let Some(c) = self.cond {
            line("cond", c.to_string());
        }
        line("domain min (m)", format!("{:?}", self.domain.min));
        line("domain max (m)", format!("{:?}", self.domain.max));
        for z in &self.matrix_zones {
            line(
                &format!("matrix regions {:?}: K3 (m/s), phi3", z.tags),
                format!("{:e}, {}", z.conductivity, z.porosity),
            );
        }
        if let Some((k, phi)) = self.matrix_default {
            line("matrix (other regions): K3 (m/s), phi3", format!("{k:e}, {phi}"));
        }
        let names = ["points", "intersection lines", "fractures"];
        for (d, f) in self.features.iter().enumerate() {
            if let Some(f) = f {
                if d > 0 {
                    line(&format!("{}: effective K{d}", names[d]), format!("{:e}", f.tangential));
                }
                line(&format!("{}: effective kappa{d}", names[d]), format!("{:e}", f.normal));
                line(&format!("{}: porosity phi{d}", names[d]), format!("{}", f.porosity));
                line(&format!("{}: cross-section eps{d}", names[d]), format!("{:e}", f.aperture));
            }
        }
        for p in &self.patches {
            let cond = match p.condition {
                PatchCondition::Head(h) => format!("head {h} m"),
                PatchCondition::Velocity(u) => format!("normal velocity {u} m/s"),
                PatchCondition::UniformInflow => {
                    format!("uniform inflow, total {:e} m^3/s", self.total_inflow.unwrap_or(f64::NAN))
                }
            };
            line(&format!("boundary {} ({:?})", p.name, p.role), cond);
        }
        line("inflow concentration c_in", format!("{}", self.c_in));
        line("time step (s) x steps", format!("{:e} x {}", self.dt, self.nsteps));
        line("reported fractures", self.fracture_count.to_string());
        let files = output_files(self.case, self.cond, self.refinement);
        line("results file", files.results.clone());
        for d in &files.dol {
            line("line plot file", d.clone());
        }
        line("time series file", files.dot);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_tables() {
        let s = CaseSpec::new(CaseId::Single, 0, None).unwrap();
        assert_eq!(s.matrix_params(3), Some((1e-5, 0.25)));
        assert_eq!(s.features[2].unwrap().aperture, 1e-2);
        let r = CaseSpec::new(CaseId::Regular, 1, Some(1)).unwrap();
        let f = r.features;
        assert_eq!((f[2].unwrap().tangential, f[1].unwrap().normal, f[2].unwrap().porosity), (1e-8, 2e-4, 1e-2));
        let fld = CaseSpec::new(CaseId::Field, 0, None).unwrap();
        assert_eq!((fld.features[2].unwrap().normal, fld.features[1].unwrap().aperture), (2e6, 1e-4));
        assert_eq!(fld.total_inflow, Some(-1.2e5));
    }

    #[test]
    fn time_grids() {
        for (case, cond, dt) in [
            (CaseId::Single, None, 1e7),
            (CaseId::Regular, Some(0), 0.0025),
            (CaseId::SmallFeatures, None, 1e-2),
            (CaseId::Field, None, 50.0),
        ] {
            let s = CaseSpec::new(case, 0, cond).unwrap();
            assert_eq!((s.dt, s.nsteps), (dt, 100));
        }
    }

    #[test]
    fn invalid_combinations() {
        assert!(CaseSpec::new(CaseId::Single, 0, Some(0)).is_err());
        assert!(CaseSpec::new(CaseId::Regular, 0, None).is_err());
        assert!(CaseSpec::new(CaseId::SmallFeatures, 2, None).is_err());
        assert!("nope".parse::<CaseId>().is_err());
    }

    #[test]
    fn boundary_examples() {
        let r = CaseSpec::new(CaseId::Regular, 0, Some(0)).unwrap();
        let k = r.classify([0.9375, 1.0, 0.9375]).unwrap();
        assert_eq!(r.patches[k].condition, PatchCondition::Head(1.0));
        let s3 = CaseSpec::new(CaseId::SmallFeatures, 0, None).unwrap();
        assert_eq!(s3.patches[s3.classify([0.5, 0.0, 0.5]).unwrap()].name, "in");
        let s1 = CaseSpec::new(CaseId::Single, 0, None).unwrap();
        assert_eq!(s1.patches[s1.classify([50.0, 0.0, 50.0]).unwrap()].name, "outlet");
        let banded = s1.with_outlet_band().unwrap();
        assert_eq!(banded.classify([50.0, 0.0, 50.0]), None);
    }
}
