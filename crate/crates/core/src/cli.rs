//! Command-line driver: `run`, `validate-mesh`, `case-info`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{build_regular_grid, output_files, run_case, BenchError, CaseId, CaseOutcome, CaseSpec, RunOptions};
use crate::flow::IntersectionModel;
use crate::mdgrid::{validate, MixedDimGrid};
use crate::mesh_io::{load_msh_grid, parse_fracture_csv, MeshError};
use crate::postproc::{write_dol, write_dot, write_results, PostprocError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fracflow", version, about = "Flow and tracer transport in fractured porous media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Resolved,
    Condensed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one benchmark case and write its report files.
    Run {
        #[arg(long, value_parser = parse_case)]
        case: CaseId,
        /// Refinement levels, e.g. `0` or `0,1,2`.
        #[arg(long, value_delimiter = ',', required = true)]
        refinement: Vec<usize>,
        #[arg(long)]
        cond: Option<u8>,
        /// MSH 2.2 mesh, one per refinement level in the same order.
        #[arg(long)]
        mesh: Vec<PathBuf>,
        /// Fracture polygons of the field case; sets the number of reported fractures.
        #[arg(long)]
        fractures: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Time step; the simulated time is kept.
        #[arg(long)]
        dt: Option<f64>,
        /// Relative residual for the flow solver.
        #[arg(long, default_value_t = 1e-13)]
        solver_tol: f64,
        /// Restrict the single-fracture outlet to z < 10 m.
        #[arg(long)]
        outlet_band: bool,
        #[arg(long, value_enum, default_value = "resolved")]
        intersections: Model,
        #[arg(long, default_value = "FRACFLOW")]
        institution: String,
        #[arg(long, default_value = "TPFA")]
        scheme: String,
    },
    /// Check a mesh file and list violations.
    ValidateMesh { path: PathBuf },
    /// Print the parameters and expected output files of a case.
    CaseInfo {
        #[arg(value_parser = parse_case)]
        name: CaseId,
        #[arg(long)]
        cond: Option<u8>,
    },
}

fn parse_case(s: &str) -> Result<CaseId, String> {
    s.parse().map_err(|e: BenchError| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Postproc(#[from] PostprocError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("mesh {path} is invalid:\n{report}")]
    InvalidMesh { path: PathBuf, report: String },
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Bench(BenchError::Config(_) | BenchError::Refinement { .. } | BenchError::UnknownCase(_)) => {
                EXIT_USAGE
            }
            _ => EXIT_RUNTIME,
        }
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run {
            case,
            refinement,
            cond,
            mesh,
            fractures,
            out,
            dt,
            solver_tol,
            outlet_band,
            intersections,
            institution,
            scheme,
        } => {
            let model = match intersections {
                Model::Resolved => IntersectionModel::Resolved,
                Model::Condensed => IntersectionModel::Condensed,
            };
            if !(solver_tol > 0.0 && solver_tol < 1.0) {
                return Err(CliError::Usage(format!("--solver-tol must lie in (0, 1), got {solver_tol}")));
            }
            let args = RunArgs { case, refinement, cond, mesh, fractures, dt, outlet_band };
            let dir = out.join(case.name()).join("results").join(&institution).join(&scheme);
            run(&args, &dir, RunOptions { solver_tol, model })
        }
        Command::ValidateMesh { path } => {
            let grid = load_msh_grid(&path)?;
            let report = validate(&grid);
            let counts = grid.cell_counts();
            println!("{}: cells per dimension (0..3) {:?}", path.display(), counts);
            for v in &report.violations {
                println!("{v}");
            }
            if report.is_valid() {
                println!("ok");
                Ok(())
            } else {
                let lines: Vec<String> = report.errors().map(|v| v.to_string()).collect();
                Err(CliError::InvalidMesh { path, report: lines.join("\n") })
            }
        }
        Command::CaseInfo { name, cond } => {
            let cond = if name == CaseId::Regular { Some(cond.unwrap_or(0)) } else { cond };
            print!("{}", CaseSpec::new(name, 0, cond)?.describe());
            Ok(())
        }
    }
}

struct RunArgs {
    case: CaseId,
    refinement: Vec<usize>,
    cond: Option<u8>,
    mesh: Vec<PathBuf>,
    fractures: Option<PathBuf>,
    dt: Option<f64>,
    outlet_band: bool,
}

fn build_spec(args: &RunArgs, refinement: usize) -> Result<CaseSpec, CliError> {
    let mut spec = CaseSpec::new(args.case, refinement, args.cond)?;
    if args.outlet_band {
        spec = spec.with_outlet_band()?;
    }
    if let Some(dt) = args.dt {
        spec = spec.with_time_step(dt)?;
    }
    Ok(spec)
}

fn load_grid(spec: &CaseSpec, mesh: Option<&PathBuf>) -> Result<MixedDimGrid, CliError> {
    match mesh {
        Some(path) => Ok(load_msh_grid(path)?),
        None => Ok(build_regular_grid(spec)?),
    }
}

fn run(args: &RunArgs, dir: &Path, options: RunOptions) -> Result<(), CliError> {
    let mut levels = args.refinement.clone();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() != args.refinement.len() {
        return Err(CliError::Usage("refinement levels must be distinct".into()));
    }
    // validate every level before any work
    let specs: Vec<CaseSpec> = args.refinement.iter().map(|&r| build_spec(args, r)).collect::<Result<_, _>>()?;
    if args.case != CaseId::Regular && args.mesh.is_empty() {
        return Err(CliError::Usage(format!("case {} needs --mesh", args.case)));
    }
    if !args.mesh.is_empty() && args.mesh.len() != args.refinement.len() {
        return Err(CliError::Usage(format!(
            "{} meshes given for {} refinement levels",
            args.mesh.len(),
            args.refinement.len()
        )));
    }
    if args.fractures.is_some() && args.case != CaseId::Field {
        return Err(CliError::Usage("--fractures only applies to case field".into()));
    }
    if args.outlet_band && args.case != CaseId::Single {
        return Err(CliError::Usage("--outlet-band only applies to case single".into()));
    }
    let fracture_count = match &args.fractures {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Some(parse_fracture_csv(&text)?.len())
        }
        None => None,
    };
    let specs: Vec<CaseSpec> = match fracture_count {
        Some(n) => specs.into_iter().map(|s| s.with_fracture_count(n)).collect(),
        None => specs,
    };

    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    // pair each level with its mesh, then run coarsest first
    let mut jobs: Vec<(CaseSpec, Option<&PathBuf>)> =
        specs.into_iter().enumerate().map(|(i, s)| (s, args.mesh.get(i))).collect();
    jobs.sort_by_key(|(s, _)| s.refinement);
    let dot_level = if args.case == CaseId::Regular {
        if levels.contains(&1) {
            1
        } else {
            levels[0]
        }
    } else {
        usize::MAX
    };

    let mut rows = Vec::new();
    let mut results_name = String::new();
    for (spec, mesh) in &jobs {
        let grid = load_grid(spec, *mesh)?;
        let outcome = run_case(spec, grid, options)?;
        log_outcome(&outcome);
        let files = output_files(spec.case, spec.cond, spec.refinement);
        for (name, samples) in files.dol.iter().zip(&outcome.report.dol) {
            let refs: Vec<_> = samples.iter().collect();
            write_dol(&dir.join(name), &refs)?;
        }
        if spec.case != CaseId::Regular || spec.refinement == dot_level {
            write_dot(&dir.join(&files.dot), &outcome.report.dot_rows)?;
        }
        rows.push(outcome.report.results_row.clone());
        results_name = files.results;
    }
    write_results(&dir.join(&results_name), &rows)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn log_outcome(o: &CaseOutcome) {
    let d = &o.diagnostics;
    eprintln!(
        "{} refinement {}: cells {:?}, dof {}, nnz {}, flow iterations {} (residual {:e}), imbalance {:e}, \
         inlet flux {:e}, outlet flux {:?}, head [{}, {}], concentration [{}, {}], budget error {:e}, transport {}",
        o.spec.case,
        o.spec.refinement,
        o.grid.cell_counts(),
        d.num_dofs,
        d.nnz,
        d.flow_iterations,
        d.flow_residual,
        d.flow_imbalance,
        d.inlet_flux,
        d.outlet_flux,
        d.head_range.0,
        d.head_range.1,
        d.concentration_range.0,
        d.concentration_range.1,
        d.max_budget_error,
        d.transport_method,
    );
}
