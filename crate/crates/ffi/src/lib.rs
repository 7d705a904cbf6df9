//! C ABI over the fracflow solver.
//!
//! Grids and runs are opaque handles owned by the caller and released with the
//! matching `_free` function. Every fallible call returns a [`FracflowStatus`]; on
//! failure the message is available from [`fracflow_last_error_message`] on the same
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fracflow::bench::{
    build_regular_grid, output_files, run_case, BenchError, CaseId, CaseOutcome, CaseSpec, RunOptions,
};
use fracflow::mdgrid::{validate, MixedDimGrid};
use fracflow::postproc::{write_dol, write_dot, write_results};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FracflowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    InvalidGrid = 4,
    SolverError = 5,
    IoError = 6,
    Panic = 7,
}

/// Opaque mixed-dimensional grid.
pub struct FracflowGrid {
    grid: MixedDimGrid,
}

/// Opaque result of a benchmark run.
pub struct FracflowRun {
    outcome: CaseOutcome,
}

/// Scalar checks of a finished run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FracflowDiagnostics {
    pub num_dofs: usize,
    pub nnz: usize,
    pub flow_iterations: usize,
    pub flow_imbalance: f64,
    pub inlet_flux: f64,
    pub head_min: f64,
    pub head_max: f64,
    pub concentration_min: f64,
    pub concentration_max: f64,
    pub max_budget_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(FracflowStatus, String);

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        let status = match &e {
            BenchError::UnknownCase(_) | BenchError::Refinement { .. } | BenchError::Config(_) => {
                FracflowStatus::InvalidArgument
            }
            BenchError::InvalidGrid(_) => FracflowStatus::InvalidGrid,
            BenchError::Mesh(_) => FracflowStatus::MeshError,
            BenchError::Postproc(_) => FracflowStatus::IoError,
            BenchError::Flow(_) | BenchError::Transport(_) => FracflowStatus::SolverError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FracflowStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(FracflowStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FracflowStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FracflowStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FracflowStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fracflow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fracflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads an MSH 2.2 file into a new grid handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracflow_grid_from_msh_file(
    path: *const c_char,
    out: *mut *mut FracflowGrid,
) -> FracflowStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let grid = fracflow::mesh_io::load_msh_grid(Path::new(path))
            .map_err(|e| Failure(FracflowStatus::MeshError, e.to_string()))?;
        *out = Box::into_raw(Box::new(FracflowGrid { grid }));
        Ok(())
    })
}

/// Builds the lattice grid of the regular network case at the given refinement.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracflow_grid_regular(refinement: u32, out: *mut *mut FracflowGrid) -> FracflowStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let spec = CaseSpec::new(CaseId::Regular, refinement as usize, Some(0))?;
        let grid = build_regular_grid(&spec)?;
        *out = Box::into_raw(Box::new(FracflowGrid { grid }));
        Ok(())
    })
}

/// Number of cells of dimension `dim` (0 to 3).
///
/// # Safety
/// `grid` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracflow_grid_cell_count(
    grid: *const FracflowGrid,
    dim: u32,
    out: *mut usize,
) -> FracflowStatus {
    guard(|| {
        let grid = handle(grid, "grid")?;
        let out = out_arg(out, "out")?;
        if dim > 3 {
            return Err(invalid(format!("dimension {dim} out of range")));
        }
        *out = grid.grid.subdomains[dim as usize].num_cells();
        Ok(())
    })
}

/// Checks the grid invariants. Returns `InvalidGrid` with the violation list as the
/// error message if any check fails; `num_errors` receives the count either way.
///
/// # Safety
/// `grid` must come from this library; `num_errors` may be null.
#[no_mangle]
pub unsafe extern "C" fn fracflow_grid_validate(grid: *const FracflowGrid, num_errors: *mut usize) -> FracflowStatus {
    guard(|| {
        let grid = handle(grid, "grid")?;
        let report = validate(&grid.grid);
        let errors: Vec<String> = report.errors().map(|v| v.to_string()).collect();
        if let Some(n) = num_errors.as_mut() {
            *n = errors.len();
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Failure(FracflowStatus::InvalidGrid, errors.join("\n")))
        }
    })
}

/// Releases a grid. Null is ignored.
///
/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fracflow_grid_free(grid: *mut FracflowGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Runs flow and transport of a benchmark case on a copy of `grid`.
///
/// `case_name` is one of `single`, `regular`, `small_features`, `field`; `cond` is 0
/// or 1 for `regular` and negative otherwise.
///
/// # Safety
/// `case_name` must be a NUL-terminated string, `grid` a handle from this library and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_case(
    case_name: *const c_char,
    refinement: u32,
    cond: i32,
    grid: *const FracflowGrid,
    out: *mut *mut FracflowRun,
) -> FracflowStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let case: CaseId = str_arg(case_name, "case_name")?.parse()?;
        let grid = handle(grid, "grid")?;
        let cond = match cond {
            c if c < 0 => None,
            0 | 1 => Some(cond as u8),
            c => return Err(invalid(format!("cond must be 0, 1 or negative, got {c}"))),
        };
        let spec = CaseSpec::new(case, refinement as usize, cond)?;
        let outcome = run_case(&spec, grid.grid.clone(), RunOptions::default())?;
        *out = Box::into_raw(Box::new(FracflowRun { outcome }));
        Ok(())
    })
}

/// Borrowed view of the cell heads of dimension `dim`. The data lives as long as `run`.
///
/// # Safety
/// `run` must come from this library; `data` and `len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_heads(
    run: *const FracflowRun,
    dim: u32,
    data: *mut *const f64,
    len: *mut usize,
) -> FracflowStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let (data, len) = (out_arg(data, "data")?, out_arg(len, "len")?);
        if dim > 3 {
            return Err(invalid(format!("dimension {dim} out of range")));
        }
        let h = &run.outcome.flow.heads[dim as usize];
        *data = h.as_ptr();
        *len = h.len();
        Ok(())
    })
}

/// Number of time levels stored, including the initial state.
///
/// # Safety
/// `run` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_num_levels(run: *const FracflowRun, out: *mut usize) -> FracflowStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(run, "run")?.outcome.transport.states.len();
        Ok(())
    })
}

/// Borrowed view of the concentration at time level `level` over all unknowns,
/// ordered matrix cells first, then fractures, intersection lines and points.
///
/// # Safety
/// `run` must come from this library; `time`, `data` and `len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_concentration(
    run: *const FracflowRun,
    level: usize,
    time: *mut f64,
    data: *mut *const f64,
    len: *mut usize,
) -> FracflowStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let (time, data, len) = (out_arg(time, "time")?, out_arg(data, "data")?, out_arg(len, "len")?);
        let states = &run.outcome.transport.states;
        let s =
            states.get(level).ok_or_else(|| invalid(format!("level {level} out of range (0..{})", states.len())))?;
        *time = s.time;
        *data = s.c.as_ptr();
        *len = s.c.len();
        Ok(())
    })
}

/// Fills `out` with the run's conservation and range checks.
///
/// # Safety
/// `run` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_diagnostics(
    run: *const FracflowRun,
    out: *mut FracflowDiagnostics,
) -> FracflowStatus {
    guard(|| {
        let d = &handle(run, "run")?.outcome.diagnostics;
        *out_arg(out, "out")? = FracflowDiagnostics {
            num_dofs: d.num_dofs,
            nnz: d.nnz,
            flow_iterations: d.flow_iterations,
            flow_imbalance: d.flow_imbalance,
            inlet_flux: d.inlet_flux,
            head_min: d.head_range.0,
            head_max: d.head_range.1,
            concentration_min: d.concentration_range.0,
            concentration_max: d.concentration_range.1,
            max_budget_error: d.max_budget_error,
        };
        Ok(())
    })
}

/// Writes the run's dol, dot and results files into `dir`, which must exist.
///
/// # Safety
/// `run` must come from this library and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_write_reports(run: *const FracflowRun, dir: *const c_char) -> FracflowStatus {
    guard(|| {
        let o = &handle(run, "run")?.outcome;
        let dir = Path::new(str_arg(dir, "dir")?);
        if !dir.is_dir() {
            return Err(Failure(FracflowStatus::IoError, format!("{} is not a directory", dir.display())));
        }
        let io = |e: fracflow::postproc::PostprocError| Failure(FracflowStatus::IoError, e.to_string());
        let files = output_files(o.spec.case, o.spec.cond, o.spec.refinement);
        for (name, samples) in files.dol.iter().zip(&o.report.dol) {
            let refs: Vec<_> = samples.iter().collect();
            write_dol(&dir.join(name), &refs).map_err(io)?;
        }
        write_dot(&dir.join(&files.dot), &o.report.dot_rows).map_err(io)?;
        write_results(&dir.join(&files.results), std::slice::from_ref(&o.report.results_row)).map_err(io)?;
        Ok(())
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fracflow_run_free(run: *mut FracflowRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
