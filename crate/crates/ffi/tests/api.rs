use std::ffi::{CStr, CString};
use std::ptr;

use fracflow_ffi::*;

fn last_error() -> String {
    let p = fracflow_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn regular_grid_round_trip() {
    unsafe {
        let mut grid = ptr::null_mut();
        assert_eq!(fracflow_grid_regular(0, &mut grid), FracflowStatus::Ok);
        let mut n = 0;
        assert_eq!(fracflow_grid_cell_count(grid, 3, &mut n), FracflowStatus::Ok);
        assert_eq!(n, 512);
        let mut errors = usize::MAX;
        assert_eq!(fracflow_grid_validate(grid, &mut errors), FracflowStatus::Ok);
        assert_eq!(errors, 0);

        let case = CString::new("regular").unwrap();
        let mut run = ptr::null_mut();
        assert_eq!(fracflow_run_case(case.as_ptr(), 0, 0, grid, &mut run), FracflowStatus::Ok);
        let (mut data, mut len) = (ptr::null(), 0);
        assert_eq!(fracflow_run_heads(run, 3, &mut data, &mut len), FracflowStatus::Ok);
        assert_eq!(len, 512);
        let heads = std::slice::from_raw_parts(data, len);
        assert!(heads.iter().all(|h| h.is_finite() && *h >= 1.0));

        let mut levels = 0;
        assert_eq!(fracflow_run_num_levels(run, &mut levels), FracflowStatus::Ok);
        assert_eq!(levels, 101);
        let mut t = 0.0;
        assert_eq!(fracflow_run_concentration(run, 100, &mut t, &mut data, &mut len), FracflowStatus::Ok);
        assert!((t - 0.25).abs() < 1e-12);
        assert_eq!(fracflow_run_concentration(run, 101, &mut t, &mut data, &mut len), FracflowStatus::InvalidArgument);

        let mut d = FracflowDiagnostics::default();
        assert_eq!(fracflow_run_diagnostics(run, &mut d), FracflowStatus::Ok);
        assert!(d.flow_imbalance <= 1e-8 && d.max_budget_error <= 1e-8);
        assert!((d.inlet_flux + 0.1875).abs() < 1e-12);

        let dir = tempfile::tempdir().unwrap();
        let cdir = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(fracflow_run_write_reports(run, cdir.as_ptr()), FracflowStatus::Ok);
        for f in ["dol_cond_0_refinement_0.csv", "dot_cond_0.csv", "results_cond_0.csv"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        fracflow_run_free(run);
        fracflow_grid_free(grid);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut grid = ptr::null_mut();
        let missing = CString::new("/nonexistent/mesh.msh").unwrap();
        assert_eq!(fracflow_grid_from_msh_file(missing.as_ptr(), &mut grid), FracflowStatus::MeshError);
        assert!(grid.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(fracflow_grid_regular(7, &mut grid), FracflowStatus::InvalidArgument);
        assert!(last_error().contains("refinement"));

        assert_eq!(fracflow_grid_regular(0, ptr::null_mut()), FracflowStatus::NullPointer);
        let mut n = 0;
        assert_eq!(fracflow_grid_cell_count(ptr::null(), 3, &mut n), FracflowStatus::NullPointer);

        assert_eq!(fracflow_grid_regular(0, &mut grid), FracflowStatus::Ok);
        assert_eq!(fracflow_grid_cell_count(grid, 4, &mut n), FracflowStatus::InvalidArgument);
        let mut run = ptr::null_mut();
        let case = CString::new("single").unwrap();
        assert_eq!(fracflow_run_case(case.as_ptr(), 0, 1, grid, &mut run), FracflowStatus::InvalidArgument);
        let case = CString::new("nope").unwrap();
        assert_eq!(fracflow_run_case(case.as_ptr(), 0, -1, grid, &mut run), FracflowStatus::InvalidArgument);
        assert!(run.is_null());
        fracflow_grid_free(grid);
        fracflow_grid_free(ptr::null_mut());
        fracflow_run_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(fracflow_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
