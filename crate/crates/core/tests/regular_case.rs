use fracflow::bench::{build_regular_grid, run_case, CaseId, CaseSpec, RunOptions};

fn run(cond: u8) -> fracflow::bench::CaseOutcome {
    let spec = CaseSpec::new(CaseId::Regular, 0, Some(cond)).unwrap();
    let grid = build_regular_grid(&spec).unwrap();
    run_case(&spec, grid, RunOptions::default()).unwrap()
}

#[test]
fn coarse_runs_conserve() {
    for cond in [0, 1] {
        let out = run(cond);
        let d = &out.diagnostics;
        eprintln!("cond {cond}: {d:?}");
        assert!(d.flow_imbalance <= 1e-8, "{}", d.flow_imbalance);
        assert!(d.max_budget_error <= 1e-8);
        assert!(d.concentration_range.0 >= -1e-12 && d.concentration_range.1 <= 1.0 + 1e-12);
        assert!((d.inlet_flux + 0.1875).abs() < 1e-12);
        // only inflow and the unit outlet head drive the flow
        assert!(d.head_range.0 >= 1.0 - 1e-12, "{:?}", d.head_range);
        assert_eq!(out.report.dot_rows.len(), 100);
        assert_eq!(out.report.dot_rows[0].len(), 23);
    }
}
