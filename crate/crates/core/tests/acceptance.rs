//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the libtest harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fracflow::bench::{build_regular_grid, run_case, CaseId, CaseOutcome, CaseSpec, RunOptions, REGULAR_FRACTURES};
use fracflow::flow::{
    assemble_flow, effective_normal, effective_tangential, solve_flow, ConductivityField, FaceBc, FlowBc,
    FlowDiscretization, FlowSolution, IntersectionModel,
};
use fracflow::geometry::{isotropic, BoundingBox};
use fracflow::mdgrid::MixedDimGrid;
use fracflow::mesh_io::{cartesian_dfm_mesher, load_msh_grid, parse_fracture_csv, FractureRectangle, Lattice};
use fracflow::oracle::{dense_reassembly_check, dense_transport, head_jump, matrix_head_l2, SlabProblem, SlabRegime};
use fracflow::postproc::{parse_csv, to_csv, write_dol, Field, LineSample, DOL_SAMPLES};
use fracflow::transport::{assemble_transport, run_transport, TransportState};

type Check = Result<String, String>;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Every case at its coarsest level, shared by criteria 3 to 5.
struct Runs {
    outcomes: Vec<CaseOutcome>,
}

fn case_spec(case: CaseId, refinement: usize, cond: Option<u8>) -> Result<CaseSpec, String> {
    let spec = CaseSpec::new(case, refinement, cond).map_err(fail)?;
    if case == CaseId::Field {
        let text = fs::read_to_string(data("fracture_network.csv")).map_err(fail)?;
        let n = parse_fracture_csv(&text).map_err(fail)?.len();
        return Ok(spec.with_fracture_count(n));
    }
    Ok(spec)
}

fn run_coarsest() -> Result<Runs, String> {
    let mut outcomes = Vec::new();
    let configs: [(CaseId, Option<u8>, Option<&str>); 5] = [
        (CaseId::Single, None, Some("single_refinement_0.msh")),
        (CaseId::Regular, Some(0), None),
        (CaseId::Regular, Some(1), None),
        (CaseId::SmallFeatures, None, Some("small_features_refinement_0.msh")),
        (CaseId::Field, None, Some("field.msh")),
    ];
    for (case, cond, mesh) in configs {
        let spec = case_spec(case, 0, cond)?;
        let grid = match mesh {
            Some(m) => load_msh_grid(&data(m)).map_err(fail)?,
            None => build_regular_grid(&spec).map_err(fail)?,
        };
        outcomes.push(run_case(&spec, grid, RunOptions::default()).map_err(|e| format!("{case}: {e}"))?);
    }
    Ok(Runs { outcomes })
}

fn label(o: &CaseOutcome) -> String {
    match o.spec.cond {
        Some(c) => format!("{} cond {c}", o.spec.case),
        None => o.spec.case.to_string(),
    }
}

fn unit_lattice(n: usize, fractures: &[FractureRectangle]) -> Result<MixedDimGrid, String> {
    cartesian_dfm_mesher(&Lattice::cube(BoundingBox::unit_cube(), n), fractures, |_| 1).map_err(fail)
}

fn regular_fractures(ids: std::ops::Range<usize>) -> Vec<FractureRectangle> {
    ids.map(|i| FractureRectangle { id: i as i32, corners: REGULAR_FRACTURES[i] }).collect()
}

/// Conductivities for aperture `a` with fracture parameter `kf` in all dimensions.
fn fracture_conductivity(grid: &mut MixedDimGrid, a: f64, km: f64, kf: f64) -> Result<ConductivityField, String> {
    let eps = [a * a * a, a * a, a, 1.0];
    grid.set_apertures(eps);
    let tangential: Vec<f64> = (0..4)
        .map(|d| if d == 3 { Ok(km) } else { effective_tangential(kf, eps[d]) })
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    let normal: Vec<f64> =
        (0..3).map(|d| effective_normal(kf, eps[d + 1], a)).collect::<Result<_, _>>().map_err(fail)?;
    Ok(ConductivityField::from_fn(grid, |d, _| isotropic(tangential[d]), |d, _| normal[d]))
}

fn x_dirichlet(grid: &MixedDimGrid, left: f64, right: f64) -> FlowBc {
    FlowBc::from_fn(grid, |d, f| {
        let x = grid.subdomains[d].faces[f].centroid[0];
        if x < 1e-10 {
            FaceBc::Head(left)
        } else if x > 1.0 - 1e-10 {
            FaceBc::Head(right)
        } else {
            FaceBc::NoFlux
        }
    })
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let grid = unit_lattice(8, &[])?;
    let cond = ConductivityField::from_fn(&grid, |_, _| isotropic(1.0), |_, _| 1.0);
    let bc = x_dirichlet(&grid, 0.0, 1.0);
    let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).map_err(fail)?;
    let sol = solve_flow(&disc, 1e-14).map_err(fail)?;
    let err =
        grid.subdomains[3].cells.iter().zip(&sol.heads[3]).map(|(c, h)| (h - c.centroid[0]).abs()).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    ensure(err <= 1e-10, || format!("max cell error {err:e}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("max error {err:.2e}, {elapsed:.2?}"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mk = |regime, k| SlabProblem {
        n: 20,
        slab_cells: 2,
        eps: 1e-2,
        k_matrix: 1.0,
        k_fracture: k,
        kappa_fracture: k,
        regime,
    };
    let solve_mixed = |p: &SlabProblem| -> Result<FlowSolution, String> {
        let (grid, cond, bc) = p.mixed_setup().map_err(fail)?;
        let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).map_err(fail)?;
        solve_flow(&disc, 1e-12).map_err(fail)
    };

    let p = mk(SlabRegime::Conductive, 1e2);
    let reference = p.solve().map_err(fail)?;
    let l2 = matrix_head_l2(&p, &reference, &solve_mixed(&p)?.heads[3]);

    let p = mk(SlabRegime::Blocking, 1e-4);
    let reference = p.solve().map_err(fail)?;
    let sol = solve_mixed(&p)?;
    let n = p.n;
    let mixed = head_jump(&p, |i, j, l| sol.heads[3][i + n * (j + n * l)], false);
    let exact = head_jump(&p, |i, j, l| reference.head(i, j, l), true);
    let jump = (mixed - exact).abs() / exact.abs();

    let elapsed = start.elapsed();
    ensure(l2 <= 0.02, || format!("conductive relative L2 {l2:e}"))?;
    ensure(jump <= 0.05, || format!("blocking jump mismatch {jump:e}"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("conductive L2 {l2:.2e}, blocking jump {jump:.2e}, {elapsed:.2?}"))
}

fn criterion_3(runs: &Runs) -> Check {
    let mut worst = (0.0f64, 0.0f64);
    for o in &runs.outcomes {
        let imbalance = o.flow.global_imbalance(&o.disc);
        let steps = &o.transport.diagnostics;
        ensure(steps.len() == 100, || format!("{}: {} steps", label(o), steps.len()))?;
        let budget = steps.iter().map(|s| s.budget_error).fold(0.0, f64::max);
        ensure(imbalance <= 1e-8, || format!("{}: flow imbalance {imbalance:e}", label(o)))?;
        ensure(budget <= 1e-8, || format!("{}: tracer budget {budget:e}", label(o)))?;
        worst = (worst.0.max(imbalance), worst.1.max(budget));
    }
    Ok(format!("{} runs, imbalance {:.1e}, budget {:.1e}", runs.outcomes.len(), worst.0, worst.1))
}

fn criterion_4(runs: &Runs) -> Check {
    // heads on Dirichlet-only lattices, conductive and blocking fractures
    let mut head_excess = 0.0f64;
    for kf in [1e4, 1e-4] {
        let mut grid = unit_lattice(8, &regular_fractures(0..9))?;
        let cond = fracture_conductivity(&mut grid, 1e-4, 1.0, kf)?;
        let bc = x_dirichlet(&grid, 1.0, 0.0);
        let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).map_err(fail)?;
        let sol = solve_flow(&disc, 1e-13).map_err(fail)?;
        for h in sol.heads.iter().flatten() {
            head_excess = head_excess.max(-h).max(h - 1.0);
        }
    }
    ensure(head_excess <= 1e-12, || format!("head leaves [0, 1] by {head_excess:e}"))?;

    let mut c_excess = 0.0f64;
    for o in &runs.outcomes {
        let c_in = o.spec.c_in;
        for s in &o.transport.states {
            for &c in &s.c {
                ensure(c >= -1e-12 && c <= c_in * (1.0 + 1e-12), || {
                    format!("{}: c = {c:e} at t = {} outside [0, {c_in}]", label(o), s.time)
                })?;
                c_excess = c_excess.max(-c).max(c - c_in);
            }
        }
    }
    Ok(format!("head overshoot {head_excess:.1e}, concentration overshoot {c_excess:.1e}"))
}

fn criterion_5(runs: &Runs) -> Check {
    let regular = runs.outcomes.iter().find(|o| o.spec.case == CaseId::Regular).ok_or("no regular run")?;
    let cells = regular.grid.cell_counts()[3];
    ensure(cells == 512, || format!("regular case has {cells} matrix cells"))?;
    for (case, target) in [(CaseId::SmallFeatures, -1.0 / 3.0), (CaseId::Field, -1.2e5)] {
        let o = runs.outcomes.iter().find(|o| o.spec.case == case).ok_or("missing run")?;
        let inflow = o.diagnostics.inlet_flux;
        let rel = (inflow - target).abs() / target.abs();
        ensure(rel <= 1e-12, || format!("{case}: inflow {inflow:e}, expected {target:e}"))?;
    }
    for o in &runs.outcomes {
        ensure(o.spec.nsteps == 100 && o.transport.states.len() == 101, || format!("{}: time grid", label(o)))?;
        let end = o.transport.states.last().map(|s| s.time).unwrap_or(0.0);
        let rel = (end - o.spec.total_time()).abs() / o.spec.total_time();
        ensure(rel <= 1e-12, || format!("{}: ends at {end}", label(o)))?;
    }
    Ok("512 matrix cells, inflows exact, 100 steps each".into())
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["fracflow"];
    argv.extend_from_slice(args);
    match fracflow::cli::main_with_args(argv.iter().copied()) {
        0 => Ok(()),
        code => Err(format!("`fracflow {}` exited with {code}", args.join(" "))),
    }
}

fn check_roundtrip(path: &Path, columns: usize) -> Result<Vec<Vec<Field>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let rows = parse_csv(&text, Some(columns)).map_err(|e| format!("{}: {e}", path.display()))?;
    ensure(to_csv(&rows) == text, || format!("{} does not round-trip", path.display()))?;
    Ok(rows)
}

fn check_dol(path: &Path, columns: usize) -> Result<(), String> {
    let rows = check_roundtrip(path, columns)?;
    ensure(rows.len() == DOL_SAMPLES, || format!("{}: {} rows", path.display(), rows.len()))?;
    let arc: Vec<f64> = rows
        .iter()
        .map(|r| match r[0] {
            Field::Float(v) => v,
            Field::Int(i) => i as f64,
        })
        .collect();
    let step = arc[1] - arc[0];
    for w in arc.windows(2) {
        ensure(w[1] > w[0] && ((w[1] - w[0]) - step).abs() <= 1e-12 * arc[arc.len() - 1].max(1.0), || {
            format!("{}: arc lengths not equidistant", path.display())
        })?;
    }
    Ok(())
}

fn criterion_6() -> Check {
    let tmp = tempfile::tempdir().map_err(fail)?;
    let out = tmp.path().to_str().ok_or("temp path")?;
    let mesh = |n: &str| data(n).to_str().map(String::from).ok_or_else(|| "mesh path".to_string());
    let (single, small, field, net) = (
        mesh("single_refinement_0.msh")?,
        mesh("small_features_refinement_0.msh")?,
        mesh("field.msh")?,
        mesh("fracture_network.csv")?,
    );
    cli(&["run", "--case", "single", "--refinement", "0", "--mesh", &single, "--out", out])?;
    cli(&["run", "--case", "regular", "--cond", "0", "--refinement", "0", "--out", out])?;
    cli(&["run", "--case", "small_features", "--refinement", "0", "--mesh", &small, "--out", out])?;
    cli(&["run", "--case", "field", "--refinement", "0", "--mesh", &field, "--fractures", &net, "--out", out])?;

    let dir = |case: &str| tmp.path().join(case).join("results").join("FRACFLOW").join("TPFA");
    check_dol(&dir("single").join("dol_refinement_0.csv"), 6)?;
    check_dol(&dir("regular").join("dol_cond_0_refinement_0.csv"), 2)?;
    for l in 0..2 {
        check_dol(&dir("small_features").join(format!("dol_line_{l}_refinement_0.csv")), 2)?;
        check_dol(&dir("field").join(format!("dol_line_{l}.csv")), 2)?;
    }
    check_roundtrip(&dir("single").join("dot_refinement_0.csv"), 4)?;
    let dots =
        [("regular", "dot_cond_0.csv", 23), ("small_features", "dot_refinement_0.csv", 9), ("field", "dot.csv", 53)];
    for (case, name, cols) in dots {
        let rows = check_roundtrip(&dir(case).join(name), cols)?;
        ensure(rows.len() == 100, || format!("{case} dot has {} rows", rows.len()))?;
    }
    for (case, name) in [
        ("single", "results.csv"),
        ("regular", "results_cond_0.csv"),
        ("small_features", "results.csv"),
        ("field", "results.csv"),
    ] {
        let path = dir(case).join(name);
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let rows = parse_csv(&text, None).map_err(fail)?;
        ensure(to_csv(&rows) == text, || format!("{} does not round-trip", path.display()))?;
        ensure(rows[0][..6].iter().all(|f| matches!(f, Field::Int(_))), || format!("{case}: counts are not integers"))?;
    }

    // the published sample block
    let sample = LineSample {
        arc_length: vec![0.0, 0.5, 1.0],
        values: vec![3.36948657742311, 5.38490345323433, 8.34820934803293],
        gaps: vec![],
    };
    let path = tmp.path().join("sample.csv");
    write_dol(&path, &[&sample]).map_err(fail)?;
    let text = fs::read_to_string(&path).map_err(fail)?;
    let expected = "0.0,3.36948657742311\n0.5,5.38490345323433\n1.0,8.34820934803293\n";
    ensure(text == expected, || format!("sample rows differ: {text:?}"))?;
    Ok("all files round-trip, 2000-row dol files, dot widths 23/9/53, sample rows verbatim".into())
}

fn criterion_7() -> Check {
    let mut worst_assembly = 0.0f64;
    let mut checked = Vec::new();

    // shipped tetrahedral mesh under 500 unknowns, heterogeneous matrix, mixed conditions
    let mut tiny = load_msh_grid(&data("tiny_fracture.msh")).map_err(fail)?;
    let a = 1e-2;
    tiny.set_apertures([a * a * a, a * a, a, 1.0]);
    let regions: Vec<i32> = tiny.subdomains[3].cells.iter().map(|c| c.region_tag).collect();
    let cond = ConductivityField::from_fn(
        &tiny,
        |d, c| match d {
            3 => isotropic(if regions[c] == 1 { 1e-6 } else { 1e-5 }),
            _ => isotropic(a * 1e-3),
        },
        |_, _| 2.0 / a * 1e-3,
    );
    let bc = FlowBc::from_fn(&tiny, |d, f| {
        let p = tiny.subdomains[d].faces[f].centroid;
        if p[0] < 1e-8 {
            FaceBc::Flux(-1e-7)
        } else if p[1] > 100.0 - 1e-8 {
            FaceBc::Head(1.0 + p[2] / 100.0)
        } else {
            FaceBc::NoFlux
        }
    });
    let disc = assemble_flow(&tiny, &cond, &bc, None, IntersectionModel::Resolved).map_err(fail)?;
    ensure(disc.num_dofs() < 500, || format!("tiny mesh has {} unknowns", disc.num_dofs()))?;
    worst_assembly = worst_assembly.max(dense_reassembly_check(&tiny, &cond, &bc, &disc).map_err(fail)?);
    checked.push(disc.num_dofs());

    // lattices with intersecting fractures
    let mut lattice_problems = Vec::new();
    for (n, ids) in [(4, 0..3), (4, 0..1), (6, 0..3)] {
        let mut grid = unit_lattice(n, &regular_fractures(ids))?;
        let cond = fracture_conductivity(&mut grid, 1e-4, 1.0, 1e4)?;
        let bc = FlowBc::from_fn(&grid, |d, f| {
            let x = grid.subdomains[d].faces[f].centroid[0];
            if x < 1e-10 {
                FaceBc::Flux(-1.0)
            } else if x > 1.0 - 1e-10 {
                FaceBc::Head(0.0)
            } else {
                FaceBc::NoFlux
            }
        });
        let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).map_err(fail)?;
        ensure(disc.num_dofs() < 500, || format!("lattice {n} has {} unknowns", disc.num_dofs()))?;
        worst_assembly = worst_assembly.max(dense_reassembly_check(&grid, &cond, &bc, &disc).map_err(fail)?);
        checked.push(disc.num_dofs());
        lattice_problems.push((grid, disc));
    }
    ensure(worst_assembly <= 1e-12, || format!("dense reassembly differs by {worst_assembly:e}"))?;

    let mut worst_transport = 0.0f64;
    for (grid, disc) in &lattice_problems {
        let cells = grid.num_cells_total();
        if cells > 200 {
            continue;
        }
        worst_transport = worst_transport.max(transport_vs_dense(grid, disc)?);
    }
    ensure(worst_transport <= 1e-10, || format!("transport differs from dense recursion by {worst_transport:e}"))?;
    Ok(format!("assembly {worst_assembly:.1e} on {checked:?} unknowns, transport {worst_transport:.1e}"))
}

fn transport_vs_dense(grid: &MixedDimGrid, disc: &FlowDiscretization) -> Result<f64, String> {
    let flow = solve_flow(disc, 1e-14).map_err(fail)?;
    let storage: Vec<f64> = (0..disc.num_dofs())
        .map(|k| {
            let (d, c) = disc.dofs.local(k);
            let g = &grid.subdomains[d];
            g.aperture[c] * g.cells[c].measure * 0.2
        })
        .collect();
    let inflow_c = |_: usize| 1.0;
    let dt = 0.01;
    let system = assemble_transport(disc, &flow, storage.clone(), inflow_c, dt).map_err(fail)?;
    let initial = vec![0.0; disc.num_dofs()];
    let run = run_transport(&system, disc, TransportState { time: 0.0, c: initial.clone() }, 100).map_err(fail)?;
    let dense = dense_transport(disc, &flow, &storage, inflow_c, dt, &initial, 100).map_err(fail)?;
    let mut worst = 0.0f64;
    for (s, d) in run.states[1..].iter().zip(&dense) {
        for (a, b) in s.c.iter().zip(d) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let mut lines: Vec<Vec<f64>> = Vec::new();
    for r in 0..=2 {
        let spec = case_spec(CaseId::Regular, r, Some(0))?;
        let grid = build_regular_grid(&spec).map_err(fail)?;
        let o = run_case(&spec, grid, RunOptions::default()).map_err(fail)?;
        let h = &o.report.dol[0][0];
        ensure(h.gaps.is_empty(), || format!("refinement {r}: {} sampling gaps", h.gaps.len()))?;
        lines.push(h.values.clone());
    }
    let l2 =
        |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt();
    let d01 = l2(&lines[0], &lines[1]);
    let d12 = l2(&lines[1], &lines[2]);
    let elapsed = start.elapsed();
    ensure(d12 < d01, || format!("differences {d01:e} then {d12:e}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("L2 8-16 {d01:.3e}, 16-32 {d12:.3e}, {elapsed:.2?}"))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, what: &str, result: Check| match result {
        Ok(detail) => println!("PASS criterion {n} ({what}): {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL criterion {n} ({what}): {detail}");
        }
    };
    report(1, "patch test", criterion_1());
    report(2, "reduction oracle", criterion_2());
    match run_coarsest() {
        Ok(runs) => {
            report(3, "conservation", criterion_3(&runs));
            report(4, "maximum principles", criterion_4(&runs));
            report(5, "configuration fidelity", criterion_5(&runs));
        }
        Err(e) => {
            for (n, what) in [(3, "conservation"), (4, "maximum principles"), (5, "configuration fidelity")] {
                report(n, what, Err(format!("case run failed: {e}")));
            }
        }
    }
    report(6, "format fidelity", criterion_6());
    report(7, "oracle equivalence", criterion_7());
    report(8, "refinement behavior", criterion_8());
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
