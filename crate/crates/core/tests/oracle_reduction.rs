use fracflow::flow::{assemble_flow, solve_flow, IntersectionModel};
use fracflow::oracle::{dense_reassembly_check, head_jump, matrix_head_l2, SlabProblem, SlabRegime};

fn problem(regime: SlabRegime, k: f64, n: usize) -> SlabProblem {
    SlabProblem { n, slab_cells: 2, eps: 1e-2, k_matrix: 1.0, k_fracture: k, kappa_fracture: k, regime }
}

#[test]
fn conductive_fracture_matches_resolved_slab() {
    let p = problem(SlabRegime::Conductive, 1e2, 20);
    let reference = p.solve().unwrap();
    let (grid, cond, bc) = p.mixed_setup().unwrap();
    let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).unwrap();
    let sol = solve_flow(&disc, 1e-12).unwrap();
    let err = matrix_head_l2(&p, &reference, &sol.heads[3]);
    eprintln!("conductive rel L2 {err:e}");
    assert!(err <= 0.02, "{err}");
}

#[test]
fn blocking_fracture_jump_matches_resolved_slab() {
    let p = problem(SlabRegime::Blocking, 1e-4, 20);
    let reference = p.solve().unwrap();
    let (grid, cond, bc) = p.mixed_setup().unwrap();
    let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).unwrap();
    let sol = solve_flow(&disc, 1e-12).unwrap();
    let n = p.n;
    let mixed = head_jump(&p, |i, j, l| sol.heads[3][i + n * (j + n * l)], false);
    let exact = head_jump(&p, |i, j, l| reference.head(i, j, l), true);
    let rel = (mixed - exact).abs() / exact.abs();
    eprintln!("blocking jump {mixed} vs {exact}: {rel:e}");
    assert!(rel <= 0.05, "{rel}");
}

#[test]
fn dense_rebuild_matches_on_small_lattice() {
    let p = problem(SlabRegime::Conductive, 1e2, 4);
    let (grid, cond, bc) = p.mixed_setup().unwrap();
    let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).unwrap();
    let diff = dense_reassembly_check(&grid, &cond, &bc, &disc).unwrap();
    assert!(diff <= 1e-12, "{diff:e}");
}
