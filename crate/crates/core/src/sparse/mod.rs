//! Sparse linear algebra: CSR storage, preconditioned Krylov solvers, a dense LU
//! fallback, and a reusable solver for the nonsymmetric transport operators.

mod csr;
mod dense;
mod krylov;

use thiserror::Error;

pub use csr::{CsrMatrix, TripletBuilder};
pub use dense::{solve_dense, DenseLu};
pub use krylov::{bicgstab, pcg, IncompleteCholesky, IncompleteLu, Jacobi, Preconditioner, SolveStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("malformed matrix: {0}")]
    Structure(String),
    #[error("matrix is singular to working precision (column {column})")]
    Singular { column: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solver breakdown: {0}")]
    Breakdown(String),
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Systems up to this size are factorized densely when no cheaper direct path exists.
pub const DENSE_LIMIT: usize = 2000;

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<(), SparseError> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(SparseError::Structure(format!(
            "{}x{} matrix with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(())
}

/// Solves a symmetric positive definite system with conjugate gradients.
///
/// Uses an incomplete Cholesky preconditioner, retried with growing diagonal shifts,
/// and falls back to Jacobi if every factorization breaks down.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats), SparseError> {
    check_square(a, b)?;
    if !a.is_symmetric() {
        return Err(SparseError::NotSymmetric);
    }
    for shift in [0.0, 1e-3, 1e-2, 1e-1] {
        if let Some(ic) = IncompleteCholesky::new(a, shift) {
            return pcg(a, b, &ic, tol, max_iter);
        }
    }
    pcg(a, b, &Jacobi::new(a), tol, max_iter)
}

enum Strategy {
    /// Dependency graph is acyclic: one substitution sweep in topological order.
    Ordered {
        order: Vec<usize>,
    },
    Dense(DenseLu),
    Iterative(IncompleteLu),
}

/// Solver for a fixed general sparse matrix, prepared once and applied to many
/// right-hand sides.
///
/// Upwind operators of a potential flow field are triangular up to a permutation, so
/// the ordered sweep is tried first; dense LU and ILU(0)-BiCGStab cover the rest.
pub struct GeneralSolver {
    matrix: CsrMatrix,
    strategy: Strategy,
    tol: f64,
    max_iter: usize,
}

impl GeneralSolver {
    pub fn new(matrix: CsrMatrix, tol: f64, max_iter: usize) -> Result<Self, SparseError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(SparseError::Structure("matrix is not square".into()));
        }
        let strategy = if let Some(order) = topological_order(&matrix) {
            if let Some(i) = order.iter().copied().find(|&i| matrix.get(i, i) == 0.0) {
                return Err(SparseError::Singular { column: i });
            }
            Strategy::Ordered { order }
        } else if matrix.nrows() <= DENSE_LIMIT {
            Strategy::Dense(DenseLu::factor(&matrix.to_dense())?)
        } else {
            let ilu = IncompleteLu::new(&matrix)
                .ok_or_else(|| SparseError::Breakdown("zero pivot in incomplete LU".into()))?;
            Strategy::Iterative(ilu)
        };
        Ok(GeneralSolver { matrix, strategy, tol, max_iter })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Short name of the chosen strategy, for logs.
    pub fn method(&self) -> &'static str {
        match self.strategy {
            Strategy::Ordered { .. } => "ordered-substitution",
            Strategy::Dense(_) => "dense-lu",
            Strategy::Iterative(_) => "bicgstab-ilu0",
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        check_square(&self.matrix, b)?;
        match &self.strategy {
            Strategy::Ordered { order } => {
                let mut x = vec![0.0; b.len()];
                for &i in order {
                    let (cols, vals) = self.matrix.row(i);
                    let mut acc = b[i];
                    let mut diag = 0.0;
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j == i {
                            diag = v;
                        } else {
                            acc -= v * x[j];
                        }
                    }
                    x[i] = acc / diag;
                }
                Ok(x)
            }
            Strategy::Dense(lu) => Ok(lu.solve(b)),
            Strategy::Iterative(ilu) => bicgstab(&self.matrix, b, ilu, self.tol, self.max_iter).map(|(x, _)| x),
        }
    }
}

/// Order in which every row only references already-computed unknowns, if one exists.
fn topological_order(a: &CsrMatrix) -> Option<Vec<usize>> {
    let n = a.nrows();
    // row i depends on j when a_ij != 0: edge j -> i
    let mut indegree = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if j != i {
                indegree[i] += 1;
                dependents[j].push(i);
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    while let Some(j) = stack.pop() {
        order.push(j);
        for &i in &dependents[j] {
            indegree[i] -= 1;
            if indegree[i] == 0 {
                stack.push(i);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lower: f64, diag: f64, upper: f64) -> CsrMatrix {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, diag);
            if i > 0 {
                b.push(i, i - 1, lower);
            }
            if i + 1 < n {
                b.push(i, i + 1, upper);
            }
        }
        b.build()
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, _) = solve_spd(&CsrMatrix::identity(3), &b, 1e-12, 10).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two() {
        let a = tridiag(2, -1.0, 2.0, -1.0);
        let (x, _) = solve_spd(&a, &[1.0, 1.0], 1e-12, 10).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let a = tridiag(3, -1.0, 2.0, -0.5);
        assert_eq!(solve_spd(&a, &[1.0; 3], 1e-10, 10).unwrap_err(), SparseError::NotSymmetric);
    }

    #[test]
    fn lower_triangular_uses_ordered_sweep() {
        let a = tridiag(5, -1.0, 2.0, 0.0);
        let s = GeneralSolver::new(a.clone(), 1e-12, 100).unwrap();
        assert_eq!(s.method(), "ordered-substitution");
        let x = s.solve(&[1.0; 5]).unwrap();
        let r = a.mul_vec(&x);
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn cyclic_matrix_falls_back_to_dense() {
        let a = tridiag(6, -1.0, 3.0, -0.5);
        let s = GeneralSolver::new(a.clone(), 1e-12, 100).unwrap();
        assert_eq!(s.method(), "dense-lu");
        let x = s.solve(&[1.0; 6]).unwrap();
        assert!(a.mul_vec(&x).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bicgstab_on_convection_diffusion() {
        let a = tridiag(300, -1.5, 2.5, -0.5);
        let ilu = IncompleteLu::new(&a).unwrap();
        let b = vec![1.0; 300];
        let (x, stats) = bicgstab(&a, &b, &ilu, 1e-11, 500).unwrap();
        assert!(stats.relative_residual <= 1e-11);
        let r = a.mul_vec(&x);
        assert!(r.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-8));
    }
}
