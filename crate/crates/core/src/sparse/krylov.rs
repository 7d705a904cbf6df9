//! Preconditioned Krylov solvers: conjugate gradients for SPD systems and BiCGStab for
//! general nonsymmetric ones.

use super::csr::CsrMatrix;
use super::SparseError;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
        Jacobi { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Zero fill-in incomplete Cholesky factor `L` (lower triangle incl. diagonal, CSR).
pub struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IncompleteCholesky {
    /// Factorizes `A + shift * diag(A)`; returns `None` on a nonpositive pivot.
    pub fn new(a: &CsrMatrix, shift: f64) -> Option<Self> {
        let n = a.nrows();
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    cols.push(j);
                    vals.push(if j == i { x * (1.0 + shift) } else { x });
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            if end == start || cols[end - 1] != i {
                return None;
            }
            for p in start..end {
                let k = cols[p];
                // sum over j < k of L[i,j] * L[k,j]
                let (ks, ke) = (row_ptr[k], row_ptr[k + 1]);
                let mut s = 0.0;
                let (mut a_i, mut a_k) = (start, ks);
                while a_i < p && a_k < ke {
                    let (ci, ck) = (cols[a_i], cols[a_k]);
                    if ck >= k {
                        break;
                    }
                    if ci == ck {
                        s += vals[a_i] * vals[a_k];
                        a_i += 1;
                        a_k += 1;
                    } else if ci < ck {
                        a_i += 1;
                    } else {
                        a_k += 1;
                    }
                }
                if k < i {
                    vals[p] = (vals[p] - s) / vals[ke - 1];
                } else {
                    let d = vals[p] - s;
                    if !(d > 0.0) {
                        return None;
                    }
                    vals[p] = d.sqrt();
                }
            }
        }
        Some(IncompleteCholesky { row_ptr, cols, vals })
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let mut y = r.to_vec();
        for i in 0..n {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = y[i];
            for p in s..e - 1 {
                acc -= self.vals[p] * y[self.cols[p]];
            }
            y[i] = acc / self.vals[e - 1];
        }
        for i in (0..n).rev() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let zi = y[i] / self.vals[e - 1];
            z[i] = zi;
            for p in s..e - 1 {
                y[self.cols[p]] -= self.vals[p] * zi;
            }
        }
    }
}

/// Zero fill-in incomplete LU factorization for general sparse matrices.
pub struct IncompleteLu {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<usize>,
}

impl IncompleteLu {
    pub fn new(a: &CsrMatrix) -> Option<Self> {
        let n = a.nrows();
        let row_ptr = a.row_ptr().to_vec();
        let cols = a.col_idx().to_vec();
        let mut vals = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if cols[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return None;
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[cols[p]] = p;
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                let k = cols[p];
                if k >= i {
                    break;
                }
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return None;
                }
                let f = vals[p] / pivot;
                vals[p] = f;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let j = cols[q];
                    if pos[j] != usize::MAX {
                        vals[pos[j]] -= f * vals[q];
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[cols[p]] = usize::MAX;
            }
            if vals[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(IncompleteLu { row_ptr, cols, vals, diag })
    }
}

impl Preconditioner for IncompleteLu {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let mut acc = r[i];
            for p in self.row_ptr[i]..self.diag[i] {
                acc -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                acc -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = acc / self.vals[self.diag[i]];
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final true relative residual `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients with a true-residual convergence check.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut iterations = 0;
    // restart from the true residual whenever the recurrence claims convergence
    for _restart in 0..8 {
        let mut r = residual(a, &x, b);
        let true_res = norm(&r) / bnorm;
        if true_res <= tol || (iterations > 0 && at_rounding_floor(a, &x, b, &r)) {
            return Ok((x, SolveStats { iterations, relative_residual: true_res }));
        }
        let mut z = vec![0.0; n];
        precond.apply(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        while iterations < max_iter {
            iterations += 1;
            a.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(SparseError::Breakdown(format!("p'Ap = {pap:e} at iteration {iterations}")));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) / bnorm <= 0.5 * tol {
                break;
            }
            precond.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if iterations >= max_iter {
            break;
        }
    }
    let res = norm(&residual(a, &x, b)) / bnorm;
    if res <= tol {
        Ok((x, SolveStats { iterations, relative_residual: res }))
    } else {
        Err(SparseError::NotConverged { iterations, residual: res })
    }
}

/// Componentwise backward error accepted as converged: the residual is then at the
/// rounding level of `|A| |x| + |b|` and further iterations cannot reduce it.
pub const BACKWARD_ERROR_FLOOR: f64 = 1024.0 * f64::EPSILON;

fn at_rounding_floor(a: &CsrMatrix, x: &[f64], b: &[f64], r: &[f64]) -> bool {
    let mut worst = 0.0f64;
    for i in 0..b.len() {
        let (cols, vals) = a.row(i);
        let scale: f64 = cols.iter().zip(vals).map(|(&j, v)| (v * x[j]).abs()).sum::<f64>() + b[i].abs();
        if scale > 0.0 {
            worst = worst.max(r[i].abs() / scale);
        } else if r[i] != 0.0 {
            return false;
        }
    }
    worst <= BACKWARD_ERROR_FLOOR
}

/// Right-preconditioned BiCGStab.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    precond: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut iterations = 0;
    for _restart in 0..8 {
        let mut r = residual(a, &x, b);
        if norm(&r) / bnorm <= tol {
            break;
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut phat = vec![0.0; n];
        let mut shat = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            precond.apply(&p, &mut phat);
            a.mul_vec_into(&phat, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 {
                break;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) / bnorm <= 0.5 * tol {
                for i in 0..n {
                    x[i] += alpha * phat[i];
                }
                break;
            }
            precond.apply(&s, &mut shat);
            a.mul_vec_into(&shat, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) / bnorm <= 0.5 * tol {
                break;
            }
        }
        if iterations >= max_iter {
            break;
        }
    }
    let res = norm(&residual(a, &x, b)) / bnorm;
    if res <= tol {
        Ok((x, SolveStats { iterations, relative_residual: res }))
    } else {
        Err(SparseError::NotConverged { iterations, residual: res })
    }
}
