use super::SparseError;

/// LU factorization with partial pivoting of a dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factorizes a row-major `n x n` matrix.
    pub fn factor(a: &[Vec<f64>]) -> Result<Self, SparseError> {
        let n = a.len();
        if a.iter().any(|row| row.len() != n) {
            return Err(SparseError::Structure("dense matrix is not square".into()));
        }
        let mut lu: Vec<f64> = a.iter().flat_map(|r| r.iter().copied()).collect();
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= f64::EPSILON * scale * n as f64 || pivot == 0.0 {
                return Err(SparseError::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

/// Solves a dense system by partial-pivoting LU.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, SparseError> {
    if b.len() != a.len() {
        return Err(SparseError::Structure("right-hand side length mismatch".into()));
    }
    Ok(DenseLu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        assert_eq!(solve_dense(&[vec![2.0]], &[4.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn permutation_matrix() {
        let p = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        let x = solve_dense(&p, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve_dense(&a, &[1.0, 1.0]), Err(SparseError::Singular { .. })));
    }
}
