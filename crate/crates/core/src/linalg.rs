//! Small dense kernels shared by the model modules.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::{Error, Matrix, Result};

/// Squared Euclidean distance between two equal-length slices.
pub fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Independent partial sums let the compiler vectorize the loop.
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            let t = xa[k] - xb[k];
            acc[k] += t * t;
        }
    }
    let mut tail = 0.0;
    for (p, q) in ca.remainder().iter().zip(cb.remainder()) {
        let t = p - q;
        tail += t * t;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn column(x: &Matrix, j: usize) -> &[f64] {
    let d = x.nrows();
    &x.as_slice()[j * d..(j + 1) * d]
}

/// Above this many multiply-adds, distances go through one matrix product
/// (`‖a‖² + ‖b‖² − 2aᵀb`), which runs on the blocked, vectorized GEMM path.
/// Below it, each distance is summed directly, which is exact for
/// coincident points.
const DIRECT_WORK_LIMIT: usize = 1 << 26;

fn sq_norms(x: &Matrix) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| column(x, j).iter().map(|v| v * v).sum())
        .collect()
}

/// n×n matrix of squared distances between the columns of `x`.
/// Exactly symmetric with a zero diagonal and no negative entries.
pub fn pairwise_sq_distances(x: &Matrix) -> Matrix {
    let n = x.ncols();
    let mut out = Matrix::zeros(n, n);
    if x.nrows() * n * n > DIRECT_WORK_LIMIT {
        let g = x.transpose() * x;
        let norms = sq_norms(x);
        for j in 0..n {
            for i in (j + 1)..n {
                let v = (norms[i] + norms[j] - 2.0 * g[(i, j)]).max(0.0);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        return out;
    }
    for j in 0..n {
        let xj = column(x, j);
        for i in (j + 1)..n {
            let v = sq_distance(column(x, i), xj);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// n×k matrix of squared distances between columns of `x` (n of them)
/// and columns of `z` (k of them). Never negative.
pub fn cross_sq_distances(x: &Matrix, z: &Matrix) -> Matrix {
    let (n, k) = (x.ncols(), z.ncols());
    if x.nrows() * n * k > DIRECT_WORK_LIMIT {
        let g = x.transpose() * z;
        let (nx, nz) = (sq_norms(x), sq_norms(z));
        return Matrix::from_fn(n, k, |r, c| (nx[r] + nz[c] - 2.0 * g[(r, c)]).max(0.0));
    }
    Matrix::from_fn(n, k, |r, c| sq_distance(column(x, r), column(z, c)))
}

/// Overwrite the strict upper triangle with the strict lower triangle.
pub fn mirror_lower(a: &mut Matrix) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            a[(j, i)] = a[(i, j)];
        }
    }
}

/// Solve `a · x = rhs` for symmetric positive-definite `a` by Cholesky.
pub fn spd_solve(a: Matrix, rhs: &Matrix) -> Result<Matrix> {
    let chol = Cholesky::new(a).ok_or(Error::SingularSystem)?;
    let x = chol.solve(rhs);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::NonFinite("linear solve"))
    }
}

/// Elementwise sign with `sign(0) = +1`.
pub fn sign_matrix(s: &Matrix) -> Matrix {
    s.map(|v| if v < 0.0 { -1.0 } else { 1.0 })
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn all_finite(a: &Matrix) -> bool {
    a.iter().all(|v| v.is_finite())
}
