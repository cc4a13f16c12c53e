//! Thin wrappers over `faer` for the handful of dense factorizations the
//! pipeline needs. Everything here works on `Mat<f64>` and plain vectors.

use faer::complex_native::c64;
use faer::prelude::*;
use faer::Side;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = Mat<f64>;

pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Matrix {
    debug_assert_eq!(data.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub fn column(a: &Matrix, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn row(a: &Matrix, i: usize) -> Vec<f64> {
    (0..a.ncols()).map(|j| a[(i, j)]).collect()
}

pub fn mat_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

pub fn mat_t_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len());
    let mut out = vec![0.0; a.ncols()];
    for i in 0..a.nrows() {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * xi;
        }
    }
    out
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let evd = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).total_cmp(&s.read(j)));
    let values = order.iter().map(|&i| s.read(i)).collect();
    let u = evd.u();
    let vectors = Mat::from_fn(n, n, |i, j| u.read(i, order[j]));
    (values, vectors)
}

pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut v = a.selfadjoint_eigenvalues(Side::Lower);
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Singular values in descending order.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s = a.singular_values();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Thin SVD with singular values sorted in descending order.
pub fn thin_svd(a: &Matrix) -> ThinSvd {
    let svd = a.thin_svd();
    let s_col = svd.s_diagonal();
    let r = s_col.nrows();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| s_col.read(j).total_cmp(&s_col.read(i)));
    let u_in = svd.u();
    let v_in = svd.v();
    ThinSvd {
        u: Mat::from_fn(u_in.nrows(), r, |i, j| u_in.read(i, order[j])),
        s: order.iter().map(|&i| s_col.read(i)).collect(),
        v: Mat::from_fn(v_in.nrows(), r, |i, j| v_in.read(i, order[j])),
    }
}

/// Count of singular values at or above `rel * s_max`.
pub fn numerical_rank(singular: &[f64], rel: f64) -> usize {
    let Some(&top) = singular.first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s >= rel * top).count()
}

/// Solves `a x = b` by partial-pivot LU followed by one step of iterative
/// refinement.
pub fn solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let lu = a.partial_piv_lu();
    let rhs = Col::from_fn(n, |i| b[i]);
    let x0 = lu.solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| x0.read(i)).collect();
    let ax = mat_vec(a, &x);
    let r = Col::from_fn(n, |i| b[i] - ax[i]);
    let dx = lu.solve(&r);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += dx.read(i);
    }
    x
}

/// Least-squares solution of `a x ≈ b` for each column of `b`.
pub fn lstsq(a: &Matrix, b: &Matrix) -> Matrix {
    assert!(a.nrows() >= a.ncols(), "lstsq requires a tall system");
    let qr = a.qr();
    qr.solve_lstsq(b)
}

/// Orthonormal basis (columns) for the column span of `a`, keeping
/// directions whose singular value is at least `rel * s_max`.
pub fn orthonormal_span(a: &Matrix, rel: f64) -> Matrix {
    if a.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    let svd = thin_svd(a);
    let r = numerical_rank(&svd.s, rel);
    Mat::from_fn(a.nrows(), r, |i, j| svd.u[(i, j)])
}

/// Sines of the principal angles between two subspaces given by
/// orthonormal column bases, largest first. The returned list has
/// `min(dim a, dim b)` entries.
pub fn principal_angle_sines(qa: &Matrix, qb: &Matrix) -> Vec<f64> {
    assert_eq!(qa.nrows(), qb.nrows());
    let (small, big) = if qa.ncols() <= qb.ncols() {
        (qa, qb)
    } else {
        (qb, qa)
    };
    if small.ncols() == 0 {
        return Vec::new();
    }
    // residual of the smaller basis after projecting onto the bigger one
    let coeffs = big.transpose() * small;
    let resid = small - big * &coeffs;
    singular_values(&resid)
}

pub fn principal_angles(qa: &Matrix, qb: &Matrix) -> Vec<f64> {
    principal_angle_sines(qa, qb)
        .into_iter()
        .map(|s| s.min(1.0).asin())
        .collect()
}

/// Eigenvalues of a general real square matrix.
pub fn general_eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Eigensolver("matrix is not square".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = a.eigenvalues::<c64>();
    Ok(ev.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

pub fn max_abs_matrix(a: &Matrix) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

pub fn symmetry_defect(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut d = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            d = d.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_angles_of_plane_pair() {
        // span{e1, e2} vs span{e1, cos a e2 + sin a e3}
        let a = 0.3_f64;
        let qa = from_rows(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let qb = from_rows(3, 2, &[1.0, 0.0, 0.0, a.cos(), 0.0, a.sin()]);
        let ang = principal_angles(&qa, &qb);
        assert!((ang[0] - a).abs() < 1e-14);
        assert!(ang[1].abs() < 1e-14);
    }

    #[test]
    fn solve_recovers_known_vector() {
        let a = from_rows(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let x = vec![1.0, -2.0, 0.5];
        let b = mat_vec(&a, &x);
        let got = solve(&a, &b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn general_eigenvalues_of_triangular() {
        let a = from_rows(2, 2, &[2.0, 5.0, 0.0, 0.5]);
        let mut ev: Vec<f64> = general_eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_counts_relative_threshold() {
        assert_eq!(numerical_rank(&[1.0, 1e-3, 1e-12], 1e-8), 2);
        assert_eq!(numerical_rank(&[], 1e-8), 0);
    }
}
