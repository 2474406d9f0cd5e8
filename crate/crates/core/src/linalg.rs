//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Result};

/// Relative singular-value threshold for rank and pseudoinverse decisions.
pub const RANK_TOL: f64 = 1e-9;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    let mut sv = m.clone().svd(false, false).singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral norm.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Number of singular values above `RANK_TOL·σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Moore–Penrose pseudoinverse with the `RANK_TOL` cutoff.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if m.is_empty() {
        return DMatrix::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let mut out = DMatrix::zeros(c, r);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_TOL * smax {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(symmetrize(m)).eigenvalues
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).min()
}

pub fn max_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).max()
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Symmetric square root `L` with `L Lᵀ = M` for `M ⪰ 0`; tiny negative
/// eigenvalues from roundoff are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Upper factor `S` with `M = SᵀS` for `M ≻ 0`.
pub fn upper_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ch = symmetrize(m)
        .cholesky()
        .ok_or_else(|| invalid("matrix is not positive definite"))?;
    Ok(ch.l().transpose())
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ch = symmetrize(m)
        .cholesky()
        .ok_or_else(|| invalid("matrix is not positive definite"))?;
    Ok(symmetrize(&ch.inverse()))
}

/// 2-norm condition number.
pub fn cond(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    match (sv.iter().next(), sv.iter().last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Solves the Stein equation `X = A X Aᵀ + W` by Kronecker vectorization.
pub fn stein(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let kron = a.kronecker(a);
    let lhs = DMatrix::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(w.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| invalid("Stein equation is singular (A has eigenvalue pairs on the unit circle)"))?;
    Ok(symmetrize(&DMatrix::from_column_slice(n, n, sol.as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_fat_matrix_is_right_inverse() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        let p = pinv(&m);
        assert!((&m * &p - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn stein_scalar() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let w = DMatrix::from_element(1, 1, 3.0);
        assert!((stein(&a, &w).unwrap()[(0, 0)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.9, 0.9, 0.0]);
        assert!((spectral_radius(&m) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn upper_factor_reconstructs() {
        let q = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s = upper_factor(&q).unwrap();
        assert!((s.transpose() * &s - q).amax() < 1e-12);
    }
}
