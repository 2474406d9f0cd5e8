//! Scaled symmetric vectorization.
//!
//! Entries of the upper triangle are stored column by column,
//! `(0,0), (0,1), (1,1), (0,2), (1,2), (2,2), …`, with off-diagonals scaled
//! by √2 so that `⟨svec A, svec B⟩ = Tr(AB)`.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::SQRT_2;

use crate::SdpError;

const SYM_TOL: f64 = 1e-10;

/// Number of svec entries for a `side × side` symmetric matrix.
pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Position of entry `(i, j)` (either order) in the svec layout.
pub fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Side of the symmetric matrix whose svec has `len` entries.
pub fn tri_side(len: usize) -> Option<usize> {
    let side = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (svec_len(side) == len).then_some(side)
}

pub fn svec(s: &DMatrix<f64>) -> Result<DVector<f64>, SdpError> {
    if !s.is_square() {
        return Err(SdpError::Shape(format!(
            "svec needs a square matrix, got {}×{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.amax().max(1.0);
    let asym = (s - s.transpose()).amax();
    if asym > SYM_TOL * scale {
        return Err(SdpError::NotSymmetric { asymmetry: asym });
    }
    Ok(svec_unchecked(s))
}

/// svec of the upper triangle without a symmetry check.
pub(crate) fn svec_unchecked(s: &DMatrix<f64>) -> DVector<f64> {
    let n = s.nrows();
    let mut v = DVector::zeros(svec_len(n));
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            v[k] = if i == j { s[(i, j)] } else { SQRT_2 * 0.5 * (s[(i, j)] + s[(j, i)]) };
            k += 1;
        }
    }
    v
}

pub fn smat(v: &[f64]) -> Result<DMatrix<f64>, SdpError> {
    let n = tri_side(v.len()).ok_or(SdpError::NotTriangular { len: v.len() })?;
    Ok(smat_sized(v, n))
}

pub(crate) fn smat_sized(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                s[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT_2;
                s[(i, j)] = x;
                s[(j, i)] = x;
            }
            k += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        let v = svec(&s).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0 * SQRT_2, 3.0]);
    }

    #[test]
    fn identity_layout() {
        let v = svec(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        assert!(matches!(svec(&s), Err(SdpError::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_bad_length() {
        assert_eq!(smat(&[1.0, 2.0]), Err(SdpError::NotTriangular { len: 2 }));
        assert!(smat(&[]).unwrap().is_empty());
    }

    #[test]
    fn round_trips_small_cases() {
        for s in [
            DMatrix::from_row_slice(1, 1, &[-4.5]),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]),
            DMatrix::identity(3, 3),
        ] {
            assert_eq!(smat(svec(&s).unwrap().as_slice()).unwrap(), s);
        }
    }

    #[test]
    fn index_matches_layout() {
        assert_eq!(svec_index(0, 0), 0);
        assert_eq!(svec_index(0, 1), 1);
        assert_eq!(svec_index(1, 0), 1);
        assert_eq!(svec_index(1, 2), 4);
        assert_eq!(tri_side(10), Some(4));
        assert_eq!(tri_side(7), None);
    }
}
