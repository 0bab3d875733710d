//! Half-vectorization and the duplication matrix.
//!
//! `vech` stacks the lower triangle column by column: for a 3×3 matrix the
//! order is (1,1), (2,1), (3,1), (2,2), (3,2), (3,3).

use nalgebra::{DMatrix, DVector};

use super::ModelError;
use crate::scalar::Real;

/// Largest `|m[i,j] - m[j,i]|`.
pub fn max_asymmetry<T: Real>(m: &DMatrix<T>) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs().as_f64());
        }
    }
    dev
}

/// Position of element `(i, j)`, `i >= j`, inside `vech` of a `q × q` matrix.
#[inline]
pub fn vech_index(q: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < q);
    j * q - j * (j + 1) / 2 + i
}

/// Inverse of [`vech_index`]: the `(row, col)` pair at position `k`.
pub fn vech_pairs(q: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(q * (q + 1) / 2);
    for j in 0..q {
        for i in j..q {
            out.push((i, j));
        }
    }
    out
}

/// `vech(M)`; rejects matrices that are asymmetric beyond `1e-10`.
pub fn vech<T: Real>(m: &DMatrix<T>) -> Result<DVector<T>, ModelError> {
    let dev = max_asymmetry(m);
    if !m.is_square() || dev > 1e-10 {
        return Err(ModelError::Asymmetric { max_dev: dev });
    }
    Ok(vech_unchecked(m))
}

/// `vech(M)` reading only the lower triangle.
pub fn vech_unchecked<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    let q = m.nrows();
    DVector::from_iterator(
        q * (q + 1) / 2,
        vech_pairs(q).into_iter().map(|(i, j)| m[(i, j)]),
    )
}

/// Rebuilds the symmetric matrix from its half-vectorization.
pub fn unvech<T: Real>(v: &[T]) -> DMatrix<T> {
    let q = dim_from_len(v.len());
    let mut m = DMatrix::zeros(q, q);
    for (k, (i, j)) in vech_pairs(q).into_iter().enumerate() {
        m[(i, j)] = v[k];
        m[(j, i)] = v[k];
    }
    m
}

fn dim_from_len(len: usize) -> usize {
    let q = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    assert_eq!(q * (q + 1) / 2, len, "length {len} is not triangular");
    q
}

/// Column-major `vec(M)`.
pub fn vec<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// The `q² × q(q+1)/2` duplication matrix `D` with `D·vech(A) = vec(A)`.
pub fn duplication_matrix<T: Real>(q: usize) -> DMatrix<T> {
    let mut d = DMatrix::zeros(q * q, q * (q + 1) / 2);
    for j in 0..q {
        for i in 0..q {
            let (a, b) = if i >= j { (i, j) } else { (j, i) };
            // vec index of (i, j) is j*q + i
            d[(j * q + i, vech_index(q, a, b))] = T::one();
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vech_of_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(vech(&m).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn vech_of_identity() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert_eq!(vech(&m).unwrap().as_slice(), &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn vech_of_scalar() {
        let m = DMatrix::from_element(1, 1, 4.5f32);
        assert_eq!(vech(&m).unwrap().as_slice(), &[4.5]);
    }

    #[test]
    fn vech_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 3.0]);
        assert!(matches!(vech(&m), Err(ModelError::Asymmetric { .. })));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-12, 3.0]);
        assert!(vech(&tiny).is_ok());
    }

    #[test]
    fn index_matches_pairs() {
        for q in 1..7 {
            for (k, (i, j)) in vech_pairs(q).into_iter().enumerate() {
                assert_eq!(vech_index(q, i, j), k);
            }
        }
    }

    #[test]
    fn duplication_small_cases() {
        let d1 = duplication_matrix::<f64>(1);
        assert_eq!(d1, DMatrix::from_element(1, 1, 1.0));
        let d2 = duplication_matrix::<f64>(2);
        let expected = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        );
        assert_eq!(d2, expected);
    }

    #[test]
    fn unvech_roundtrip() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let v = vech(&m).unwrap();
        assert_eq!(unvech(v.as_slice()), m);
    }
}
