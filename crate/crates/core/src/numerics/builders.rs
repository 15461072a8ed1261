//! Structured matrices and direction sampling used by the data models.

use std::f64::consts::PI;

use super::matrix::{norm_sq, DenseMatrix};
use crate::rng::RngStream;

/// Index of the first row/column of the cosine design.
pub const DCT_INDEX_BASE: usize = 1;

/// `D × D` cosine design with entries `cos(2π k l / M) / √(M + 2)`,
/// `M = 2D − 1`, and `k, l` counted from [`DCT_INDEX_BASE`].
pub fn dct_design_matrix(dim: usize) -> DenseMatrix {
    let m = (2 * dim).saturating_sub(1) as f64;
    let scale = 1.0 / (m + 2.0).sqrt();
    DenseMatrix::from_fn(dim, dim, |i, j| {
        let k = (i + DCT_INDEX_BASE) as f64;
        let l = (j + DCT_INDEX_BASE) as f64;
        scale * (2.0 * PI * k * l / m).cos()
    })
}

/// Rows of the cosine design that coincide with row `row` (0-based), other
/// than itself. With 1-based indices, `cos(2πkl/M) = cos(2π(M−k)l/M)`, so the
/// rows for `k = D − 1` and `k = D` are identical.
pub fn dct_row_aliases(dim: usize, row: usize) -> Vec<usize> {
    let m = 2 * dim - 1;
    let k = row + DCT_INDEX_BASE;
    (0..dim)
        .filter(|&other| {
            let k2 = other + DCT_INDEX_BASE;
            other != row && (k2 % m == k % m || (k2 + k).is_multiple_of(m))
        })
        .collect()
}

/// Uniform direction on the unit sphere in `dim` dimensions (normalized
/// Gaussian draw; a zero draw is redrawn).
pub fn sample_unit_sphere(stream: &mut RngStream, dim: usize) -> Vec<f64> {
    assert!(dim >= 1);
    loop {
        let v = stream.standard_normal(dim);
        let norm = norm_sq(&v).sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn dct_small_cases() {
        let w = dct_design_matrix(1);
        assert!((w.get(0, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let w = dct_design_matrix(4);
        let want = (12.0 * PI / 7.0).cos() / 3.0;
        assert!((w.get(1, 2) - want).abs() < 1e-15);
        let bound = 1.0 / 9f64.sqrt();
        assert!(w.as_slice().iter().all(|v| v.abs() <= bound + 1e-15));
    }

    #[test]
    fn dct_last_rows_alias() {
        let dim = 16;
        let w = dct_design_matrix(dim);
        assert_eq!(dct_row_aliases(dim, dim - 1), vec![dim - 2]);
        assert_eq!(dct_row_aliases(dim, dim - 2), vec![dim - 1]);
        assert!(dct_row_aliases(dim, 3).is_empty());
        for j in 0..dim {
            assert!((w.get(dim - 1, j) - w.get(dim - 2, j)).abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_draws() {
        let mut s = derive_stream(11, &[]);
        for dim in [1, 2, 7, 40] {
            let v = sample_unit_sphere(&mut s, dim);
            assert!((norm_sq(&v).sqrt() - 1.0).abs() < 1e-12);
            if dim == 1 {
                assert!(v[0] == 1.0 || v[0] == -1.0);
            }
        }
    }

    #[test]
    fn sphere_mean_near_zero() {
        let mut s = derive_stream(12, &[]);
        let count = 100_000;
        let mut mean = [0.0; 5];
        for _ in 0..count {
            for (m, v) in mean.iter_mut().zip(sample_unit_sphere(&mut s, 5)) {
                *m += v / count as f64;
            }
        }
        let tol = 4.0 / (5.0 * count as f64).sqrt() * 2.0;
        assert!(mean.iter().all(|m| m.abs() < tol), "{mean:?}");
    }
}
