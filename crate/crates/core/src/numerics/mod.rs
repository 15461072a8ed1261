//! Dense linear algebra and special functions.

mod builders;
mod matrix;
mod solve;
mod special;

use thiserror::Error;

pub use builders::{dct_design_matrix, dct_row_aliases, sample_unit_sphere, DCT_INDEX_BASE};
pub use matrix::{dot, norm_sq, DenseMatrix};
pub use solve::{
    min_norm_lstsq, min_norm_lstsq_svd, ridge_solve, ridge_solve_dual, ridge_solve_primal,
    svd_cutoff, LstsqSolution, CHOLESKY_PIVOT_RTOL,
};
pub use special::{normal_cdf, normal_pdf, normal_sf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("regularization nλ must be positive, got {0}")]
    NonPositiveRegularization(f64),
    #[error("SVD did not converge")]
    SvdFailed,
}
