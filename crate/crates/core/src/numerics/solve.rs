//! Minimum-norm least squares and ridge solves.
//!
//! The fast paths factor a Gram matrix with Cholesky: `X Xᵀ` when `n <= p`
//! (dual form, the solution lies in the row space by construction) and
//! `Xᵀ X` otherwise. One step of iterative refinement against `X` itself
//! recovers most of the accuracy lost to squaring the condition number. A
//! pivot that falls below `CHOLESKY_PIVOT_RTOL` times the largest diagonal
//! entry routes the solve through the SVD instead.

use nalgebra::DMatrix;

use super::matrix::{axpy, DenseMatrix};
use super::NumericsError;

/// Relative pivot floor for the Gram-matrix Cholesky fast path.
pub const CHOLESKY_PIVOT_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LstsqSolution {
    pub beta_hat: Vec<f64>,
    /// Numerical rank used by the solve.
    pub rank: usize,
}

fn check_system(x: &DenseMatrix, y: &[f64]) -> Result<(), NumericsError> {
    if y.len() != x.rows() {
        return Err(NumericsError::DimensionMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    Ok(())
}

/// In-place lower Cholesky factor of a symmetric matrix stored row-major.
/// Returns `false` when a pivot drops below the relative floor.
fn cholesky_in_place(a: &mut [f64], size: usize) -> bool {
    let max_diag = (0..size).map(|i| a[i * size + i]).fold(0.0f64, f64::max);
    if !(max_diag > 0.0) {
        return false;
    }
    let floor = CHOLESKY_PIVOT_RTOL * max_diag;
    for j in 0..size {
        let row_j = &a[j * size..j * size + j];
        let d = a[j * size + j] - row_j.iter().map(|v| v * v).sum::<f64>();
        if !(d > floor) {
            return false;
        }
        let ljj = d.sqrt();
        a[j * size + j] = ljj;
        for i in (j + 1)..size {
            let (top, bottom) = a.split_at_mut(i * size);
            let lj = &top[j * size..j * size + j];
            let row_i = &mut bottom[..=j];
            let s = row_i[j] - row_i[..j].iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
            row_i[j] = s / ljj;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` in place.
fn cholesky_solve(l: &[f64], size: usize, b: &mut [f64]) {
    for i in 0..size {
        let row = &l[i * size..i * size + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(a, c)| a * c).sum();
        b[i] = (b[i] - s) / l[i * size + i];
    }
    for i in (0..size).rev() {
        let mut s = b[i];
        for k in (i + 1)..size {
            s -= l[k * size + i] * b[k];
        }
        b[i] = s / l[i * size + i];
    }
}

struct Factored {
    l: Vec<f64>,
    size: usize,
}

impl Factored {
    fn of(mut gram: DenseMatrix, shift: f64) -> Option<Self> {
        let size = gram.rows();
        if shift != 0.0 {
            for i in 0..size {
                let v = gram.get(i, i) + shift;
                gram.set(i, i, v);
            }
        }
        let mut l = gram.into_vec();
        cholesky_in_place(&mut l, size).then_some(Self { l, size })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = b.to_vec();
        cholesky_solve(&self.l, self.size, &mut out);
        out
    }
}

fn residual(x: &DenseMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let fit = x.matvec(beta);
    y.iter().zip(fit).map(|(a, b)| a - b).collect()
}

/// Minimum-Euclidean-norm minimizer of `‖y − Xβ‖²`.
pub fn min_norm_lstsq(x: &DenseMatrix, y: &[f64]) -> Result<LstsqSolution, NumericsError> {
    check_system(x, y)?;
    let (n, p) = (x.rows(), x.cols());
    if n == 0 || p == 0 {
        return Ok(LstsqSolution {
            beta_hat: vec![0.0; p],
            rank: 0,
        });
    }
    if n <= p {
        if let Some(f) = Factored::of(x.gram_rows(), 0.0) {
            let mut c = f.solve(y);
            let beta = x.t_matvec(&c);
            let r = residual(x, y, &beta);
            let dc = f.solve(&r);
            for (ci, d) in c.iter_mut().zip(dc) {
                *ci += d;
            }
            return Ok(LstsqSolution {
                beta_hat: x.t_matvec(&c),
                rank: n,
            });
        }
    } else if let Some(f) = Factored::of(x.gram_cols(), 0.0) {
        let mut beta = f.solve(&x.t_matvec(y));
        let r = residual(x, y, &beta);
        let db = f.solve(&x.t_matvec(&r));
        axpy(1.0, &db, &mut beta);
        return Ok(LstsqSolution {
            beta_hat: beta,
            rank: p,
        });
    }
    if n <= p {
        if let Some(beta) = min_norm_qr(x, y) {
            return Ok(LstsqSolution {
                beta_hat: beta,
                rank: n,
            });
        }
    }
    min_norm_lstsq_svd(x, y)
}

/// Relative floor on `|R_ii|` for the QR path.
const QR_DIAG_RTOL: f64 = 1e-10;

/// Underdetermined full-row-rank solve through `Xᵀ = QR`:
/// `β = Q R⁻ᵀ y`. `None` when `R` looks rank deficient.
fn min_norm_qr(x: &DenseMatrix, y: &[f64]) -> Option<Vec<f64>> {
    let (n, p) = (x.rows(), x.cols());
    // row-major X is column-major Xᵀ
    let xt = DMatrix::from_column_slice(p, n, x.as_slice());
    let qr = xt.qr();
    let r = qr.r();
    let max_diag = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if !(max_diag > 0.0) || (0..n).any(|i| r[(i, i)].abs() <= QR_DIAG_RTOL * max_diag) {
        return None;
    }
    // forward substitution with Rᵀ
    let mut z = y.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| r[(k, i)] * z[k]).sum();
        z[i] = (z[i] - s) / r[(i, i)];
    }
    let beta = qr.q() * nalgebra::DVector::from_vec(z);
    Some(beta.iter().copied().collect())
}

struct Svd {
    u: DMatrix<f64>,
    v_t: DMatrix<f64>,
    s: Vec<f64>,
}

fn svd(x: &DenseMatrix) -> Result<Svd, NumericsError> {
    let m = DMatrix::from_row_slice(x.rows(), x.cols(), x.as_slice());
    let svd = m.svd(true, true);
    let s = svd.singular_values.iter().copied().collect();
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(Svd { u, v_t, s }),
        _ => Err(NumericsError::SvdFailed),
    }
}

/// Singular values below `rcond · σ_max` count as zero, with
/// `rcond = ε · max(n, p)`.
pub fn svd_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    f64::EPSILON * rows.max(cols) as f64 * sigma_max
}

/// Pseudoinverse solve through a full SVD. Always available, never fast.
pub fn min_norm_lstsq_svd(x: &DenseMatrix, y: &[f64]) -> Result<LstsqSolution, NumericsError> {
    check_system(x, y)?;
    let (n, p) = (x.rows(), x.cols());
    if n == 0 || p == 0 {
        return Ok(LstsqSolution {
            beta_hat: vec![0.0; p],
            rank: 0,
        });
    }
    let Svd { u, v_t, s } = svd(x)?;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cut = svd_cutoff(n, p, smax);
    let mut beta = vec![0.0; p];
    let mut rank = 0;
    for (k, &sk) in s.iter().enumerate() {
        if sk <= cut || sk == 0.0 {
            continue;
        }
        rank += 1;
        let coef = (0..n).map(|i| u[(i, k)] * y[i]).sum::<f64>() / sk;
        for (j, b) in beta.iter_mut().enumerate() {
            *b += coef * v_t[(k, j)];
        }
    }
    Ok(LstsqSolution {
        beta_hat: beta,
        rank,
    })
}

fn check_lambda(n_lambda: f64) -> Result<(), NumericsError> {
    if !(n_lambda.is_finite() && n_lambda > 0.0) {
        return Err(NumericsError::NonPositiveRegularization(n_lambda));
    }
    Ok(())
}

/// Ridge coefficients `(XᵀX + nλ I)⁻¹ Xᵀ y`. `n_lambda` is the full diagonal
/// shift `nλ`. Uses the dual form when `p > n`.
pub fn ridge_solve(x: &DenseMatrix, y: &[f64], n_lambda: f64) -> Result<Vec<f64>, NumericsError> {
    if x.cols() > x.rows() {
        ridge_solve_dual(x, y, n_lambda)
    } else {
        ridge_solve_primal(x, y, n_lambda)
    }
}

/// `(XᵀX + nλ I)⁻¹ Xᵀ y` via the p × p system.
pub fn ridge_solve_primal(
    x: &DenseMatrix,
    y: &[f64],
    n_lambda: f64,
) -> Result<Vec<f64>, NumericsError> {
    check_system(x, y)?;
    check_lambda(n_lambda)?;
    match Factored::of(x.gram_cols(), n_lambda) {
        Some(f) => Ok(f.solve(&x.t_matvec(y))),
        None => ridge_svd(x, y, n_lambda),
    }
}

/// `Xᵀ (XXᵀ + nλ I)⁻¹ y` via the n × n system.
pub fn ridge_solve_dual(
    x: &DenseMatrix,
    y: &[f64],
    n_lambda: f64,
) -> Result<Vec<f64>, NumericsError> {
    check_system(x, y)?;
    check_lambda(n_lambda)?;
    match Factored::of(x.gram_rows(), n_lambda) {
        Some(f) => Ok(x.t_matvec(&f.solve(y))),
        None => ridge_svd(x, y, n_lambda),
    }
}

fn ridge_svd(x: &DenseMatrix, y: &[f64], n_lambda: f64) -> Result<Vec<f64>, NumericsError> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 || p == 0 {
        return Ok(vec![0.0; p]);
    }
    let Svd { u, v_t, s } = svd(x)?;
    let mut beta = vec![0.0; p];
    for (k, &sk) in s.iter().enumerate() {
        let coef = (0..n).map(|i| u[(i, k)] * y[i]).sum::<f64>() * sk / (sk * sk + n_lambda);
        for (j, b) in beta.iter_mut().enumerate() {
            *b += coef * v_t[(k, j)];
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::norm_sq;
    use crate::rng::derive_stream;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let data = derive_stream(seed, &[rows as u64, cols as u64]).standard_normal(rows * cols);
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        num / norm_sq(b).sqrt().max(1e-300)
    }

    #[test]
    fn identity_design_returns_targets() {
        let y = vec![0.5, -2.0, 3.25];
        let sol = min_norm_lstsq(&DenseMatrix::identity(3), &y).unwrap();
        assert_eq!(sol.rank, 3);
        assert!(rel_diff(&sol.beta_hat, &y) < 1e-15);
    }

    #[test]
    fn single_row_min_norm() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let sol = min_norm_lstsq(&x, &[2.0]).unwrap();
        assert!((sol.beta_hat[0] - 1.0).abs() < 1e-14);
        assert!((sol.beta_hat[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let x = DenseMatrix::identity(2);
        assert!(matches!(
            min_norm_lstsq(&x, &[1.0]),
            Err(NumericsError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            min_norm_lstsq(&x, &[1.0, f64::NAN]),
            Err(NumericsError::NonFinite)
        ));
        assert!(matches!(
            ridge_solve(&x, &[1.0, 1.0], 0.0),
            Err(NumericsError::NonPositiveRegularization(_))
        ));
    }

    #[test]
    fn interpolates_and_stays_in_row_space() {
        let x = random(20, 50, 1);
        let y = derive_stream(2, &[]).standard_normal(20);
        let sol = min_norm_lstsq(&x, &y).unwrap();
        assert_eq!(sol.rank, 20);
        assert!(rel_diff(&x.matvec(&sol.beta_hat), &y) < 1e-9);
        // β̂ = Xᵀc for the c solving X Xᵀ c = X β̂ ⇒ projection residual is zero
        let svd_sol = min_norm_lstsq_svd(&x, &y).unwrap();
        assert!(rel_diff(&sol.beta_hat, &svd_sol.beta_hat) < 1e-10);
    }

    #[test]
    fn ill_conditioned_rows_take_qr_path() {
        // rows 0 and 1 differ by 1e-6: cond(X) ~ 1e6 trips the Gram pivot floor
        let mut x = DenseMatrix::from_fn(4, 9, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        for j in 0..9 {
            let v = x.get(0, j) + 1e-6 * ((j % 3) as f64 - 1.0);
            x.set(1, j, v);
        }
        let y = [1.0, -2.0, 0.5, 3.0];
        assert!(Factored::of(x.gram_rows(), 0.0).is_none());
        let qr = min_norm_qr(&x, &y).unwrap();
        let svd = min_norm_lstsq_svd(&x, &y).unwrap().beta_hat;
        let scale = svd.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in qr.iter().zip(&svd) {
            assert!((a - b).abs() < 1e-7 * scale, "{a} vs {b}");
        }
        assert_eq!(min_norm_lstsq(&x, &y).unwrap().beta_hat, qr);
    }

    #[test]
    fn overdetermined_matches_svd() {
        let x = random(40, 7, 3);
        let y = derive_stream(4, &[]).standard_normal(40);
        let a = min_norm_lstsq(&x, &y).unwrap();
        let b = min_norm_lstsq_svd(&x, &y).unwrap();
        assert_eq!(a.rank, 7);
        assert_eq!(b.rank, 7);
        assert!(rel_diff(&a.beta_hat, &b.beta_hat) < 1e-10);
    }

    #[test]
    fn duplicate_rows_fall_back_to_svd() {
        let mut x = random(6, 10, 5);
        let r0 = x.row(0).to_vec();
        x.row_mut(1).copy_from_slice(&r0);
        let mut y = derive_stream(6, &[]).standard_normal(6);
        y[1] = y[0];
        let sol = min_norm_lstsq(&x, &y).unwrap();
        assert_eq!(sol.rank, 5);
        assert!(rel_diff(&x.matvec(&sol.beta_hat), &y) < 1e-9);
    }

    #[test]
    fn ridge_scalar_case() {
        let x = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let b = ridge_solve(&x, &[3.0], 1.0).unwrap();
        assert!((b[0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn ridge_heavy_shrinkage() {
        let x = random(10, 30, 7);
        let y = derive_stream(8, &[]).standard_normal(10);
        let b = ridge_solve(&x, &y, 1e9).unwrap();
        let bound = norm_sq(&x.t_matvec(&y)).sqrt() / 1e9;
        assert!(norm_sq(&b).sqrt() <= bound);
    }

    #[test]
    fn ridge_primal_dual_and_normal_equations() {
        let x = random(30, 200, 9);
        let y = derive_stream(10, &[]).standard_normal(30);
        let n_lambda = 0.7;
        let primal = ridge_solve_primal(&x, &y, n_lambda).unwrap();
        let dual = ridge_solve_dual(&x, &y, n_lambda).unwrap();
        assert!(rel_diff(&primal, &dual) < 1e-10);
        let svd_form = ridge_svd(&x, &y, n_lambda).unwrap();
        assert!(rel_diff(&svd_form, &dual) < 1e-10);
        let xty = x.t_matvec(&y);
        let mut lhs = x.t_matvec(&x.matvec(&dual));
        axpy(n_lambda, &dual, &mut lhs);
        assert!(rel_diff(&lhs, &xty) < 1e-9);
    }
}
