//! Generative processes for the four data models. A [`QueryContext`] holds
//! what stays fixed within one repeat (the query point and any fixed
//! weights); [`sample_trial`] redraws everything else and returns one
//! model output `ŷ₀`.
//!
//! Two samplers use exact reductions instead of materializing the full
//! design:
//!
//! * `gaussian_linear` rotates `x₀,p` onto `e₁`. The remaining `p − 1`
//!   columns then enter only through the lower-trapezoidal factor `L` of
//!   their LQ decomposition, whose entries are independent normals and
//!   chi variables, and the regression runs on `[X e₁ | L]`. The per-trial
//!   cost is independent of `p` and `D`.
//! * `relu_features` (when `p < D`) draws the rows of `ZV` from
//!   `N(0, VᵀV)` and the labels from the Gaussian conditional of `zᵀβ`
//!   given those rows, instead of multiplying an `n × D` matrix.

use nalgebra::DMatrix;
use rand::seq::index;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, ModelKind};
use crate::numerics::{
    dct_design_matrix, dct_row_aliases, dot, min_norm_lstsq, norm_sq, ridge_solve, DenseMatrix,
    NumericsError,
};
use crate::rng::RngStream;
use crate::theory::{sample_query_norms, TheoryInputs};

#[derive(Debug, Error)]
pub enum DataModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("time series needs n = {n} training indices but only {available} are available")]
    TooFewTimePoints { n: usize, available: usize },
    #[error("parameter index {0} is outside the grid")]
    BadParamIndex(usize),
    #[error("membership bit must be 0 or 1, got {0}")]
    BadMembership(u8),
    #[error("non-finite model output")]
    NonFiniteOutput,
}

/// One model output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutput {
    pub y_hat: f64,
    pub m: u8,
    /// `y₀` when it entered the training set (`m = 1`).
    pub y0: Option<f64>,
}

/// Quantities fixed for one repeat.
#[derive(Clone, Debug)]
pub struct QueryContext {
    pub n: usize,
    pub dim: usize,
    pub sigma: f64,
    pub ps: Vec<usize>,
    pub data: ModelData,
}

#[derive(Clone, Debug)]
pub enum ModelData {
    GaussianLinear(GaussianQuery),
    LatentSpace(LatentQuery),
    TimeSeries(TimeSeriesQuery),
    ReluFeatures(ReluQuery),
}

/// `x₀ ~ N(0, I_D)`, kept only through the norms the samplers need.
#[derive(Clone, Debug)]
pub struct GaussianQuery {
    /// `‖x₀,p‖²` per grid index.
    pub norm_x0p_sq: Vec<f64>,
    pub norm_x0_sq: f64,
}

#[derive(Clone, Debug)]
pub struct LatentQuery {
    /// Row `j` is `w_j ∈ R^d`, for `j < p_max`.
    pub w: DenseMatrix,
    pub z0: Vec<f64>,
    /// `x₀,j = w_jᵀz₀ + u₀,j`.
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TimeSeriesQuery {
    pub w: DenseMatrix,
    /// Zero-based row of `W` used as the query.
    pub t0: usize,
    /// Rows never drawn as other training points: `t₀` and rows equal to it.
    pub excluded: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ReluQuery {
    pub z0: Vec<f64>,
    pub per_p: Vec<ReluAtP>,
}

#[derive(Clone, Debug)]
pub struct ReluAtP {
    /// `D × p`, rows on the unit sphere.
    pub v: DenseMatrix,
    pub x0: Vec<f64>,
    /// Lower Cholesky factor of `VᵀV` when the reduced sampler is used.
    chol: Option<DenseMatrix>,
}

impl QueryContext {
    pub fn kind(&self) -> ModelKind {
        match self.data {
            ModelData::GaussianLinear(_) => ModelKind::GaussianLinear,
            ModelData::LatentSpace(_) => ModelKind::LatentSpace,
            ModelData::TimeSeries(_) => ModelKind::TimeSeries,
            ModelData::ReluFeatures(_) => ModelKind::ReluFeatures,
        }
    }

    /// Inputs for the closed forms (gaussian_linear only).
    pub fn theory_inputs(&self, p_idx: usize) -> Option<TheoryInputs> {
        match &self.data {
            ModelData::GaussianLinear(q) => Some(TheoryInputs {
                n: self.n,
                p: self.ps[p_idx],
                dim: self.dim,
                sigma: self.sigma,
                norm_x0p_sq: q.norm_x0p_sq[p_idx],
                norm_x0_sq: q.norm_x0_sq,
            }),
            _ => None,
        }
    }

    /// `x₀,p` (not available for gaussian_linear, which keeps norms only).
    pub fn query_point(&self, p_idx: usize) -> Option<Vec<f64>> {
        let p = self.ps[p_idx];
        match &self.data {
            ModelData::GaussianLinear(_) => None,
            ModelData::LatentSpace(q) => Some(q.x0[..p].to_vec()),
            ModelData::TimeSeries(q) => Some(q.w.row(q.t0)[..p].to_vec()),
            ModelData::ReluFeatures(q) => Some(q.per_p[p_idx].x0.clone()),
        }
    }
}

/// Draws the per-repeat fixed quantities.
pub fn make_context(
    config: &ExperimentConfig,
    stream: &mut RngStream,
) -> Result<QueryContext, DataModelError> {
    config.validate()?;
    let ps = config.params()?;
    let p_max = config.p_max()?;
    let (n, dim) = (config.n, config.dim);
    let data = match config.model {
        ModelKind::GaussianLinear => {
            let (norm_x0p_sq, norm_x0_sq) = sample_query_norms(stream, dim, &ps);
            ModelData::GaussianLinear(GaussianQuery {
                norm_x0p_sq,
                norm_x0_sq,
            })
        }
        ModelKind::LatentSpace => {
            let d = config.latent_dim;
            let w = DenseMatrix::new(p_max, d, stream.standard_normal(p_max * d))?;
            let z0 = stream.standard_normal(d);
            let mut x0 = w.matvec(&z0);
            for v in x0.iter_mut() {
                *v += stream.normal();
            }
            ModelData::LatentSpace(LatentQuery { w, z0, x0 })
        }
        ModelKind::TimeSeries => {
            let w = dct_design_matrix(dim);
            let t0 = stream.index(dim);
            let mut excluded = dct_row_aliases(dim, t0);
            excluded.push(t0);
            let available = dim - excluded.len();
            if n > available {
                return Err(DataModelError::TooFewTimePoints { n, available });
            }
            ModelData::TimeSeries(TimeSeriesQuery { w, t0, excluded })
        }
        ModelKind::ReluFeatures => {
            let g = stream.standard_normal(dim * p_max);
            let z0 = stream.standard_normal(dim);
            let per_p = ps
                .iter()
                .map(|&p| relu_at_p(&g, dim, p_max, p, &z0))
                .collect::<Result<Vec<_>, _>>()?;
            ModelData::ReluFeatures(ReluQuery { z0, per_p })
        }
    };
    Ok(QueryContext {
        n,
        dim,
        sigma: config.sigma,
        ps,
        data,
    })
}

/// `V_p` from the leading `p` columns of a shared Gaussian `D × p_max`
/// block, each row rescaled to unit length.
fn relu_at_p(
    g: &[f64],
    dim: usize,
    p_max: usize,
    p: usize,
    z0: &[f64],
) -> Result<ReluAtP, DataModelError> {
    let mut data = Vec::with_capacity(dim * p);
    for j in 0..dim {
        let row = &g[j * p_max..j * p_max + p];
        let norm = norm_sq(row).sqrt();
        if norm > 0.0 {
            data.extend(row.iter().map(|v| v / norm));
        } else {
            // measure-zero event; any unit vector keeps the row on the sphere
            data.extend((0..p).map(|k| if k == 0 { 1.0 } else { 0.0 }));
        }
    }
    let v = DenseMatrix::new(dim, p, data)?;
    let x0 = v.t_matvec(z0).into_iter().map(|s| s.max(0.0)).collect();
    let chol = if p < dim {
        let gram = v.gram_cols();
        DMatrix::from_row_slice(p, p, gram.as_slice())
            .cholesky()
            .map(|c| {
                let l = c.l();
                DenseMatrix::from_fn(p, p, |i, j| l[(i, j)])
            })
    } else {
        None
    };
    Ok(ReluAtP { v, x0, chol })
}

fn fit(x: &DenseMatrix, y: &[f64], lambda: f64, n: usize) -> Result<Vec<f64>, NumericsError> {
    if lambda > 0.0 {
        ridge_solve(x, y, n as f64 * lambda)
    } else {
        Ok(min_norm_lstsq(x, y)?.beta_hat)
    }
}

/// One trial at grid index `p_idx`: fresh training data, with `x₀` in row 1
/// when `m = 1`, then `ŷ₀ = x₀,pᵀβ̂`.
pub fn sample_trial(
    ctx: &QueryContext,
    p_idx: usize,
    m: u8,
    lambda: f64,
    stream: &mut RngStream,
) -> Result<TrialOutput, DataModelError> {
    if p_idx >= ctx.ps.len() {
        return Err(DataModelError::BadParamIndex(p_idx));
    }
    if m > 1 {
        return Err(DataModelError::BadMembership(m));
    }
    let (y_hat, y0) = match &ctx.data {
        ModelData::GaussianLinear(q) => gaussian_trial(ctx, q, p_idx, m == 1, lambda, stream)?,
        ModelData::LatentSpace(q) => latent_trial(ctx, q, p_idx, m == 1, lambda, stream)?,
        ModelData::TimeSeries(q) => time_series_trial(ctx, q, p_idx, m == 1, lambda, stream)?,
        ModelData::ReluFeatures(q) => relu_trial(ctx, q, p_idx, m == 1, lambda, stream)?,
    };
    if !y_hat.is_finite() {
        return Err(DataModelError::NonFiniteOutput);
    }
    Ok(TrialOutput { y_hat, m, y0 })
}

/// `rows × min(rows, ν)` lower-trapezoidal `L` with `A = LQ` for an
/// `rows × ν` standard Gaussian `A`.
fn sample_lq_factor(stream: &mut RngStream, rows: usize, nu: usize) -> DenseMatrix {
    let k = rows.min(nu);
    let mut l = DenseMatrix::zeros(rows, k);
    for i in 0..rows {
        for j in 0..k.min(i) {
            l.set(i, j, stream.normal());
        }
        if i < k {
            l.set(i, i, stream.chi_squared((nu - i) as u64).sqrt());
        }
    }
    l
}

fn gaussian_trial(
    ctx: &QueryContext,
    q: &GaussianQuery,
    p_idx: usize,
    member: bool,
    lambda: f64,
    s: &mut RngStream,
) -> Result<(f64, Option<f64>), DataModelError> {
    let (n, dim, sigma) = (ctx.n, ctx.dim, ctx.sigma);
    let p = ctx.ps[p_idx];
    let r = q.norm_x0p_sq[p_idx].sqrt();
    let r_rest = (q.norm_x0_sq - q.norm_x0p_sq[p_idx]).max(0.0).sqrt();
    let scale = (1.0 / dim as f64).sqrt();

    // β in the rotated frame: β₁ along x₀,p, ξ = Qβ_rest, and the unseen
    // block split into its component along x₀,p̄ and the remaining energy
    let beta1 = scale * s.normal();
    let (u, rest_energy) = if p < dim {
        let u = scale * s.normal();
        (u, u * u + s.chi_squared((dim - p - 1) as u64) / dim as f64)
    } else {
        (0.0, 0.0)
    };
    let eta_sd = (sigma * sigma + rest_energy).sqrt();

    let first = usize::from(member);
    let l = sample_lq_factor(s, n - first, p - 1);
    let k = l.cols();
    let mut xi = vec![0.0; k];
    s.fill_normal(&mut xi, scale);

    let mut x = DenseMatrix::zeros(n, 1 + k);
    let mut y = vec![0.0; n];
    let mut y0 = None;
    if member {
        x.set(0, 0, r);
        let label = r * beta1 + r_rest * u + sigma * s.normal();
        y[0] = label;
        y0 = Some(label);
    }
    for i in first..n {
        let a = s.normal();
        let li = l.row(i - first);
        let row = x.row_mut(i);
        row[0] = a;
        row[1..].copy_from_slice(li);
        y[i] = a * beta1 + dot(li, &xi) + eta_sd * s.normal();
    }
    let beta_hat = fit(&x, &y, lambda, n)?;
    Ok((r * beta_hat[0], y0))
}

fn latent_trial(
    ctx: &QueryContext,
    q: &LatentQuery,
    p_idx: usize,
    member: bool,
    lambda: f64,
    s: &mut RngStream,
) -> Result<(f64, Option<f64>), DataModelError> {
    let (n, sigma) = (ctx.n, ctx.sigma);
    let p = ctx.ps[p_idx];
    let d = q.z0.len();
    let mut beta = vec![0.0; d];
    s.fill_normal(&mut beta, (1.0 / d as f64).sqrt());

    let z = DenseMatrix::new(n, d, s.standard_normal(n * d))?;
    let w_p_t = DenseMatrix::from_fn(d, p, |i, j| q.w.get(j, i));
    let mut x = z.matmul(&w_p_t);
    for v in x.as_mut_slice() {
        *v += s.normal();
    }
    let mut y = z.matvec(&beta);
    for v in y.iter_mut() {
        *v += sigma * s.normal();
    }
    let x0p = &q.x0[..p];
    let mut y0 = None;
    if member {
        x.row_mut(0).copy_from_slice(x0p);
        let label = dot(&q.z0, &beta) + sigma * s.normal();
        y[0] = label;
        y0 = Some(label);
    }
    let beta_hat = fit(&x, &y, lambda, n)?;
    Ok((dot(x0p, &beta_hat), y0))
}

fn time_series_trial(
    ctx: &QueryContext,
    q: &TimeSeriesQuery,
    p_idx: usize,
    member: bool,
    lambda: f64,
    s: &mut RngStream,
) -> Result<(f64, Option<f64>), DataModelError> {
    let (n, dim) = (ctx.n, ctx.dim);
    let p = ctx.ps[p_idx];
    let mut beta = vec![0.0; dim];
    s.fill_normal(&mut beta, (1.0 / dim as f64).sqrt());

    let allowed: Vec<usize> = (0..dim).filter(|k| !q.excluded.contains(k)).collect();
    let first = usize::from(member);
    let picks = index::sample(s.rng_mut(), allowed.len(), n - first);
    let mut rows = Vec::with_capacity(n);
    if member {
        rows.push(q.t0);
    }
    rows.extend(picks.iter().map(|i| allowed[i]));

    let mut x = DenseMatrix::zeros(n, p);
    let mut y = vec![0.0; n];
    for (i, &t) in rows.iter().enumerate() {
        let wt = q.w.row(t);
        x.row_mut(i).copy_from_slice(&wt[..p]);
        y[i] = dot(wt, &beta);
    }
    let y0 = member.then(|| y[0]);
    let beta_hat = fit(&x, &y, lambda, n)?;
    Ok((dot(&q.w.row(q.t0)[..p], &beta_hat), y0))
}

fn relu_trial(
    ctx: &QueryContext,
    q: &ReluQuery,
    p_idx: usize,
    member: bool,
    lambda: f64,
    s: &mut RngStream,
) -> Result<(f64, Option<f64>), DataModelError> {
    let (n, dim, sigma) = (ctx.n, ctx.dim, ctx.sigma);
    let p = ctx.ps[p_idx];
    let at = &q.per_p[p_idx];
    let mut beta = vec![0.0; dim];
    s.fill_normal(&mut beta, (1.0 / dim as f64).sqrt());

    let first = usize::from(member);
    let fresh = n - first;
    let (pre, labels) = match &at.chol {
        Some(l) => {
            // (Vᵀz, zᵀβ) is jointly Gaussian given β: Vᵀz = L w with
            // w ~ N(0, I_p), and zᵀβ = bᵀw + N(0, ‖β‖² − ‖b‖²), b = L⁻¹Vᵀβ
            let b = forward_substitute(l, &at.v.t_matvec(&beta));
            let resid_sd = (norm_sq(&beta) - norm_sq(&b)).max(0.0).sqrt();
            let w = DenseMatrix::new(fresh, p, s.standard_normal(fresh * p))?;
            let pre = w.matmul_lower_t(l);
            let labels: Vec<f64> = (0..fresh)
                .map(|i| dot(w.row(i), &b) + resid_sd * s.normal() + sigma * s.normal())
                .collect();
            (pre, labels)
        }
        None => {
            let z = DenseMatrix::new(fresh, dim, s.standard_normal(fresh * dim))?;
            let pre = z.matmul(&at.v);
            let labels: Vec<f64> = z
                .matvec(&beta)
                .into_iter()
                .map(|v| v + sigma * s.normal())
                .collect();
            (pre, labels)
        }
    };

    let mut x = DenseMatrix::zeros(n, p);
    let mut y = vec![0.0; n];
    let mut y0 = None;
    if member {
        x.row_mut(0).copy_from_slice(&at.x0);
        let label = dot(&q.z0, &beta) + sigma * s.normal();
        y[0] = label;
        y0 = Some(label);
    }
    for i in 0..fresh {
        for (dst, &v) in x.row_mut(first + i).iter_mut().zip(pre.row(i)) {
            *dst = v.max(0.0);
        }
        y[first + i] = labels[i];
    }
    let beta_hat = fit(&x, &y, lambda, n)?;
    Ok((dot(&at.x0, &beta_hat), y0))
}

/// Solves `L b = c` for lower-triangular `L`.
fn forward_substitute(l: &DenseMatrix, c: &[f64]) -> Vec<f64> {
    let mut b = c.to_vec();
    for i in 0..b.len() {
        let row = l.row(i);
        let acc = dot(&row[..i], &b[..i]);
        b[i] = (b[i] - acc) / row[i];
    }
    b
}
