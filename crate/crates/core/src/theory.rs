//! Closed-form output variances, optimal-adversary threshold and advantage,
//! ridge variances through the Marchenko–Pastur Stieltjes transform,
//! generalization error, and the two privacy/utility curves.
//!
//! Everything here is asymptotic in `n, p, D → ∞` with `p / n → γ`, and is
//! evaluated at finite `(n, p, D)` by plugging them in.

use thiserror::Error;

use crate::numerics::normal_sf;
use crate::rng::{derive_stream, tag, RngStream};
use crate::types::{AdvantageEstimate, TradeoffPoint, VariancePair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("p = {p} must exceed n + 1 = {}", n + 1)]
    Pole { n: usize, p: usize },
    #[error("variance must be positive and finite, got {0}")]
    NonPositiveVariance(f64),
    #[error("equal variances leave the threshold undefined")]
    EqualVariances,
    #[error("lambda must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("gamma must be positive and finite, got {0}")]
    NonPositiveGamma(f64),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Sizes and query-point norms entering the closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryInputs {
    pub n: usize,
    pub p: usize,
    pub dim: usize,
    pub sigma: f64,
    /// `‖x₀,p‖²` over the first `p` coordinates.
    pub norm_x0p_sq: f64,
    /// `‖x₀‖²` over all `D` coordinates.
    pub norm_x0_sq: f64,
}

impl TheoryInputs {
    /// Query norms replaced by their expectations `p` and `D`.
    pub fn concentration(n: usize, p: usize, dim: usize, sigma: f64) -> Self {
        Self {
            n,
            p,
            dim,
            sigma,
            norm_x0p_sq: p as f64,
            norm_x0_sq: dim as f64,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// `‖x₀,p̄‖²`, the norm over the coordinates the model does not see.
    pub fn norm_x0_rest_sq(&self) -> f64 {
        (self.norm_x0_sq - self.norm_x0p_sq).max(0.0)
    }

    fn check(&self) -> Result<(), TheoryError> {
        if self.n == 0 || self.p == 0 || self.dim == 0 {
            return Err(TheoryError::InvalidInput("n, p and D must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(TheoryError::InvalidInput("sigma must be finite and >= 0"));
        }
        if !(self.norm_x0p_sq >= 0.0 && self.norm_x0p_sq.is_finite())
            || !(self.norm_x0_sq.is_finite())
            || self.norm_x0p_sq > self.norm_x0_sq * (1.0 + 1e-12)
        {
            return Err(TheoryError::InvalidInput("need 0 <= ‖x₀,p‖² <= ‖x₀‖²"));
        }
        Ok(())
    }

    /// Noise level seen by the model: label noise plus the signal in the
    /// unobserved coordinates, `σ² + 1 − p/D`.
    fn effective_noise(&self) -> f64 {
        self.sigma * self.sigma + 1.0 - self.p as f64 / self.dim as f64
    }
}

/// Non-member output variance of the min-norm interpolator:
/// `(n/p) · (1/D + (1 + σ² − p/D)/(p − n − 1)) · ‖x₀,p‖²`.
pub fn sigma0_sq(inp: &TheoryInputs) -> Result<f64, TheoryError> {
    inp.check()?;
    if inp.p <= inp.n + 1 {
        return Err(TheoryError::Pole { n: inp.n, p: inp.p });
    }
    let (n, p, d) = (inp.n as f64, inp.p as f64, inp.dim as f64);
    Ok((n / p) * (1.0 / d + inp.effective_noise() / (p - n - 1.0)) * inp.norm_x0p_sq)
}

/// Member output variance: the interpolator reproduces `y₀`, so
/// `σ² + ‖x₀‖²/D` regardless of `p`.
pub fn sigma1_sq(inp: &TheoryInputs) -> f64 {
    inp.sigma * inp.sigma + inp.norm_x0_sq / inp.dim as f64
}

pub fn minnorm_variances(inp: &TheoryInputs) -> Result<VariancePair, TheoryError> {
    Ok(VariancePair::new(sigma0_sq(inp)?, sigma1_sq(inp)))
}

fn check_variance(v: f64) -> Result<(), TheoryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(TheoryError::NonPositiveVariance(v))
    }
}

/// `(ln(1 + t) / t)` for `t = large/small − 1 > 0`; this is `α² / large`.
fn threshold_ratio(small: f64, large: f64) -> f64 {
    let t = large / small - 1.0;
    t.ln_1p() / t
}

/// Point `α > 0` where the densities of `N(0, σ₀²)` and `N(0, σ₁²)` cross:
/// `α² = σ₀²σ₁² ln(σ₁²/σ₀²) / (σ₁² − σ₀²)`. Symmetric in its arguments.
pub fn lrt_threshold(sigma0_sq: f64, sigma1_sq: f64) -> Result<f64, TheoryError> {
    check_variance(sigma0_sq)?;
    check_variance(sigma1_sq)?;
    let (small, large) = sorted(sigma0_sq, sigma1_sq);
    if small == large {
        return Err(TheoryError::EqualVariances);
    }
    Ok((large * threshold_ratio(small, large)).sqrt())
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Advantage of the likelihood-ratio adversary between `N(0, σ₀²)` and
/// `N(0, σ₁²)`: `2(Φ(α/σ_small) − Φ(α/σ_large))`. Whichever arm has the
/// larger variance, the test flips accordingly, so the value is symmetric.
/// Equal variances give 0.
pub fn advantage_point(sigma0_sq: f64, sigma1_sq: f64) -> Result<f64, TheoryError> {
    check_variance(sigma0_sq)?;
    check_variance(sigma1_sq)?;
    let (small, large) = sorted(sigma0_sq, sigma1_sq);
    if small == large {
        return Ok(0.0);
    }
    let ratio = threshold_ratio(small, large);
    let z_large = ratio.sqrt();
    let z_small = (ratio * (large / small)).sqrt();
    // Φ(a) − Φ(b) = sf(b) − sf(a): no cancellation near 1
    let adv = 2.0 * (normal_sf(z_large) - normal_sf(z_small));
    Ok(adv.clamp(0.0, 1.0))
}

/// How the expectation over the query point is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryAveraging {
    /// `‖x₀,p‖² → p`, `‖x₀‖² → D`; a single deterministic evaluation.
    Concentration,
    /// `draws` independent `x₀ ~ N(0, I_D)`, seeded.
    Sampled { draws: usize, seed: u64 },
}

/// Prefix norms `‖x₀,p‖²` at each requested `p`, and the full `‖x₀‖²`, for
/// one `x₀ ~ N(0, I_D)`. Disjoint coordinate blocks have independent
/// chi-square norms, so the draw costs O(#grid) rather than O(D).
pub fn sample_query_norms(stream: &mut RngStream, dim: usize, ps: &[usize]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by_key(|&i| ps[i]);
    let mut out = vec![0.0; ps.len()];
    let (mut acc, mut at) = (0.0, 0usize);
    for i in order {
        let p = ps[i].min(dim);
        if p > at {
            acc += stream.chi_squared((p - at) as u64);
            at = p;
        }
        out[i] = acc;
    }
    let total = acc + stream.chi_squared((dim - at) as u64);
    (out, total)
}

/// Query-norm samples for every averaging draw: `result[k] = (prefix norms, total)`.
fn query_norm_draws(averaging: QueryAveraging, dim: usize, ps: &[usize]) -> Vec<(Vec<f64>, f64)> {
    match averaging {
        QueryAveraging::Concentration => {
            vec![(ps.iter().map(|&p| p as f64).collect(), dim as f64)]
        }
        QueryAveraging::Sampled { draws, seed } => (0..draws)
            .map(|k| {
                let mut s = derive_stream(seed, &[tag::QUERY_NORMS, k as u64]);
                sample_query_norms(&mut s, dim, ps)
            })
            .collect(),
    }
}

/// Expected min-norm advantage over query points for each `p` in the grid.
/// Sampled draws share the same `x₀` across the grid.
pub fn minnorm_advantage_curve(
    n: usize,
    dim: usize,
    sigma: f64,
    ps: &[usize],
    averaging: QueryAveraging,
) -> Result<Vec<AdvantageEstimate>, TheoryError> {
    variance_advantage_curve(n, dim, sigma, ps, averaging, minnorm_variances)
}

/// Single-`p` form of [`minnorm_advantage_curve`].
pub fn minnorm_advantage(
    n: usize,
    p: usize,
    dim: usize,
    sigma: f64,
    averaging: QueryAveraging,
) -> Result<AdvantageEstimate, TheoryError> {
    Ok(minnorm_advantage_curve(n, dim, sigma, &[p], averaging)?.remove(0))
}

fn variance_advantage_curve(
    n: usize,
    dim: usize,
    sigma: f64,
    ps: &[usize],
    averaging: QueryAveraging,
    variances: impl Fn(&TheoryInputs) -> Result<VariancePair, TheoryError>,
) -> Result<Vec<AdvantageEstimate>, TheoryError> {
    if let QueryAveraging::Sampled { draws: 0, .. } = averaging {
        return Err(TheoryError::InvalidInput("need at least one query draw"));
    }
    let draws = query_norm_draws(averaging, dim, ps);
    let mut per_p = vec![Vec::with_capacity(draws.len()); ps.len()];
    for (prefix, total) in &draws {
        for (i, &p) in ps.iter().enumerate() {
            let inp = TheoryInputs {
                n,
                p,
                dim,
                sigma,
                norm_x0p_sq: prefix[i],
                norm_x0_sq: *total,
            };
            let v = variances(&inp)?;
            per_p[i].push(advantage_point(v.sigma0_sq, v.sigma1_sq)?);
        }
    }
    Ok(per_p
        .into_iter()
        .map(AdvantageEstimate::from_values)
        .collect())
}

/// `g(−λ)` and `g′(−λ)` for the Marchenko–Pastur law with ratio `γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StieltjesValue {
    pub g: f64,
    pub g_prime: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl StieltjesValue {
    /// `γλg² + (1 − γ + λ)g − 1`, zero at the exact root.
    pub fn quadratic_residual(&self) -> f64 {
        let (g, gamma, lambda) = (self.g, self.gamma, self.lambda);
        gamma * lambda * g * g + (1.0 - gamma + lambda) * g - 1.0
    }
}

/// Positive root of `γλg² + (1 − γ + λ)g − 1 = 0`, with the derivative
/// `g′(−λ) = (g + γg²) / (1 − γ + λ + 2γλg)` from implicit differentiation.
pub fn stieltjes_mp(gamma: f64, lambda: f64) -> Result<StieltjesValue, TheoryError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(TheoryError::NonPositiveGamma(gamma));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(TheoryError::NonPositiveLambda(lambda));
    }
    let b = 1.0 - gamma + lambda;
    let disc = (b * b + 4.0 * gamma * lambda).sqrt();
    // pick the form without cancellation
    let g = if b <= 0.0 {
        (disc - b) / (2.0 * gamma * lambda)
    } else {
        2.0 / (b + disc)
    };
    // 1 − γ + λ + 2γλg equals the discriminant root at the exact solution
    let denom = b + 2.0 * gamma * lambda * g;
    let g_prime = (g + gamma * g * g) / denom;
    Ok(StieltjesValue {
        g,
        g_prime,
        gamma,
        lambda,
    })
}

/// Ridge output variances for non-members and members, evaluated as
/// displayed in the ridge result (with `‖x₀,p̄‖² = ‖x₀‖² − ‖x₀,p‖²` in the
/// member variance). `lambda` is the per-sample coefficient; the solver
/// adds `nλ` to the Gram diagonal.
pub fn ridge_variances(inp: &TheoryInputs, lambda: f64) -> Result<VariancePair, TheoryError> {
    inp.check()?;
    let st = stieltjes_mp(inp.gamma(), lambda)?;
    let (g, gp, gamma) = (st.g, st.g_prime, st.gamma);
    let p = inp.p as f64;
    let d = inp.dim as f64;
    let s = inp.effective_noise();
    let xp = inp.norm_x0p_sq;
    let r = xp / p;

    let sigma0 = gp * gamma / (1.0 + g * gamma).powi(2) * s * r
        + (1.0 - 2.0 * lambda * g + lambda * lambda * gp) * xp / d;

    let shrink = lambda * lambda / ((lambda + gamma * g) * (lambda + gamma * r * g));
    let h = gamma * g * r;
    let sigma1 = shrink * shrink * gamma * gp * r * s
        + (h / (1.0 + h)).powi(2) * (inp.sigma * inp.sigma + inp.norm_x0_rest_sq() / d)
        + (1.0 - 2.0 * lambda * g / (1.0 + h) + lambda * lambda * gp / (1.0 + h).powi(2)) * xp / d;

    Ok(VariancePair::new(sigma0.max(0.0), sigma1.max(0.0)))
}

/// Expected ridge advantage over query points for each `p`.
pub fn ridge_advantage_curve(
    n: usize,
    dim: usize,
    sigma: f64,
    lambda: f64,
    ps: &[usize],
    averaging: QueryAveraging,
) -> Result<Vec<AdvantageEstimate>, TheoryError> {
    variance_advantage_curve(n, dim, sigma, ps, averaging, |inp| {
        ridge_variances(inp, lambda)
    })
}

/// Expected squared error on a fresh `(x₀, y)`:
/// `1 + σ² + n((1 + σ² − p/D)/(p − n − 1) − 1/D)`.
pub fn generalization_error(
    n: usize,
    p: usize,
    dim: usize,
    sigma: f64,
) -> Result<f64, TheoryError> {
    let inp = TheoryInputs::concentration(n, p, dim, sigma);
    inp.check()?;
    if p <= n + 1 {
        return Err(TheoryError::Pole { n, p });
    }
    let (nf, pf, d) = (n as f64, p as f64, dim as f64);
    Ok(1.0 + sigma * sigma + nf * (inp.effective_noise() / (pf - nf - 1.0) - 1.0 / d))
}

/// The same error written through the non-member variance:
/// `1 + σ² + E[σ₀²] − 2n/D`.
pub fn generalization_error_from_variance(
    n: usize,
    p: usize,
    dim: usize,
    sigma: f64,
) -> Result<f64, TheoryError> {
    let s0 = sigma0_sq(&TheoryInputs::concentration(n, p, dim, sigma))?;
    Ok(1.0 + sigma * sigma + s0 - 2.0 * n as f64 / dim as f64)
}

/// Privacy/utility curve from shrinking the model: one point per `p`.
pub fn feature_reduction_curve(
    n: usize,
    dim: usize,
    sigma: f64,
    ps: &[usize],
    averaging: QueryAveraging,
) -> Result<Vec<TradeoffPoint>, TheoryError> {
    let adv = minnorm_advantage_curve(n, dim, sigma, ps, averaging)?;
    ps.iter()
        .zip(adv)
        .map(|(&p, a)| {
            Ok(TradeoffPoint {
                gen_error: generalization_error(n, p, dim, sigma)?,
                advantage: a.mean,
                knob: p as f64,
            })
        })
        .collect()
}

/// Privacy/utility curve from adding `N(0, σ̄²)` to non-member outputs of the
/// full model (`p = D`): one point per variance `σ̄²` in `noise_vars`.
pub fn noise_addition_curve(
    n: usize,
    dim: usize,
    sigma: f64,
    noise_vars: &[f64],
    averaging: QueryAveraging,
) -> Result<Vec<TradeoffPoint>, TheoryError> {
    if noise_vars.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(TheoryError::InvalidInput(
            "noise variances must be finite and >= 0",
        ));
    }
    if let QueryAveraging::Sampled { draws: 0, .. } = averaging {
        return Err(TheoryError::InvalidInput("need at least one query draw"));
    }
    let base_error = generalization_error(n, dim, dim, sigma)?;
    let draws = query_norm_draws(averaging, dim, &[dim]);
    let mut out = Vec::with_capacity(noise_vars.len());
    for &nv in noise_vars {
        let mut per = Vec::with_capacity(draws.len());
        for (_, total) in &draws {
            let inp = TheoryInputs {
                n,
                p: dim,
                dim,
                sigma,
                norm_x0p_sq: *total,
                norm_x0_sq: *total,
            };
            let v = minnorm_variances(&inp)?;
            per.push(advantage_point(v.sigma0_sq + nv, v.sigma1_sq)?);
        }
        out.push(TradeoffPoint {
            gen_error: base_error + nv,
            advantage: AdvantageEstimate::from_values(per).mean,
            knob: nv,
        });
    }
    Ok(out)
}

/// Noise variances whose generalization error matches each feature-reduction
/// point: `σ̄² = err(p) − err(D)`.
pub fn matched_noise_variances(
    n: usize,
    dim: usize,
    sigma: f64,
    ps: &[usize],
) -> Result<Vec<f64>, TheoryError> {
    let full = generalization_error(n, dim, dim, sigma)?;
    ps.iter()
        .map(|&p| Ok((generalization_error(n, p, dim, sigma)? - full).max(0.0)))
        .collect()
}

/// Largest advantage gap between two trade-off curves, comparing each point
/// of `a` with `b` linearly interpolated at the same generalization error.
/// Points of `a` outside `b`'s error range are skipped; returns `None` when
/// nothing overlaps.
pub fn max_advantage_gap(a: &[TradeoffPoint], b: &[TradeoffPoint]) -> Option<f64> {
    let mut b_sorted: Vec<TradeoffPoint> = b.to_vec();
    b_sorted.sort_by(|x, y| x.gen_error.total_cmp(&y.gen_error));
    let (lo, hi) = (b_sorted.first()?.gen_error, b_sorted.last()?.gen_error);
    let mut worst: Option<f64> = None;
    for pt in a {
        let e = pt.gen_error;
        if e < lo || e > hi {
            continue;
        }
        let k = b_sorted.partition_point(|q| q.gen_error < e);
        let interp = if k == 0 || b_sorted[k].gen_error == e {
            b_sorted[k].advantage
        } else {
            let (l, r) = (b_sorted[k - 1], b_sorted[k]);
            let w = (e - l.gen_error) / (r.gen_error - l.gen_error);
            l.advantage + w * (r.advantage - l.advantage)
        };
        let gap = (pt.advantage - interp).abs();
        worst = Some(worst.map_or(gap, |w: f64| w.max(gap)));
    }
    worst
}
