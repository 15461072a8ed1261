//! Experiment orchestration: per-repeat contexts, parallel trials,
//! histogram estimates, and closed-form overlays.
//!
//! Every trial owns the stream `(seed, [TRIAL, repeat, p_idx, m, trial])`,
//! and results are gathered in index order, so outputs depend only on the
//! config, never on the worker count. The trial path does not include `λ`:
//! a ridge sweep reuses the same datasets at every `λ`.

use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, ModelKind};
use crate::datamodels::{make_context, sample_trial, DataModelError, QueryContext};
use crate::estimator::{
    build_histogram_pair, histogram_advantage, EstimatorError, MIN_TRIALS_PER_ARM,
};
use crate::rng::{derive_stream, tag};
use crate::theory::{self, TheoryError};
use crate::types::{mean_and_stderr, AdvantageEstimate, VariancePair};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataModelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("{0}")]
    Unsupported(&'static str),
}

/// Empirical advantage curve over the parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveResult {
    pub model: ModelKind,
    pub n: usize,
    pub lambda: f64,
    pub ps: Vec<usize>,
    pub gammas: Vec<f64>,
    pub empirical: Vec<AdvantageEstimate>,
    /// Closed-form advantage averaged over the same query points
    /// (gaussian_linear only; `None` where the closed form is undefined).
    pub theory_overlay: Option<Vec<Option<f64>>>,
    /// Expected generalization error (gaussian_linear, `λ = 0`, `p > n + 1`).
    pub gen_error: Vec<Option<f64>>,
    pub wall_time: f64,
}

/// One row of the output-variance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub gamma: f64,
    pub p: usize,
    pub arm: u8,
    pub empirical_var: f64,
    pub theory_var: Option<f64>,
    pub n_samples: usize,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))
}

fn check_trials(config: &ExperimentConfig) {
    if config.trials_per_arm < MIN_TRIALS_PER_ARM {
        warn!(
            "{} trials per arm is below {}; histogram advantages are biased toward 0",
            config.trials_per_arm, MIN_TRIALS_PER_ARM
        );
    }
}

/// Model outputs for one `(repeat, p, m)` cell, in trial order. Output noise
/// `N(0, σ̄²)` is added to non-member outputs.
fn cell_outputs(
    config: &ExperimentConfig,
    ctx: &QueryContext,
    repeat: usize,
    p_idx: usize,
    m: u8,
) -> Result<Vec<f64>, RunError> {
    let (seed, lambda, noise) = (config.seed, config.lambda, config.noise_bar);
    (0..config.trials_per_arm)
        .into_par_iter()
        .map(|t| {
            let path = [
                tag::TRIAL,
                repeat as u64,
                p_idx as u64,
                u64::from(m),
                t as u64,
            ];
            let mut s = derive_stream(seed, &path);
            let out = sample_trial(ctx, p_idx, m, lambda, &mut s)?;
            Ok(if m == 0 && noise > 0.0 {
                out.y_hat + noise * s.normal()
            } else {
                out.y_hat
            })
        })
        .collect()
}

fn context(config: &ExperimentConfig, repeat: usize) -> Result<QueryContext, RunError> {
    let mut s = derive_stream(config.seed, &[tag::CONTEXT, repeat as u64]);
    Ok(make_context(config, &mut s)?)
}

/// Closed-form variances for one query point, output noise included.
fn overlay_variances(
    config: &ExperimentConfig,
    ctx: &QueryContext,
    p_idx: usize,
) -> Option<VariancePair> {
    let inp = ctx.theory_inputs(p_idx)?;
    let v = if config.lambda > 0.0 {
        theory::ridge_variances(&inp, config.lambda).ok()?
    } else {
        theory::minnorm_variances(&inp).ok()?
    };
    Some(VariancePair::new(
        v.sigma0_sq + config.noise_bar * config.noise_bar,
        v.sigma1_sq,
    ))
}

/// Runs `repeats × |grid| × 2 × trials_per_arm` trials on `workers` threads
/// (0 picks the rayon default).
pub fn run_curve(config: &ExperimentConfig, workers: usize) -> Result<CurveResult, RunError> {
    config.validate()?;
    check_trials(config);
    let started = Instant::now();
    let ps = config.params()?;
    let gaussian = config.model == ModelKind::GaussianLinear;

    let mut per_p: Vec<Vec<f64>> = vec![Vec::with_capacity(config.repeats); ps.len()];
    let mut theory_per_p: Vec<Vec<f64>> = vec![Vec::new(); ps.len()];
    pool(workers)?.install(|| -> Result<(), RunError> {
        for r in 0..config.repeats {
            let ctx = context(config, r)?;
            for p_idx in 0..ps.len() {
                let y0 = cell_outputs(config, &ctx, r, p_idx, 0)?;
                let y1 = cell_outputs(config, &ctx, r, p_idx, 1)?;
                let pair = build_histogram_pair(&y0, &y1, config.bins)?;
                per_p[p_idx].push(histogram_advantage(&pair));
                if let Some(v) = overlay_variances(config, &ctx, p_idx) {
                    if let Ok(a) = theory::advantage_point(v.sigma0_sq, v.sigma1_sq) {
                        theory_per_p[p_idx].push(a);
                    }
                }
            }
        }
        Ok(())
    })?;

    let theory_overlay = gaussian.then(|| {
        theory_per_p
            .iter()
            .map(|v| (v.len() == config.repeats).then(|| mean_and_stderr(v).0))
            .collect()
    });
    let noise_var = config.noise_bar * config.noise_bar;
    let gen_error = ps
        .iter()
        .map(|&p| {
            (gaussian && config.lambda == 0.0)
                .then(|| theory::generalization_error(config.n, p, config.dim, config.sigma).ok())
                .flatten()
                .map(|g| g + noise_var)
        })
        .collect();
    Ok(CurveResult {
        model: config.model,
        n: config.n,
        lambda: config.lambda,
        gammas: ps.iter().map(|&p| p as f64 / config.n as f64).collect(),
        ps,
        empirical: per_p
            .into_iter()
            .map(AdvantageEstimate::from_values)
            .collect(),
        theory_overlay,
        gen_error,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// One curve per `λ` in `lambda_grid` (all positive).
pub fn run_ridge_curve(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<CurveResult>, RunError> {
    if config.lambda_grid.is_empty() {
        return Err(RunError::Unsupported(
            "ridge sweep needs a nonempty lambda_grid",
        ));
    }
    if let Some(&l) = config.lambda_grid.iter().find(|&&l| !(l > 0.0)) {
        return Err(ConfigError::InvalidLambda(l).into());
    }
    config
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let cfg = ExperimentConfig {
                lambda,
                ..config.clone()
            };
            run_curve(&cfg, workers)
        })
        .collect()
}

/// Sample variance of `ŷ₀` per `(p, m)` for the first query point, next to
/// the closed-form variances (gaussian_linear only).
pub fn run_variance_check(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<VarianceRow>, RunError> {
    config.validate()?;
    if config.model != ModelKind::GaussianLinear {
        return Err(RunError::Unsupported(
            "variance check needs gaussian_linear",
        ));
    }
    if config.trials_per_arm < 2 {
        return Err(RunError::Unsupported(
            "variance check needs at least 2 trials per arm",
        ));
    }
    let ps = config.params()?;
    let mut rows = Vec::with_capacity(2 * ps.len());
    pool(workers)?.install(|| -> Result<(), RunError> {
        let ctx = context(config, 0)?;
        for (p_idx, &p) in ps.iter().enumerate() {
            let theory = overlay_variances(config, &ctx, p_idx);
            for m in 0..2u8 {
                let ys = cell_outputs(config, &ctx, 0, p_idx, m)?;
                let mean = ys.iter().sum::<f64>() / ys.len() as f64;
                let var =
                    ys.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ys.len() as f64 - 1.0);
                rows.push(VarianceRow {
                    gamma: p as f64 / config.n as f64,
                    p,
                    arm: m,
                    empirical_var: var,
                    theory_var: theory.map(|v| if m == 0 { v.sigma0_sq } else { v.sigma1_sq }),
                    n_samples: ys.len(),
                });
            }
        }
        Ok(())
    })?;
    Ok(rows)
}

/// Scale presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Minutes on a workstation.
    Desk,
    /// The sizes of the published experiments; hours.
    Paper,
}

/// The simulation experiments with presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Linear,
    Ridge,
    Latent,
    TimeSeries,
    Relu,
    VarianceCheck,
}

/// Preset config for an experiment at a given scale.
pub fn preset(profile: Profile, experiment: Experiment) -> ExperimentConfig {
    let desk = profile == Profile::Desk;
    let base = ExperimentConfig {
        model: ModelKind::GaussianLinear,
        n: if desk { 50 } else { 100 },
        p_grid: None,
        gamma_grid: None,
        dim: if desk { 1000 } else { 3000 },
        latent_dim: 0,
        sigma: 1.0,
        lambda: 0.0,
        lambda_grid: vec![],
        noise_bar: 0.0,
        trials_per_arm: if desk { 20_000 } else { 100_000 },
        bins: 150,
        repeats: if desk { 10 } else { 20 },
        seed: 0,
    };
    match experiment {
        Experiment::Linear => ExperimentConfig {
            gamma_grid: Some(if desk {
                vec![1.5, 2.0, 4.0, 8.0, 16.0]
            } else {
                vec![1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 30.0]
            }),
            ..base
        },
        Experiment::Ridge => ExperimentConfig {
            gamma_grid: Some(vec![2.0, 5.0, 10.0, 20.0]),
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0],
            trials_per_arm: if desk { 20_000 } else { 50_000 },
            ..base
        },
        Experiment::Latent => ExperimentConfig {
            model: ModelKind::LatentSpace,
            n: if desk { 50 } else { 200 },
            latent_dim: if desk { 10 } else { 20 },
            gamma_grid: Some(vec![1.2, 2.0, 4.0, 8.0, 16.0]),
            dim: if desk { 800 } else { 3200 },
            trials_per_arm: if desk { 10_000 } else { 100_000 },
            ..base
        },
        Experiment::TimeSeries => ExperimentConfig {
            model: ModelKind::TimeSeries,
            n: if desk { 64 } else { 128 },
            dim: if desk { 512 } else { 1024 },
            sigma: 0.0,
            gamma_grid: Some(vec![1.2, 2.0, 3.0, 4.0, 6.0, 8.0]),
            trials_per_arm: if desk { 10_000 } else { 100_000 },
            ..base
        },
        Experiment::Relu => ExperimentConfig {
            model: ModelKind::ReluFeatures,
            n: if desk { 50 } else { 100 },
            dim: if desk { 1000 } else { 5000 },
            gamma_grid: Some(vec![1.2, 2.0, 4.0, 6.0, 10.0]),
            trials_per_arm: if desk { 10_000 } else { 100_000 },
            ..base
        },
        Experiment::VarianceCheck => ExperimentConfig {
            n: if desk { 100 } else { 400 },
            dim: if desk { 5000 } else { 20_000 },
            gamma_grid: Some(vec![2.0, 10.0, 50.0]),
            trials_per_arm: 20_000,
            repeats: 1,
            ..base
        },
    }
}
