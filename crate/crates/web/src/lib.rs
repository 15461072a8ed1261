//! wasm-bindgen wrappers over the closed forms, for `www/index.html`.
//!
//! `draws = 0` evaluates at the concentrated query norms; otherwise the
//! value is averaged over `draws` sampled query points (seed 0). Points
//! where a closed form is undefined come back as `NaN`.

use overparam_mi::theory::{self, QueryAveraging};
use wasm_bindgen::prelude::*;

fn averaging(draws: u32) -> QueryAveraging {
    if draws == 0 {
        QueryAveraging::Concentration
    } else {
        QueryAveraging::Sampled {
            draws: draws as usize,
            seed: 0,
        }
    }
}

fn param(n: u32, gamma: f64, dim: f64) -> Option<usize> {
    let p = (gamma * n as f64).round();
    (p >= 1.0 && p <= dim).then_some(p as usize)
}

/// Min-norm advantage at each `γ = p/n`.
#[wasm_bindgen]
pub fn minnorm_advantage(n: u32, dim: f64, sigma: f64, gammas: &[f64], draws: u32) -> Vec<f64> {
    gammas
        .iter()
        .map(|&g| {
            param(n, g, dim)
                .and_then(|p| {
                    theory::minnorm_advantage(n as usize, p, dim as usize, sigma, averaging(draws))
                        .ok()
                })
                .map_or(f64::NAN, |a| a.mean)
        })
        .collect()
}

/// Ridge advantage at each `γ` for coefficient `lambda`.
#[wasm_bindgen]
pub fn ridge_advantage(
    n: u32,
    dim: f64,
    sigma: f64,
    lambda: f64,
    gammas: &[f64],
    draws: u32,
) -> Vec<f64> {
    gammas
        .iter()
        .map(|&g| {
            param(n, g, dim)
                .and_then(|p| {
                    theory::ridge_advantage_curve(
                        n as usize,
                        dim as usize,
                        sigma,
                        lambda,
                        &[p],
                        averaging(draws),
                    )
                    .ok()
                })
                .map_or(f64::NAN, |a| a[0].mean)
        })
        .collect()
}

/// Feature reduction against matched output noise. Returns
/// `[err, adv_features, adv_noise]` triples, flattened, one per `γ`.
#[wasm_bindgen]
pub fn tradeoff(n: u32, dim: f64, sigma: f64, gammas: &[f64], draws: u32) -> Vec<f64> {
    let (n, d) = (n as usize, dim as usize);
    let ps: Vec<usize> = gammas
        .iter()
        .filter_map(|&g| param(n as u32, g, dim))
        .filter(|&p| p > n + 1)
        .collect();
    let run = || -> Result<Vec<f64>, theory::TheoryError> {
        let feature = theory::feature_reduction_curve(n, d, sigma, &ps, averaging(draws))?;
        let noise_vars = theory::matched_noise_variances(n, d, sigma, &ps)?;
        let noise = theory::noise_addition_curve(n, d, sigma, &noise_vars, averaging(draws))?;
        Ok(feature
            .iter()
            .zip(&noise)
            .flat_map(|(f, z)| [f.gen_error, f.advantage, z.advantage])
            .collect())
    };
    run().unwrap_or_default()
}
