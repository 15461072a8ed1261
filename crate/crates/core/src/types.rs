//! Result records shared across modules.

use serde::{Deserialize, Serialize};

/// Conditional output variances of `ŷ₀` for one query point: `m = 0`
/// (non-member) and `m = 1` (member).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariancePair {
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
}

impl VariancePair {
    pub fn new(sigma0_sq: f64, sigma1_sq: f64) -> Self {
        debug_assert!(sigma0_sq >= 0.0 && sigma0_sq.is_finite());
        debug_assert!(sigma1_sq >= 0.0 && sigma1_sq.is_finite());
        Self {
            sigma0_sq,
            sigma1_sq,
        }
    }
}

/// Advantage values over independent query draws, with mean and standard
/// error of the mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub per_x0: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

impl AdvantageEstimate {
    /// Aggregates per-query values. The standard error is the sample
    /// standard deviation over `sqrt(len)`; a single value has stderr 0.
    pub fn from_values(per_x0: Vec<f64>) -> Self {
        let (mean, stderr) = mean_and_stderr(&per_x0);
        Self {
            per_x0,
            mean,
            stderr,
        }
    }
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let count = values.len();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let sd = (ss / (count as f64 - 1.0)).sqrt();
    (mean, sd / (count as f64).sqrt())
}

/// One point on a privacy/utility curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Expected squared prediction error on a fresh point.
    pub gen_error: f64,
    pub advantage: f64,
    /// The varied quantity: `p` for feature reduction, `σ̄²` for noise addition.
    pub knob: f64,
}
