//! Histogram posteriors, empirical advantage, and the two explicit adversaries.

use thiserror::Error;

use crate::theory::{self, TheoryError};

/// Below this many samples per arm the histogram estimate is noticeably
/// biased toward zero; runs still proceed but log a warning.
pub const MIN_TRIALS_PER_ARM: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("sample set is empty")]
    EmptySamples,
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Probability mass function over equal-width bins on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorHistogram {
    pub lo: f64,
    pub hi: f64,
    pub pmf: Vec<f64>,
}

impl PosteriorHistogram {
    pub fn bins(&self) -> usize {
        self.pmf.len()
    }

    /// Bin holding `v`. Bins are half-open except the last, which also takes
    /// `hi`. Values outside the range clamp to the end bins.
    pub fn bin_of(&self, v: f64) -> usize {
        bin_index(v, self.lo, self.hi, self.pmf.len())
    }
}

fn bin_index(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let pos = (v - lo) / (hi - lo) * bins as f64;
    if pos <= 0.0 || pos.is_nan() {
        0
    } else {
        (pos as usize).min(bins - 1)
    }
}

/// Two histograms sharing range and bin grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramPair {
    pub h0: PosteriorHistogram,
    pub h1: PosteriorHistogram,
}

fn finite_range(samples: &[f64]) -> Result<(f64, f64), EstimatorError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in samples {
        if !v.is_finite() {
            return Err(EstimatorError::NonFinite);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

fn pmf(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0u64; bins];
    for &v in samples {
        counts[bin_index(v, lo, hi, bins)] += 1;
    }
    let total = samples.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// Histograms of both arms on the range spanned by their union.
pub fn build_histogram_pair(
    samples0: &[f64],
    samples1: &[f64],
    bins: usize,
) -> Result<HistogramPair, EstimatorError> {
    if samples0.is_empty() || samples1.is_empty() {
        return Err(EstimatorError::EmptySamples);
    }
    if bins < 2 {
        return Err(EstimatorError::TooFewBins(bins));
    }
    let (lo0, hi0) = finite_range(samples0)?;
    let (lo1, hi1) = finite_range(samples1)?;
    let (mut lo, mut hi) = (lo0.min(lo1), hi0.max(hi1));
    if lo == hi {
        let eps = (1e-9 * lo.abs()).max(1e-12);
        lo -= eps;
        hi += eps;
    }
    Ok(HistogramPair {
        h0: PosteriorHistogram {
            lo,
            hi,
            pmf: pmf(samples0, lo, hi, bins),
        },
        h1: PosteriorHistogram {
            lo,
            hi,
            pmf: pmf(samples1, lo, hi, bins),
        },
    })
}

/// `Σ max(0, h1 − h0)`: the total-variation distance of the two PMFs, which
/// is also the TPR − FPR of [`histogram_adversary`].
pub fn histogram_advantage(pair: &HistogramPair) -> f64 {
    let adv: f64 = pair
        .h0
        .pmf
        .iter()
        .zip(&pair.h1.pmf)
        .map(|(a, b)| (b - a).max(0.0))
        .sum();
    adv.clamp(0.0, 1.0)
}

/// Guesses `1` when the output's bin is more likely under the member arm.
pub fn histogram_adversary(pair: &HistogramPair, y_hat: f64) -> u8 {
    let k = pair.h0.bin_of(y_hat);
    u8::from(pair.h1.pmf[k] > pair.h0.pmf[k])
}

/// Likelihood-ratio test between `N(0, σ₀²)` and `N(0, σ₁²)`: flags large
/// `|ŷ₀|` when members have the wider distribution, small `|ŷ₀|` otherwise.
pub fn threshold_adversary(sigma0_sq: f64, sigma1_sq: f64, y_hat: f64) -> Result<u8, TheoryError> {
    let alpha = theory::lrt_threshold(sigma0_sq, sigma1_sq)?;
    let outside = y_hat * y_hat > alpha * alpha;
    Ok(u8::from(if sigma1_sq > sigma0_sq {
        outside
    } else {
        y_hat * y_hat < alpha * alpha
    }))
}

/// Closed-form advantage of [`threshold_adversary`].
pub fn advantage_from_threshold(sigma0_sq: f64, sigma1_sq: f64) -> Result<f64, TheoryError> {
    theory::advantage_point(sigma0_sq, sigma1_sq)
}

/// TPR − FPR of an arbitrary decision rule on labelled samples.
pub fn empirical_advantage(
    samples0: &[f64],
    samples1: &[f64],
    mut rule: impl FnMut(f64) -> u8,
) -> f64 {
    let rate = |s: &[f64], rule: &mut dyn FnMut(f64) -> u8| {
        s.iter().filter(|&&v| rule(v) == 1).count() as f64 / s.len() as f64
    };
    rate(samples1, &mut rule) - rate(samples0, &mut rule)
}
