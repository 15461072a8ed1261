//! Experiment configuration and its TOML file format.
//!
//! A config file is a flat TOML table; every key is optional and overrides
//! the selected profile preset, and command-line flags override the file.
//!
//! ```toml
//! model = "gaussian_linear"   # latent_space | time_series | relu_features
//! n = 50
//! dim = 1000                  # D
//! latent_dim = 10             # d, latent_space only
//! gamma_grid = [1.5, 2.0, 4.0]  # or p_grid = [75, 100, 200]
//! sigma = 1.0
//! lambda = 0.0
//! lambda_grid = [0.01, 0.1, 1.0]
//! noise_bar = 0.0
//! trials_per_arm = 20000
//! bins = 150
//! repeats = 10
//! seed = 7
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianLinear,
    LatentSpace,
    TimeSeries,
    ReluFeatures,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GaussianLinear => "gaussian_linear",
            ModelKind::LatentSpace => "latent_space",
            ModelKind::TimeSeries => "time_series",
            ModelKind::ReluFeatures => "relu_features",
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("n must be at least 1")]
    ZeroTrainingSize,
    #[error("dim (D) must be at least 1")]
    ZeroDimension,
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("give either p_grid or gamma_grid, not both")]
    GridConflict,
    #[error("gamma {0} is not a positive finite ratio")]
    InvalidRatio(f64),
    #[error("p = {p} outside 1..={dim}")]
    ParamOutOfRange { p: usize, dim: usize },
    #[error("sigma must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("lambda must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error("noise_bar must be finite and >= 0, got {0}")]
    InvalidNoise(f64),
    #[error("bins must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("trials_per_arm must be at least 1")]
    ZeroTrials,
    #[error("repeats must be at least 1")]
    ZeroRepeats,
    #[error("latent_space needs latent_dim >= 1")]
    ZeroLatentDim,
    #[error("latent_space needs latent_dim {latent_dim} <= p for every grid point, got p = {p}")]
    LatentDimTooLarge { latent_dim: usize, p: usize },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
}

/// Full description of one membership-inference experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub n: usize,
    /// Parameter counts. Mutually exclusive with `gamma_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<usize>>,
    /// Ratios `p / n`, rounded to the nearest integer `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    /// Data dimension `D`.
    pub dim: usize,
    /// Latent dimension `d` (latent_space only).
    #[serde(default)]
    pub latent_dim: usize,
    pub sigma: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Regularization values for ridge sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_grid: Vec<f64>,
    /// Std dev of output noise added to non-member outputs.
    #[serde(default)]
    pub noise_bar: f64,
    pub trials_per_arm: usize,
    pub bins: usize,
    pub repeats: usize,
    pub seed: u64,
}

/// Partial config, as read from a file or assembled from flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub model: Option<ModelKind>,
    pub n: Option<usize>,
    pub p_grid: Option<Vec<usize>>,
    pub gamma_grid: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub latent_dim: Option<usize>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub noise_bar: Option<f64>,
    pub trials_per_arm: Option<usize>,
    pub bins: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigPatch {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Overlays every field that is set. Setting either grid replaces both.
    pub fn apply_to(&self, mut base: ExperimentConfig) -> ExperimentConfig {
        if let Some(v) = self.model {
            base.model = v;
        }
        if let Some(v) = self.n {
            base.n = v;
        }
        match (&self.p_grid, &self.gamma_grid) {
            (None, None) => {}
            (p, g) => {
                base.p_grid = p.clone();
                base.gamma_grid = g.clone();
            }
        }
        if let Some(v) = self.dim {
            base.dim = v;
        }
        if let Some(v) = self.latent_dim {
            base.latent_dim = v;
        }
        if let Some(v) = self.sigma {
            base.sigma = v;
        }
        if let Some(v) = self.lambda {
            base.lambda = v;
        }
        if let Some(v) = &self.lambda_grid {
            base.lambda_grid = v.clone();
        }
        if let Some(v) = self.noise_bar {
            base.noise_bar = v;
        }
        if let Some(v) = self.trials_per_arm {
            base.trials_per_arm = v;
        }
        if let Some(v) = self.bins {
            base.bins = v;
        }
        if let Some(v) = self.repeats {
            base.repeats = v;
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
        base
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Resolved parameter counts, in grid order.
    pub fn params(&self) -> Result<Vec<usize>, ConfigError> {
        match (&self.p_grid, &self.gamma_grid) {
            (Some(_), Some(_)) => Err(ConfigError::GridConflict),
            (None, None) => Err(ConfigError::EmptyGrid),
            (Some(ps), None) => {
                if ps.is_empty() {
                    return Err(ConfigError::EmptyGrid);
                }
                Ok(ps.clone())
            }
            (None, Some(gs)) => {
                if gs.is_empty() {
                    return Err(ConfigError::EmptyGrid);
                }
                gs.iter()
                    .map(|&g| {
                        if !(g.is_finite() && g > 0.0) {
                            return Err(ConfigError::InvalidRatio(g));
                        }
                        Ok((g * self.n as f64).round() as usize)
                    })
                    .collect()
            }
        }
    }

    pub fn p_max(&self) -> Result<usize, ConfigError> {
        Ok(self.params()?.into_iter().max().unwrap_or(0))
    }

    /// Checks every invariant; the first violation is reported.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::ZeroTrainingSize);
        }
        if self.dim == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        let ps = self.params()?;
        for &p in &ps {
            if p == 0 || p > self.dim {
                return Err(ConfigError::ParamOutOfRange { p, dim: self.dim });
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(ConfigError::InvalidSigma(self.sigma));
        }
        for &l in std::iter::once(&self.lambda).chain(&self.lambda_grid) {
            if !(l.is_finite() && l >= 0.0) {
                return Err(ConfigError::InvalidLambda(l));
            }
        }
        if !(self.noise_bar.is_finite() && self.noise_bar >= 0.0) {
            return Err(ConfigError::InvalidNoise(self.noise_bar));
        }
        if self.bins < 2 {
            return Err(ConfigError::TooFewBins(self.bins));
        }
        if self.trials_per_arm == 0 {
            return Err(ConfigError::ZeroTrials);
        }
        if self.repeats == 0 {
            return Err(ConfigError::ZeroRepeats);
        }
        if self.model == ModelKind::LatentSpace {
            if self.latent_dim == 0 {
                return Err(ConfigError::ZeroLatentDim);
            }
            if let Some(&p) = ps.iter().find(|&&p| p < self.latent_dim) {
                return Err(ConfigError::LatentDimTooLarge {
                    latent_dim: self.latent_dim,
                    p,
                });
            }
        }
        Ok(())
    }
}
