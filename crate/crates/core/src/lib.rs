//! Membership-inference advantage for overparameterized linear regression:
//! closed-form theory, Monte Carlo simulators for several data models, and
//! the CSV/SVG reporting behind the command-line tool.

pub mod cli;
pub mod config;
pub mod datamodels;
pub mod estimator;
pub mod numerics;
pub mod plot;
pub mod report;
pub mod rng;
pub mod runner;
pub mod theory;
pub mod types;

pub use config::{ConfigError, ExperimentConfig, ModelKind};
pub use types::{AdvantageEstimate, TradeoffPoint, VariancePair};
