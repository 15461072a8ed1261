//! Command-line front end. Each command writes `<out_dir>/<command>.csv` and
//! an SVG rendered from that CSV.
//!
//! Settings resolve as preset (by `--profile`) < `--config` file < flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use thiserror::Error;

use crate::config::{ConfigError, ConfigPatch, ExperimentConfig, ModelKind};
use crate::plot::{curve_svg, variance_svg, PlotSpec, XAxis};
use crate::report::{
    curve_rows, read_curve_csv, read_variance_csv, tradeoff_rows, write_curve_csv,
    write_variance_csv, CurveRow, ReportError,
};
use crate::runner::{self, preset, Experiment, Profile, RunError};
use crate::theory::{self, QueryAveraging, TheoryError};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "OVERPARAM_MI_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "overparam-mi",
    version,
    about = "Membership-inference advantage of overparameterized linear regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Closed-form min-norm advantage vs. gamma.
    TheoryAdvantage(Opts),
    /// Closed-form ridge advantage vs. gamma, one curve per lambda.
    TheoryRidge(Opts),
    /// Feature reduction vs. output noise at matched generalization error.
    TheoryTradeoff(Opts),
    /// Simulated min-norm (or ridge, with --lambda) advantage, Gaussian data.
    SimLinear(Opts),
    /// Simulated ridge advantage, one curve per lambda.
    SimRidge(Opts),
    /// Simulated advantage, latent space model.
    SimLatent(Opts),
    /// Simulated advantage, noise-free cosine time series.
    SimTimeseries(Opts),
    /// Simulated advantage, random ReLU features.
    SimRelu(Opts),
    /// Output variances per arm next to their closed forms.
    VarianceCheck(Opts),
    /// Every command above, into one directory.
    Figures(Opts),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// TOML config file; keys as in `ExperimentConfig`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
    pub profile: ProfileArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub n: Option<usize>,
    /// Data dimension D.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Latent dimension d.
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    /// Ridge coefficient λ as it appears in the closed forms; the solver adds
    /// nλ to the Gram diagonal. Plot axes show λ, not nλ.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Comma-separated λ values for ridge sweeps.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Comma-separated ratios p/n.
    #[arg(long, alias = "gamma", value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Comma-separated parameter counts.
    #[arg(long, value_delimiter = ',')]
    pub ps: Option<Vec<usize>>,
    /// Trials per arm.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Independent query points.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Std dev of noise added to non-member outputs.
    #[arg(long, allow_hyphen_values = true)]
    pub noise_bar: Option<f64>,
    /// Query points sampled for closed-form averages.
    #[arg(long, default_value_t = 100)]
    pub num_x0: usize,
    /// Closed forms at ‖x₀,p‖² = p, ‖x₀‖² = D instead of sampled query points.
    #[arg(long)]
    pub concentration: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    BadConfig(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::BadConfig(_) => 2,
            CliError::Run(RunError::Config(_)) => 2,
            _ => 1,
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TheoryAdvantage(_) => "theory-advantage",
            Command::TheoryRidge(_) => "theory-ridge",
            Command::TheoryTradeoff(_) => "theory-tradeoff",
            Command::SimLinear(_) => "sim-linear",
            Command::SimRidge(_) => "sim-ridge",
            Command::SimLatent(_) => "sim-latent",
            Command::SimTimeseries(_) => "sim-timeseries",
            Command::SimRelu(_) => "sim-relu",
            Command::VarianceCheck(_) => "variance-check",
            Command::Figures(_) => "figures",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::TheoryAdvantage(o)
            | Command::TheoryRidge(o)
            | Command::TheoryTradeoff(o)
            | Command::SimLinear(o)
            | Command::SimRidge(o)
            | Command::SimLatent(o)
            | Command::SimTimeseries(o)
            | Command::SimRelu(o)
            | Command::VarianceCheck(o)
            | Command::Figures(o) => o,
        }
    }

    fn with_opts(&self, o: Opts) -> Command {
        match self {
            Command::TheoryAdvantage(_) => Command::TheoryAdvantage(o),
            Command::TheoryRidge(_) => Command::TheoryRidge(o),
            Command::TheoryTradeoff(_) => Command::TheoryTradeoff(o),
            Command::SimLinear(_) => Command::SimLinear(o),
            Command::SimRidge(_) => Command::SimRidge(o),
            Command::SimLatent(_) => Command::SimLatent(o),
            Command::SimTimeseries(_) => Command::SimTimeseries(o),
            Command::SimRelu(_) => Command::SimRelu(o),
            Command::VarianceCheck(_) => Command::VarianceCheck(o),
            Command::Figures(_) => Command::Figures(o),
        }
    }
}

const ADVANTAGE_GAMMAS: [f64; 20] = [
    1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0,
    1000.0, 2000.0, 5000.0, 10000.0,
];
const RIDGE_GAMMAS: [f64; 16] = [
    0.25, 0.5, 0.75, 0.9, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 500.0, 1000.0,
];
const LAMBDAS: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

/// Twenty parameter counts, geometric from `1.5 n` to `D`.
pub fn tradeoff_grid(n: usize, dim: usize) -> Vec<usize> {
    let lo = (1.5 * n as f64).max(n as f64 + 2.0);
    let hi = dim as f64;
    let mut ps: Vec<usize> = (0..20)
        .map(|i| (lo * (hi / lo).powf(i as f64 / 19.0)).round() as usize)
        .collect();
    ps.dedup();
    ps
}

fn theory_base(cmd: &Command) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        model: ModelKind::GaussianLinear,
        n: 1000,
        p_grid: None,
        gamma_grid: Some(ADVANTAGE_GAMMAS.to_vec()),
        dim: 10_000_000,
        latent_dim: 0,
        sigma: 1.0,
        lambda: 0.0,
        lambda_grid: vec![],
        noise_bar: 0.0,
        trials_per_arm: 1,
        bins: 150,
        repeats: 1,
        seed: 0,
    };
    match cmd {
        Command::TheoryRidge(_) => {
            cfg.gamma_grid = Some(RIDGE_GAMMAS.to_vec());
            cfg.lambda_grid = LAMBDAS.to_vec();
        }
        Command::TheoryTradeoff(_) => {
            cfg.n = 100;
            cfg.dim = 3000;
            cfg.gamma_grid = None;
            cfg.p_grid = Some(tradeoff_grid(100, 3000));
        }
        _ => {}
    }
    cfg
}

fn base_config(cmd: &Command) -> ExperimentConfig {
    let profile = match cmd.opts().profile {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Paper => Profile::Paper,
    };
    match cmd {
        Command::SimLinear(_) => preset(profile, Experiment::Linear),
        Command::SimRidge(_) => preset(profile, Experiment::Ridge),
        Command::SimLatent(_) => preset(profile, Experiment::Latent),
        Command::SimTimeseries(_) => preset(profile, Experiment::TimeSeries),
        Command::SimRelu(_) => preset(profile, Experiment::Relu),
        Command::VarianceCheck(_) => preset(profile, Experiment::VarianceCheck),
        _ => theory_base(cmd),
    }
}

fn flag_patch(o: &Opts) -> ConfigPatch {
    ConfigPatch {
        model: None,
        n: o.n,
        p_grid: o.ps.clone(),
        gamma_grid: o.gammas.clone(),
        dim: o.dim,
        latent_dim: o.latent_dim,
        sigma: o.sigma,
        lambda: o.lambda,
        lambda_grid: o.lambdas.clone(),
        noise_bar: o.noise_bar,
        trials_per_arm: o.trials,
        bins: o.bins,
        repeats: o.repeats,
        seed: o.seed,
    }
}

/// Effective config for a single (non-`figures`) command.
pub fn resolve_config(cmd: &Command) -> Result<ExperimentConfig, CliError> {
    let o = cmd.opts();
    let base = base_config(cmd);
    let expected = base.model;
    let mut cfg = match &o.config {
        Some(path) => ConfigPatch::from_file(path)?.apply_to(base),
        None => base,
    };
    cfg = flag_patch(o).apply_to(cfg);
    if cfg.model != expected {
        return Err(CliError::BadConfig(format!(
            "{} runs model {}, config asks for {}",
            cmd.name(),
            expected.name(),
            cfg.model.name()
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn averaging(o: &Opts, seed: u64) -> Result<QueryAveraging, CliError> {
    if o.concentration {
        return Ok(QueryAveraging::Concentration);
    }
    if o.num_x0 == 0 {
        return Err(CliError::BadConfig("--num-x0 must be at least 1".into()));
    }
    Ok(QueryAveraging::Sampled {
        draws: o.num_x0,
        seed,
    })
}

fn lambda_label(lambda: f64) -> String {
    format!("lambda={lambda}")
}

/// Splits the grid into points where the min-norm closed form exists.
fn interpolating(cfg: &ExperimentConfig) -> Result<Vec<usize>, CliError> {
    let ps = cfg.params()?;
    let (ok, skipped): (Vec<usize>, Vec<usize>) = ps.into_iter().partition(|&p| p > cfg.n + 1);
    if !skipped.is_empty() {
        warn!("skipping p = {skipped:?}: the closed form needs p > n + 1");
    }
    Ok(ok)
}

pub fn theory_advantage_rows(
    cfg: &ExperimentConfig,
    avg: QueryAveraging,
) -> Result<Vec<CurveRow>, CliError> {
    let ps = interpolating(cfg)?;
    let adv = theory::minnorm_advantage_curve(cfg.n, cfg.dim, cfg.sigma, &ps, avg)?;
    ps.iter()
        .zip(adv)
        .map(|(&p, a)| {
            Ok(CurveRow {
                series: "min_norm".into(),
                grid: p as f64,
                gamma: Some(p as f64 / cfg.n as f64),
                mean_adv: None,
                stderr_adv: Some(a.stderr),
                theory_adv: Some(a.mean),
                gen_error: Some(theory::generalization_error(cfg.n, p, cfg.dim, cfg.sigma)?),
            })
        })
        .collect()
}

pub fn theory_ridge_rows(
    cfg: &ExperimentConfig,
    avg: QueryAveraging,
) -> Result<Vec<CurveRow>, CliError> {
    let ps = cfg.params()?;
    let mut rows = Vec::new();
    for &lambda in &cfg.lambda_grid {
        if !(lambda > 0.0) {
            return Err(ConfigError::InvalidLambda(lambda).into());
        }
        let adv = theory::ridge_advantage_curve(cfg.n, cfg.dim, cfg.sigma, lambda, &ps, avg)?;
        rows.extend(ps.iter().zip(adv).map(|(&p, a)| CurveRow {
            series: lambda_label(lambda),
            grid: p as f64,
            gamma: Some(p as f64 / cfg.n as f64),
            mean_adv: None,
            stderr_adv: Some(a.stderr),
            theory_adv: Some(a.mean),
            gen_error: None,
        }));
    }
    let mut min_norm = theory_advantage_rows(cfg, avg)?;
    for r in &mut min_norm {
        r.series = lambda_label(0.0);
        r.gen_error = None;
    }
    rows.extend(min_norm);
    Ok(rows)
}

pub fn theory_tradeoff_rows(
    cfg: &ExperimentConfig,
    avg: QueryAveraging,
) -> Result<Vec<CurveRow>, CliError> {
    let ps = interpolating(cfg)?;
    let feature = theory::feature_reduction_curve(cfg.n, cfg.dim, cfg.sigma, &ps, avg)?;
    let noise_vars = theory::matched_noise_variances(cfg.n, cfg.dim, cfg.sigma, &ps)?;
    let noise = theory::noise_addition_curve(cfg.n, cfg.dim, cfg.sigma, &noise_vars, avg)?;
    let mut rows = tradeoff_rows("feature_reduction", &feature, Some(cfg.n));
    rows.extend(tradeoff_rows("noise_addition", &noise, None));
    Ok(rows)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_curves(
    out_dir: &Path,
    name: &str,
    rows: &[CurveRow],
    spec: &PlotSpec,
) -> Result<(), CliError> {
    let csv_path = out_dir.join(format!("{name}.csv"));
    let text = write_curve_csv(rows);
    write_file(&csv_path, &text)?;
    let parsed = read_curve_csv(&text)?;
    write_file(
        &out_dir.join(format!("{name}.svg")),
        &curve_svg(&parsed, spec),
    )?;
    println!("wrote {} ({} rows)", csv_path.display(), rows.len());
    Ok(())
}

fn gamma_spec(title: &str) -> PlotSpec {
    PlotSpec {
        title: title.to_string(),
        x: XAxis::Gamma,
        x_label: "gamma = p / n".into(),
        y_label: "membership advantage".into(),
        log_x: true,
    }
}

/// Runs one command; `figures` runs all others in sequence.
pub fn run(cmd: &Command) -> Result<(), CliError> {
    if let Command::Figures(o) = cmd {
        let all = [
            Command::TheoryAdvantage(o.clone()),
            Command::TheoryRidge(o.clone()),
            Command::TheoryTradeoff(o.clone()),
            Command::VarianceCheck(o.clone()),
            Command::SimLinear(o.clone()),
            Command::SimRidge(o.clone()),
            Command::SimLatent(o.clone()),
            Command::SimTimeseries(o.clone()),
            Command::SimRelu(o.clone()),
        ];
        for c in &all {
            run(&c.with_opts(o.clone()))?;
        }
        return Ok(());
    }

    let cfg = resolve_config(cmd)?;
    let o = cmd.opts();
    fs::create_dir_all(&o.out_dir).map_err(|source| CliError::Io {
        path: o.out_dir.clone(),
        source,
    })?;
    let name = cmd.name();
    let workers = o.workers;
    match cmd {
        Command::TheoryAdvantage(_) => {
            let rows = theory_advantage_rows(&cfg, averaging(o, cfg.seed)?)?;
            emit_curves(
                &o.out_dir,
                name,
                &rows,
                &gamma_spec("Closed-form advantage, min-norm"),
            )
        }
        Command::TheoryRidge(_) => {
            let rows = theory_ridge_rows(&cfg, averaging(o, cfg.seed)?)?;
            emit_curves(
                &o.out_dir,
                name,
                &rows,
                &gamma_spec("Closed-form advantage, ridge"),
            )
        }
        Command::TheoryTradeoff(_) => {
            let rows = theory_tradeoff_rows(&cfg, averaging(o, cfg.seed)?)?;
            let spec = PlotSpec {
                title: "Advantage vs. generalization error".into(),
                x: XAxis::GenError,
                x_label: "expected squared error".into(),
                y_label: "membership advantage".into(),
                log_x: false,
            };
            emit_curves(&o.out_dir, name, &rows, &spec)
        }
        Command::SimLinear(_) => {
            let res = runner::run_curve(&cfg, workers)?;
            let series = if cfg.lambda > 0.0 {
                lambda_label(cfg.lambda)
            } else {
                "min_norm".into()
            };
            emit_curves(
                &o.out_dir,
                name,
                &curve_rows(&series, &res),
                &gamma_spec("Simulated advantage, Gaussian data"),
            )
        }
        Command::SimRidge(_) => {
            let rows: Vec<CurveRow> = runner::run_ridge_curve(&cfg, workers)?
                .iter()
                .flat_map(|r| curve_rows(&lambda_label(r.lambda), r))
                .collect();
            emit_curves(
                &o.out_dir,
                name,
                &rows,
                &gamma_spec("Simulated advantage, ridge"),
            )
        }
        Command::SimLatent(_) | Command::SimTimeseries(_) | Command::SimRelu(_) => {
            let res = runner::run_curve(&cfg, workers)?;
            let title = format!("Simulated advantage, {}", cfg.model.name());
            emit_curves(
                &o.out_dir,
                name,
                &curve_rows(cfg.model.name(), &res),
                &gamma_spec(&title),
            )
        }
        Command::VarianceCheck(_) => {
            let rows = runner::run_variance_check(&cfg, workers)?;
            let text = write_variance_csv(&rows);
            let csv_path = o.out_dir.join(format!("{name}.csv"));
            write_file(&csv_path, &text)?;
            let spec = PlotSpec {
                title: "Output variance per arm".into(),
                x: XAxis::Gamma,
                x_label: "gamma = p / n".into(),
                y_label: "variance of y_hat".into(),
                log_x: true,
            };
            let parsed = read_variance_csv(&text)?;
            write_file(
                &o.out_dir.join(format!("{name}.svg")),
                &variance_svg(&parsed, &spec),
            )?;
            println!("wrote {} ({} rows)", csv_path.display(), rows.len());
            Ok(())
        }
        Command::Figures(_) => unreachable!("handled above"),
    }
}
