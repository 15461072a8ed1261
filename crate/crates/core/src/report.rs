//! CSV artifacts and their reader.
//!
//! Curve files (`theory-*`, `sim-*`):
//!
//! ```text
//! series,grid,gamma,mean_adv,stderr_adv,theory_adv,gen_error
//! ```
//!
//! * `series`: curve label, e.g. `min_norm`, `lambda=0.1`, `feature_reduction`.
//! * `grid`: the swept value (`p`, or `σ̄²` for `noise_addition`).
//! * `gamma`: `p / n` when the grid is a parameter count.
//! * `mean_adv`, `stderr_adv`: empirical histogram advantage, mean over
//!   repeats and its standard error (1·SE). For closed-form commands
//!   `mean_adv` is empty and `stderr_adv` is the standard error over the
//!   sampled query points.
//! * `theory_adv`: closed-form advantage averaged over the same query points.
//! * `gen_error`: expected squared error on a fresh point.
//!
//! Empty fields mean "not applicable". Variance-check files:
//!
//! ```text
//! gamma,p,arm,empirical_var,theory_var,n_samples
//! ```

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::runner::{CurveResult, VarianceRow};
use crate::types::TradeoffPoint;

pub const CURVE_HEADER: &str = "series,grid,gamma,mean_adv,stderr_adv,theory_adv,gen_error";
pub const VARIANCE_HEADER: &str = "gamma,p,arm,empirical_var,theory_var,n_samples";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}, wanted {expected:?}")]
    Header {
        expected: &'static str,
        found: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub series: String,
    pub grid: f64,
    pub gamma: Option<f64>,
    pub mean_adv: Option<f64>,
    pub stderr_adv: Option<f64>,
    pub theory_adv: Option<f64>,
    pub gen_error: Option<f64>,
}

/// Rows for an empirical curve.
pub fn curve_rows(series: &str, result: &CurveResult) -> Vec<CurveRow> {
    result
        .ps
        .iter()
        .enumerate()
        .map(|(i, &p)| CurveRow {
            series: series.to_string(),
            grid: p as f64,
            gamma: Some(result.gammas[i]),
            mean_adv: Some(result.empirical[i].mean),
            stderr_adv: Some(result.empirical[i].stderr),
            theory_adv: result.theory_overlay.as_ref().and_then(|t| t[i]),
            gen_error: result.gen_error[i],
        })
        .collect()
}

/// Rows for a trade-off curve; `n` is set when the knob is a parameter count.
pub fn tradeoff_rows(series: &str, points: &[TradeoffPoint], n: Option<usize>) -> Vec<CurveRow> {
    points
        .iter()
        .map(|pt| CurveRow {
            series: series.to_string(),
            grid: pt.knob,
            gamma: n.map(|n| pt.knob / n as f64),
            mean_adv: None,
            stderr_adv: None,
            theory_adv: Some(pt.advantage),
            gen_error: Some(pt.gen_error),
        })
        .collect()
}

fn write_rows<T: Serialize>(rows: &[T], header: &str) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory CSV flush"))
        .expect("CSV output is UTF-8");
    format!("{header}\n{body}")
}

fn read_rows<T: DeserializeOwned>(text: &str, header: &'static str) -> Result<Vec<T>, ReportError> {
    let first = text.lines().next().unwrap_or("");
    if first.trim_end() != header {
        return Err(ReportError::Header {
            expected: header,
            found: first.to_string(),
        });
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

pub fn write_curve_csv(rows: &[CurveRow]) -> String {
    write_rows(rows, CURVE_HEADER)
}

pub fn read_curve_csv(text: &str) -> Result<Vec<CurveRow>, ReportError> {
    read_rows(text, CURVE_HEADER)
}

pub fn write_variance_csv(rows: &[VarianceRow]) -> String {
    write_rows(rows, VARIANCE_HEADER)
}

pub fn read_variance_csv(text: &str) -> Result<Vec<VarianceRow>, ReportError> {
    read_rows(text, VARIANCE_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_round_trip() {
        let rows = vec![
            CurveRow {
                series: "min_norm".into(),
                grid: 75.0,
                gamma: Some(1.5),
                mean_adv: Some(0.123_456_789_012_345_67),
                stderr_adv: Some(1e-17),
                theory_adv: None,
                gen_error: Some(2.5),
            },
            CurveRow {
                series: "lambda=0.1".into(),
                grid: 0.0,
                gamma: None,
                mean_adv: None,
                stderr_adv: None,
                theory_adv: Some(1.0 / 3.0),
                gen_error: None,
            },
        ];
        let text = write_curve_csv(&rows);
        assert!(text.starts_with(CURVE_HEADER));
        assert!(text.contains("lambda=0.1,0.0,,,,"));
        assert_eq!(read_curve_csv(&text).unwrap(), rows);
    }

    #[test]
    fn variance_round_trip() {
        let rows = vec![VarianceRow {
            gamma: 2.0,
            p: 200,
            arm: 1,
            empirical_var: 1.95,
            theory_var: None,
            n_samples: 20_000,
        }];
        assert_eq!(read_variance_csv(&write_variance_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn header_is_checked() {
        assert!(matches!(
            read_curve_csv("a,b\n1,2\n"),
            Err(ReportError::Header { .. })
        ));
    }
}
