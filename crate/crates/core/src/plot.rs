//! Static SVG 1.1 plots drawn from parsed CSV rows only.

use std::fmt::Write;

use crate::report::CurveRow;
use crate::runner::VarianceRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XAxis {
    Gamma,
    Grid,
    GenError,
}

#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub title: String,
    pub x: XAxis,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

/// A polyline or scatter in data coordinates.
struct Trace {
    label: String,
    color: &'static str,
    dashed: bool,
    markers: bool,
    points: Vec<(f64, f64)>,
    errors: Vec<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let mut out = Vec::new();
    for k in first.. {
        let t = k as f64 * step;
        if t > hi + 1e-9 * span {
            break;
        }
        out.push(t);
    }
    out
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    let decades: Vec<f64> = (a..=b)
        .map(|e| 10f64.powi(e))
        .filter(|&v| v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9))
        .collect();
    if decades.len() >= 2 {
        return decades;
    }
    let mut out = Vec::new();
    for e in a..=b {
        for m in [1.0, 2.0, 5.0] {
            let v = m * 10f64.powi(e);
            if v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9) {
                out.push(v);
            }
        }
    }
    out
}

fn render(spec: &PlotSpec, traces: &[Trace]) -> String {
    let pts = traces.iter().flat_map(|t| {
        t.points
            .iter()
            .zip(t.errors.iter().chain(std::iter::repeat(&0.0)))
            .map(|(&(x, y), &e)| (x, y - e, y + e))
    });
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for (x, lo, hi) in pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(lo);
        y_hi = y_hi.max(hi);
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_hi) = (0.0, 1.0, 1.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    y_hi += 0.05 * (y_hi - y_lo);
    let log_x = spec.log_x && x_lo > 0.0;
    let tx = |x: f64| x.log10();
    let (xa, xb) = if log_x {
        (tx(x_lo), tx(x_hi))
    } else {
        (x_lo, x_hi)
    };
    let (xa, xb) = if xb > xa {
        (xa, xb)
    } else {
        (xa - 0.5, xb + 0.5)
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| {
        let v = if log_x { tx(x) } else { x };
        LEFT + (v - xa) / (xb - xa) * plot_w
    };
    let sy = |y: f64| TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        esc(&spec.title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );
    let xt = if log_x {
        log_ticks(x_lo, x_hi)
    } else {
        linear_ticks(x_lo, x_hi)
    };
    for t in xt {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            fmt_tick(t)
        );
    }
    for t in linear_ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        esc(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        esc(&spec.y_label)
    );

    for (k, t) in traces.iter().enumerate() {
        if t.points.len() > 1 {
            let path: Vec<String> = t
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if t.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                path.join(" "),
                t.color
            );
        }
        if t.markers {
            for (i, &(x, y)) in t.points.iter().enumerate() {
                let e = t.errors.get(i).copied().unwrap_or(0.0);
                if e > 0.0 {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{3}"/>"#,
                        sx(x),
                        sy(y - e),
                        sy(y + e),
                        t.color
                    );
                }
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                    sx(x),
                    sy(y),
                    t.color
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let dash = if t.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            t.color,
            lx + 28.0,
            ly + 4.0,
            esc(&t.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn series_order<'a>(names: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// Curve plot: empirical means with ±1 SE bars (markers) and closed-form
/// values (dashed when shown next to empirical points).
pub fn curve_svg(rows: &[CurveRow], spec: &PlotSpec) -> String {
    let x_of = |r: &CurveRow| match spec.x {
        XAxis::Gamma => r.gamma,
        XAxis::Grid => Some(r.grid),
        XAxis::GenError => r.gen_error,
    };
    let mut traces = Vec::new();
    for (k, name) in series_order(rows.iter().map(|r| r.series.as_str()))
        .into_iter()
        .enumerate()
    {
        let color = PALETTE[k % PALETTE.len()];
        let sel: Vec<&CurveRow> = rows.iter().filter(|r| r.series == name).collect();
        let emp: Vec<(f64, f64, f64)> = sel
            .iter()
            .filter_map(|r| Some((x_of(r)?, r.mean_adv?, r.stderr_adv.unwrap_or(0.0))))
            .collect();
        let th: Vec<(f64, f64)> = sel
            .iter()
            .filter_map(|r| Some((x_of(r)?, r.theory_adv?)))
            .collect();
        let has_emp = !emp.is_empty();
        if has_emp {
            traces.push(Trace {
                label: name.to_string(),
                color,
                dashed: false,
                markers: true,
                points: emp.iter().map(|&(x, y, _)| (x, y)).collect(),
                errors: emp.iter().map(|&(_, _, e)| e).collect(),
            });
        }
        if !th.is_empty() {
            traces.push(Trace {
                label: if has_emp {
                    format!("{name} (theory)")
                } else {
                    name.to_string()
                },
                color,
                dashed: has_emp,
                markers: false,
                points: th,
                errors: vec![],
            });
        }
    }
    render(spec, &traces)
}

/// Variance plot: sample variance per arm (markers) against the closed form.
pub fn variance_svg(rows: &[VarianceRow], spec: &PlotSpec) -> String {
    let mut traces = Vec::new();
    for arm in 0..2u8 {
        let sel: Vec<&VarianceRow> = rows.iter().filter(|r| r.arm == arm).collect();
        let color = PALETTE[arm as usize];
        traces.push(Trace {
            label: format!("m={arm} sample"),
            color,
            dashed: false,
            markers: true,
            points: sel.iter().map(|r| (r.gamma, r.empirical_var)).collect(),
            errors: vec![],
        });
        let th: Vec<(f64, f64)> = sel
            .iter()
            .filter_map(|r| Some((r.gamma, r.theory_var?)))
            .collect();
        if !th.is_empty() {
            traces.push(Trace {
                label: format!("m={arm} theory"),
                color,
                dashed: true,
                markers: false,
                points: th,
                errors: vec![],
            });
        }
    }
    render(spec, &traces)
}
