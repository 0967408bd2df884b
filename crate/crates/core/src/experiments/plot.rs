//! Plot data files and minimal SVG line charts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Scenario;
use super::report::{RunReport, ALL_COMPLIANT};
use super::ExperimentError;

pub const RETURNS_PLOT: &str = "plot_returns";
pub const ACCURACY_PLOT: &str = "plot_accuracy";

#[derive(Serialize)]
struct ReturnPoint {
    boycott: f64,
    avg_c: Option<f64>,
    avg_d: Option<f64>,
    all_compliant_avg_c: Option<f64>,
}

#[derive(Serialize)]
struct AccuracyPoint {
    length: usize,
    test_acc: f64,
}

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output(path.display().to_string(), e.to_string())
}

fn write_data<R: Serialize>(path: &Path, head: &str, rows: &[R]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(head.as_bytes().to_vec());
    for r in rows {
        w.serialize(r).map_err(|e| out_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| out_err(path, e))?;
    fs::write(path, bytes).map_err(|e| out_err(path, e))
}

pub(crate) fn write_plots(
    report: &RunReport,
    dir: &Path,
    head: &str,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut written = Vec::new();
    match report.config.scenario {
        Scenario::Exp1 | Scenario::Exp2 => {
            let cf = report.counterfactual_avg_c;
            let pts: Vec<ReturnPoint> = report
                .summary
                .iter()
                .filter(|s| s.condition != ALL_COMPLIANT)
                .filter_map(|s| {
                    Some(ReturnPoint {
                        boycott: s.boycott?,
                        avg_c: s.avg_c,
                        avg_d: s.avg_d,
                        all_compliant_avg_c: cf,
                    })
                })
                .collect();
            if pts.is_empty() {
                return Ok(written);
            }
            let data = dir.join(format!("{RETURNS_PLOT}.csv"));
            write_data(&data, head, &pts)?;
            let series = |name, color, f: fn(&ReturnPoint) -> Option<f64>| Series {
                name,
                color,
                points: pts.iter().filter_map(|p| Some((p.boycott, f(p)?))).collect(),
            };
            let mut all = vec![
                series("Avg(C)", "#1f77b4", |p| p.avg_c),
                series("Avg(D)", "#ff7f0e", |p| p.avg_d),
            ];
            if let Some(c) = cf {
                let (lo, hi) = (pts[0].boycott, pts[pts.len() - 1].boycott);
                all.push(Series {
                    name: "all compliant Avg(C)",
                    color: "#d62728",
                    points: vec![(lo, c), (hi, c)],
                });
            }
            let svg_path = dir.join(format!("{RETURNS_PLOT}.svg"));
            let svg = line_chart(
                &format!("{} episode return vs boycott ratio", report.config.scenario.as_str()),
                "boycott ratio B",
                "mean episode return",
                &all,
            );
            fs::write(&svg_path, svg).map_err(|e| out_err(&svg_path, e))?;
            written.extend([data, svg_path]);
        }
        Scenario::Detector => {
            let pts: Vec<AccuracyPoint> = report
                .detector_metrics
                .iter()
                .map(|m| AccuracyPoint {
                    length: m.length,
                    test_acc: m.test_acc,
                })
                .collect();
            if pts.is_empty() {
                return Ok(written);
            }
            let data = dir.join(format!("{ACCURACY_PLOT}.csv"));
            write_data(&data, head, &pts)?;
            let svg_path = dir.join(format!("{ACCURACY_PLOT}.svg"));
            let svg = line_chart(
                "detector accuracy vs sequence length",
                "sequence length",
                "test accuracy",
                &[Series {
                    name: "test accuracy",
                    color: "#1f77b4",
                    points: pts.iter().map(|p| (p.length as f64, p.test_acc)).collect(),
                }],
            );
            fs::write(&svg_path, svg).map_err(|e| out_err(&svg_path, e))?;
            written.extend([data, svg_path]);
        }
        Scenario::Egta => {}
    }
    Ok(written)
}

/// A static line chart with markers, axes, five ticks per axis and a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.1).max(1e-6);
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let sy = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (w - right + left) / 2.0,
        escape(title)
    );
    let (ax0, ax1, ay0, ay1) = (left, w - right, h - bottom, top);
    let _ = writeln!(
        s,
        r#"<path d="M{ax0},{ay1} L{ax0},{ay0} L{ax1},{ay0}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            sx(fx),
            ay0 + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            ax0 - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (ax0 + ax1) / 2.0,
        h - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (ay0 + ay1) / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let d: Vec<String> = ser
            .points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.1},{:.1}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<path d="{}" stroke="{}" stroke-width="2" fill="none"/>"#,
            d.join(" "),
            ser.color
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                sx(x),
                sy(y),
                ser.color
            );
        }
        let ly = top + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{3}" stroke-width="2"/><text x="{4}" y="{5}">{6}</text>"#,
            w - right + 10.0,
            ly,
            w - right + 30.0,
            ser.color,
            w - right + 36.0,
            ly + 4.0,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
