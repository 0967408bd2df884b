use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scenario};
use super::roster::{CapabilityClass, Role};
use super::ExperimentError;
use crate::detector::SweepPoint;
use crate::gametheory::PayoffDocument;

/// One evaluation episode return of one agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnRow {
    pub condition: String,
    /// Boycott ratio of the condition, if it has one.
    pub boycott: Option<f64>,
    pub replicate: u32,
    pub episode: u32,
    pub agent_id: usize,
    pub role: Role,
    pub class: CapabilityClass,
    #[serde(rename = "return")]
    pub ret: u64,
}

/// Aggregates of one condition. `None` where the class is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub boycott: Option<f64>,
    pub avg_c: Option<f64>,
    pub avg_d: Option<f64>,
    /// Standard error of the replicate means.
    pub se_c: Option<f64>,
    pub se_d: Option<f64>,
    pub avg_weak: Option<f64>,
    pub avg_strong: Option<f64>,
    pub replicates: u32,
}

/// Detector accuracy row; `length` is the window length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorMetric {
    pub length: usize,
    pub train_acc: f64,
    pub test_acc: f64,
}

impl From<SweepPoint> for DetectorMetric {
    fn from(p: SweepPoint) -> Self {
        DetectorMetric {
            length: p.length,
            train_acc: p.train_accuracy,
            test_acc: p.test_accuracy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagRate {
    pub condition: String,
    pub replicate: u32,
    pub agent_id: usize,
    pub role: Role,
    /// Fraction of evaluation episodes on which the detector flagged the agent.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Per-replicate seeds derived from the master seed.
    pub seeds: Vec<u64>,
    pub rows: Vec<ReturnRow>,
    pub summary: Vec<ConditionSummary>,
    /// Avg(C) of the all-compliant rerun, when there is one.
    pub counterfactual_avg_c: Option<f64>,
    pub flag_rates: Vec<FlagRate>,
    pub detector_metrics: Vec<DetectorMetric>,
    pub payoff_before: Option<PayoffDocument>,
    pub payoff_after: Option<PayoffDocument>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionSummary> {
        self.summary.iter().find(|s| s.condition == name)
    }
}

pub fn condition_name(boycott: f64) -> String {
    format!("B={boycott}")
}

pub const ALL_COMPLIANT: &str = "all_compliant";

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn standard_error(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    Some((var / v.len() as f64).sqrt())
}

/// Recomputes every condition aggregate from the per-episode rows, in order
/// of first appearance.
pub fn summarize(rows: &[ReturnRow]) -> Vec<ConditionSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&ReturnRow>> = BTreeMap::new();
    for r in rows {
        if !groups.contains_key(r.condition.as_str()) {
            order.push(r.condition.clone());
        }
        groups.entry(&r.condition).or_default().push(r);
    }
    order
        .iter()
        .map(|name| {
            let g = &groups[name.as_str()];
            let pick = |f: &dyn Fn(&ReturnRow) -> bool| -> Vec<f64> {
                g.iter().filter(|r| f(r)).map(|r| r.ret as f64).collect()
            };
            let per_replicate = |role: Role| -> Vec<f64> {
                let mut by: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
                for r in g.iter().filter(|r| r.role == role) {
                    by.entry(r.replicate).or_default().push(r.ret as f64);
                }
                by.values().filter_map(|v| mean(v)).collect()
            };
            let mut reps: Vec<u32> = g.iter().map(|r| r.replicate).collect();
            reps.sort_unstable();
            reps.dedup();
            ConditionSummary {
                condition: name.clone(),
                boycott: g[0].boycott,
                avg_c: mean(&pick(&|r| r.role == Role::Compliant)),
                avg_d: mean(&pick(&|r| r.role == Role::Defective)),
                se_c: standard_error(&per_replicate(Role::Compliant)),
                se_d: standard_error(&per_replicate(Role::Defective)),
                avg_weak: mean(&pick(&|r| r.class == CapabilityClass::Weak)),
                avg_strong: mean(&pick(&|r| r.class == CapabilityClass::Strong)),
                replicates: reps.len() as u32,
            }
        })
        .collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Output(path.display().to_string(), e.to_string())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Output(path.display().to_string(), e.to_string())
}

fn provenance(report: &RunReport) -> String {
    let seeds: Vec<String> = report.seeds.iter().map(u64::to_string).collect();
    format!(
        "# config_hash={} master_seed={} seeds={}\n",
        report.config_hash,
        report.config.seed,
        seeds.join(";")
    )
}

/// Writes a CSV preceded by a `#` provenance line.
fn write_csv<R: Serialize>(path: &Path, header: &str, rows: &[R]) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(header.as_bytes().to_vec());
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ExperimentError::Output(path.display().to_string(), e.to_string()))?;
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>, ExperimentError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| ExperimentError::Output(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

#[derive(Serialize)]
struct PayoffFile<'a> {
    config_hash: String,
    scenario: &'a str,
    #[serde(flatten)]
    matrix: PayoffDocument,
}

/// The summary file: the report without the per-episode rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub scenario: Scenario,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub summary: Vec<ConditionSummary>,
    pub counterfactual_avg_c: Option<f64>,
    pub flag_rates: Vec<FlagRate>,
    pub detector_metrics: Vec<DetectorMetric>,
    pub payoff_before: Option<PayoffDocument>,
    pub payoff_after: Option<PayoffDocument>,
    /// The only field that varies between identical runs.
    pub wall_clock_seconds: f64,
}

pub const RETURNS_FILE: &str = "returns.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PAYOFF_BEFORE_FILE: &str = "payoff_before.json";
pub const PAYOFF_AFTER_FILE: &str = "payoff_after.json";
pub const DETECTOR_FILE: &str = "detector_metrics.csv";

/// Writes every result file for the report into `dir`; returns the paths written.
pub fn emit_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let head = provenance(report);

    if !report.rows.is_empty() {
        let p = dir.join(RETURNS_FILE);
        write_csv(&p, &head, &report.rows)?;
        written.push(p);
    }
    let summary = SummaryFile {
        scenario: report.config.scenario,
        config_hash: report.config_hash.clone(),
        seeds: report.seeds.clone(),
        config: report.config.clone(),
        summary: report.summary.clone(),
        counterfactual_avg_c: report.counterfactual_avg_c,
        flag_rates: report.flag_rates.clone(),
        detector_metrics: report.detector_metrics.clone(),
        payoff_before: report.payoff_before.clone(),
        payoff_after: report.payoff_after.clone(),
        wall_clock_seconds: report.wall_clock_seconds,
    };
    let p = dir.join(SUMMARY_FILE);
    write_json(&p, &summary)?;
    written.push(p);

    for (name, doc) in [
        (PAYOFF_BEFORE_FILE, &report.payoff_before),
        (PAYOFF_AFTER_FILE, &report.payoff_after),
    ] {
        if let Some(doc) = doc {
            let p = dir.join(name);
            write_json(
                &p,
                &PayoffFile {
                    config_hash: report.config_hash.clone(),
                    scenario: report.config.scenario.as_str(),
                    matrix: doc.clone(),
                },
            )?;
            written.push(p);
        }
    }

    if !report.detector_metrics.is_empty() {
        let p = dir.join(DETECTOR_FILE);
        write_csv(&p, &head, &report.detector_metrics)?;
        written.push(p);
    }

    written.extend(super::plot::write_plots(report, dir, &head)?);
    Ok(written)
}

pub fn load_summary(dir: &Path) -> Result<SummaryFile, ExperimentError> {
    let p = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Output(p.display().to_string(), e.to_string()))
}

pub fn load_returns(dir: &Path) -> Result<Vec<ReturnRow>, ExperimentError> {
    read_csv(&dir.join(RETURNS_FILE))
}

pub fn load_detector_metrics(dir: &Path) -> Result<Vec<DetectorMetric>, ExperimentError> {
    read_csv(&dir.join(DETECTOR_FILE))
}

/// Recomputes the aggregates of `summary.json` from `returns.csv` and checks
/// they agree to within `tol`.
pub fn verify_outputs(dir: &Path, tol: f64) -> Result<(), ExperimentError> {
    let summary = load_summary(dir)?;
    if summary.summary.is_empty() {
        return Ok(());
    }
    let again = summarize(&load_returns(dir)?);
    let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        (None, None) => true,
        _ => false,
    };
    if again.len() != summary.summary.len() {
        return Err(ExperimentError::Inconsistent(format!(
            "{} conditions in summary, {} in returns",
            summary.summary.len(),
            again.len()
        )));
    }
    for (a, b) in summary.summary.iter().zip(&again) {
        let ok = a.condition == b.condition
            && close(a.avg_c, b.avg_c)
            && close(a.avg_d, b.avg_d)
            && close(a.se_c, b.se_c)
            && close(a.se_d, b.se_d)
            && close(a.avg_weak, b.avg_weak)
            && close(a.avg_strong, b.avg_strong);
        if !ok {
            return Err(ExperimentError::Inconsistent(format!(
                "condition {}: summary {a:?} vs recomputed {b:?}",
                a.condition
            )));
        }
    }
    Ok(())
}
