//! Result documents and file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use faircover::baselines::EvaluationReport;
use faircover::benders::IterationRecord;
use faircover::fairness_search::GridPoint;
use faircover::instance::InstanceSummary;
use faircover::netmodel::Network;
use faircover::Result;

pub const SCHEMA: u32 = 1;

/// Percentage with one decimal.
pub fn pct(fraction: f64) -> f64 {
    (1000.0 * fraction).round() / 10.0
}

pub fn ids(net: &Network, nodes: &[usize]) -> Vec<i64> {
    nodes.iter().map(|&n| net.node_ids[n]).collect()
}

#[derive(Debug, Serialize)]
pub struct GroupRow {
    pub group: i64,
    pub size: usize,
    pub floor: usize,
    pub covered: usize,
    pub percent: f64,
    pub failures: Vec<i64>,
}

#[derive(Debug, Serialize)]
pub struct WorstCase {
    pub total: usize,
    pub percent: f64,
    pub failures: Vec<i64>,
    pub min_group_percent: f64,
    pub groups: Vec<GroupRow>,
    pub scenarios: usize,
}

impl WorstCase {
    pub fn new(net: &Network, floors: &[usize], report: &EvaluationReport) -> Self {
        let n = net.graph.node_count();
        Self {
            total: report.total,
            percent: pct(report.total as f64 / n as f64),
            failures: ids(net, &report.total_failures),
            min_group_percent: pct(report.worst_group_fraction()),
            groups: report
                .groups
                .iter()
                .map(|g| GroupRow {
                    group: net.group_ids[g.group],
                    size: g.size,
                    floor: floors[g.group],
                    covered: g.covered,
                    percent: pct(g.fraction()),
                    failures: ids(net, &g.failures),
                })
                .collect(),
            scenarios: report.scenarios,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct SolveResult {
    pub schema: u32,
    pub command: &'static str,
    pub solver: String,
    pub k: Option<usize>,
    pub instance: InstanceSummary,
    pub w: f64,
    pub floors: Vec<usize>,
    pub status: &'static str,
    pub tau: Option<usize>,
    pub monitors: Option<Vec<i64>>,
    pub schemes: Vec<Vec<i64>>,
    pub floors_met: Option<bool>,
    pub worst_case: Option<WorstCase>,
    pub w_search: Vec<GridPoint>,
    pub nodes: usize,
    pub iterations: Vec<IterationRecord>,
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Writes `text` to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(path, &text)
}

pub fn csv_string<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| faircover::Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(wrap)?;
    fill(&mut w).map_err(wrap)?;
    let bytes = w.into_inner().map_err(|e| faircover::Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
