//! Output records and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::{ConvergenceTable, Placement, PlacementResult};
use crate::rpf::{LoadReport, ScanRow};
use crate::topology::PhysicalTopology;
use crate::vsdn::ScenarioConfig;

pub const SOLVE_JSON: &str = "solve.json";
pub const SOLVE_CSV: &str = "solve.csv";
pub const RPF_JSON: &str = "rpf.json";
pub const SCAN_JSON: &str = "scan.json";
pub const SCAN_CSV: &str = "scan.csv";
pub const SCAN_PLOT_CSV: &str = "scan_plot.csv";
pub const CONVERGE_CSV: &str = "converge.csv";
pub const NODES_CSV: &str = "nodes.csv";
pub const DISTANCES_CSV: &str = "distances.csv";
pub const REPORT_TXT: &str = "report.txt";

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with object keys sorted, LF line endings, trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    // serde_json::Value keeps object keys in a BTreeMap
    let value = serde_json::to_value(value).expect("output records serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text.into_bytes()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &json_bytes(value))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

fn join(nodes: &[usize]) -> String {
    nodes.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn num(v: f64) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsdnWorst {
    pub vsdn: usize,
    pub worst: f64,
}

/// One solved objective as written to `solve.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub objective: String,
    pub placement: Placement,
    pub objective_value: f64,
    pub worst: f64,
    pub avg: f64,
    pub avg_max: f64,
    pub max_avg: f64,
    pub per_vsdn_worst: Vec<VsdnWorst>,
}

impl From<&PlacementResult> for SolveRecord {
    fn from(r: &PlacementResult) -> Self {
        SolveRecord {
            objective: r.objective.name().to_string(),
            placement: r.placement.clone(),
            objective_value: r.objective_value,
            worst: r.metrics.worst,
            avg: r.metrics.avg,
            avg_max: r.metrics.avg_max,
            max_avg: r.metrics.max_avg,
            per_vsdn_worst: r
                .metrics
                .per_vsdn_worst
                .iter()
                .map(|&(vsdn, worst)| VsdnWorst { vsdn, worst })
                .collect(),
        }
    }
}

pub fn solve_csv(records: &[SolveRecord]) -> Vec<u8> {
    csv_bytes(
        &["objective", "controllers", "hypervisors", "worst", "avg", "avg_max", "max_avg"],
        records.iter().map(|r| {
            vec![
                r.objective.clone(),
                join(&r.placement.controllers),
                join(&r.placement.hypervisors),
                num(r.worst),
                num(r.avg),
                num(r.avg_max),
                num(r.max_avg),
            ]
        }),
    )
}

/// Contents of `scan.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutput {
    pub tradeoff_observed: bool,
    pub rows: Vec<ScanRow>,
}

pub fn scan_csv(rows: &[ScanRow]) -> Vec<u8> {
    csv_bytes(
        &[
            "controller",
            "hypervisor",
            "worst",
            "avg",
            "avg_max",
            "max_avg",
            "cs",
            "cp",
            "dptc",
            "reduction",
            "is_latency_opt_worst",
            "is_latency_opt_avg",
            "is_latency_opt_avgmax",
            "is_latency_opt_maxavg",
            "is_reduction_max",
        ],
        rows.iter().map(|r| {
            let mut row = vec![
                r.controller.to_string(),
                r.hypervisor.to_string(),
                num(r.metrics.worst),
                num(r.metrics.avg),
                num(r.metrics.avg_max),
                num(r.metrics.max_avg),
                r.load.cs.to_string(),
                r.load.cp.to_string(),
                r.load.dptc.to_string(),
                num(r.load.reduction),
            ];
            row.extend(r.latency_optimal.iter().map(|f| f.to_string()));
            row.push(r.reduction_max.to_string());
            row
        }),
    )
}

/// Per-tenant stacked request counts for every scanned pair.
pub fn scan_plot_csv(rows: &[ScanRow]) -> Vec<u8> {
    csv_bytes(
        &["controller", "hypervisor", "vsdn", "cs", "cp", "dptc"],
        rows.iter().flat_map(|r| {
            r.load.per_vsdn.iter().map(move |(vsdn, c)| {
                vec![
                    r.controller.to_string(),
                    r.hypervisor.to_string(),
                    vsdn.to_string(),
                    c.cs.to_string(),
                    c.cp.to_string(),
                    c.dptc.to_string(),
                ]
            })
        }),
    )
}

pub fn converge_csv(table: &ConvergenceTable) -> Vec<u8> {
    csv_bytes(
        &["objective", "controllers", "hypervisors", "wins", "iterations"],
        table.wins.iter().flat_map(|(objective, wins)| {
            wins.iter().map(move |(p, count)| {
                vec![
                    objective.name().to_string(),
                    join(&p.controllers),
                    join(&p.hypervisors),
                    count.to_string(),
                    table.iterations.to_string(),
                ]
            })
        }),
    )
}

/// Index to label table so numeric node ids can be mapped back.
pub fn nodes_csv(topology: &PhysicalTopology) -> Vec<u8> {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    csv_bytes(
        &["index", "source_id", "label", "latitude", "longitude"],
        topology.nodes().iter().map(|n| {
            vec![
                n.index.to_string(),
                n.source_id.clone(),
                n.label.clone(),
                opt(n.latitude),
                opt(n.longitude),
            ]
        }),
    )
}

/// Reads `nodes.csv` back into `index -> label`.
pub fn read_node_labels(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    })?;
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        labels.push(record.get(2).unwrap_or_default().to_string());
    }
    Ok(labels)
}

pub fn load_report_json(report: &LoadReport) -> Vec<u8> {
    json_bytes(report)
}

/// Metadata written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub topology: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub tool_version: String,
    pub config: Option<ScenarioConfig>,
    pub outputs: Vec<String>,
    pub started_unix_s: u64,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }
}
