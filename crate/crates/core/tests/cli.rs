mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use jhcpp::cli::output::{RunManifest, ScanOutput, SolveRecord};
use serde_json::Value;

fn jhcpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jhcpp")).args(args).output().unwrap()
}

fn with_inputs(cmd: &[&str], graphml: &Path, cfg: &Path, out: &Path) -> Output {
    let mut args: Vec<String> = cmd.iter().map(|s| s.to_string()).collect();
    for (flag, p) in [("--topology", graphml), ("--scenario", cfg), ("--out", out)] {
        args.push(flag.into());
        args.push(p.display().to_string());
    }
    args.push("--quiet".into());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    jhcpp(&refs)
}

fn line4_run(cmd: &[&str], cfg: &str, out: &Path) -> Output {
    with_inputs(cmd, &fixture("line4.graphml"), &fixture(cfg), out)
}

fn att_run(cmd: &[&str], out: &Path) -> Output {
    with_inputs(cmd, &att_graphml_path(), &att_scenario_path(), out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    let first = err.lines().next().unwrap_or_default();
    assert!(first.starts_with(&format!("error[{kind}]:")), "{first}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn solve_all_writes_one_record_per_objective() {
    let dir = tempfile::tempdir().unwrap();
    let o = att_run(&["solve"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let records: Vec<SolveRecord> = serde_json::from_value(read_json(&dir.path().join("solve.json"))).unwrap();
    let names: Vec<&str> = records.iter().map(|r| r.objective.as_str()).collect();
    assert_eq!(names, ["worst", "avg", "avgmax", "maxavg"]);
    let csv = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(!csv.contains('\r'));
    assert!(dir.path().join("nodes.csv").is_file());
}

#[test]
fn solve_line4_worst_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = line4_run(&["solve", "--objective", "worst", "--dump-distances"], "line4.cfg", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let records: Vec<SolveRecord> = serde_json::from_value(read_json(&dir.path().join("solve.json"))).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].objective_value, 3.0);
    assert_eq!(records[0].placement.controllers, [0]);
    assert_eq!(records[0].placement.hypervisors, [1]);
    let dist = std::fs::read_to_string(dir.path().join("distances.csv")).unwrap();
    assert_eq!(dist.lines().next(), Some("source,0,1,2,3"));
    assert_eq!(dist.lines().nth(1), Some("0,0,1,2,3"));
}

#[test]
fn manifest_is_written_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    assert!(line4_run(&["solve"], "line4.cfg", dir.path()).status.success());
    let m: RunManifest =
        serde_json::from_slice(&std::fs::read(dir.path().join("solve.manifest.json")).unwrap()).unwrap();
    assert_eq!(m.command, "solve");
    assert!(m.outputs.contains(&"solve.json".to_string()));
    assert_eq!(m.config.unwrap().seed, 7);
    assert_eq!(m.tool_version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn json_objects_have_sorted_keys() {
    let dir = tempfile::tempdir().unwrap();
    let o = line4_run(&["solve", "--objective", "avg"], "line4.cfg", dir.path());
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("solve.json")).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("    \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(keys.len(), 8);
    assert_eq!(keys, sorted);
}

#[test]
fn missing_scenario_is_a_usage_error() {
    let o = jhcpp(&["solve", "--topology", fixture("line4.graphml").to_str().unwrap()]);
    assert_error(&o, 1, "usage");
    assert!(stderr(&o).contains("Usage:"));
}

#[test]
fn unknown_objective_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = line4_run(&["solve", "--objective", "median"], "line4.cfg", dir.path());
    assert_error(&o, 1, "config");
}

#[test]
fn oversized_search_space_exits_with_capacity_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = line4_run(&["solve"], "line4_capacity.cfg", dir.path());
    assert_error(&o, 2, "capacity");
    assert!(!dir.path().join("solve.json").exists());
}

#[test]
fn unreadable_topology_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_inputs(&["solve"], Path::new("/nonexistent/x.graphml"), &fixture("line4.cfg"), dir.path());
    assert_error(&o, 3, "io");
}

#[test]
fn malformed_graphml_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.graphml");
    std::fs::write(&bad, "<graphml><graph").unwrap();
    let o = with_inputs(&["solve"], &bad, &fixture("line4.cfg"), dir.path());
    assert_error(&o, 1, "parse");
}

#[test]
fn rpf_single_pair_on_line4() {
    let dir = tempfile::tempdir().unwrap();
    let o = line4_run(&["rpf", "--controller", "1", "--hypervisor", "2"], "line4.cfg", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("rpf.json"));
    assert_eq!(v["reduction"], 0.5);
    assert_eq!(v["cs"], 2);
    assert_eq!(v["cp"].as_u64().unwrap() + v["dptc"].as_u64().unwrap(), 2);
}

#[test]
fn rpf_rejects_non_candidate_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = line4_run(&["rpf", "--controller", "9", "--hypervisor", "2"], "line4.cfg", dir.path());
    assert_error(&o, 1, "config");
}

#[test]
fn rpf_controller_without_hypervisor_is_usage_error() {
    let o = jhcpp(&["rpf", "--controller", "1"]);
    assert_error(&o, 1, "usage");
}

#[test]
fn scan_covers_every_candidate_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = att_run(&["rpf", "--scan"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let scan: ScanOutput = serde_json::from_value(read_json(&dir.path().join("scan.json"))).unwrap();
    assert_eq!(scan.rows.len(), 16);
    assert!(scan.tradeoff_observed);
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 15);
    let plot = std::fs::read_to_string(dir.path().join("scan_plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 1 + 16 * 80);
}

#[test]
fn converge_reports_winners() {
    let dir = tempfile::tempdir().unwrap();
    let o = att_run(&["converge", "--iterations", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("converge.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("objective,controllers,hypervisors,wins,iterations"));
    for objective in ["worst", "avg", "avgmax", "maxavg"] {
        let wins: u32 = text
            .lines()
            .filter(|l| l.starts_with(&format!("{objective},")))
            .map(|l| l.split(',').nth(3).unwrap().parse::<u32>().unwrap())
            .sum();
        assert_eq!(wins, 3, "{objective}");
    }
}

#[test]
fn converge_needs_at_least_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let o = att_run(&["converge", "--iterations", "0"], dir.path());
    assert_error(&o, 1, "config");
}

#[test]
fn report_states_tradeoff_for_att() {
    let dir = tempfile::tempdir().unwrap();
    assert!(att_run(&["solve"], dir.path()).status.success());
    assert!(att_run(&["rpf", "--scan"], dir.path()).status.success());
    let o = jhcpp(&["report", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("verdict: trade-off observed"), "{text}");
    assert!(text.contains("CLEV"));
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), text);
}

#[test]
fn report_on_single_pair_says_no_tradeoff_possible() {
    let dir = tempfile::tempdir().unwrap();
    assert!(line4_run(&["rpf", "--scan"], "line4_singleton.cfg", dir.path()).status.success());
    let o = jhcpp(&["report", "--quiet", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains("no trade-off possible"), "{text}");
}

#[test]
fn report_without_scan_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = jhcpp(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_error(&o, 1, "config");
}

#[test]
fn help_exits_zero() {
    let o = jhcpp(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("solve"));
}
