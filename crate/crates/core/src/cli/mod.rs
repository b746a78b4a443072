//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 search space
//! too large, 3 I/O failure. Every error is printed to stderr as a single
//! line starting with `error[<kind>]:`.

pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{CommandFactory, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::paths::{all_pairs_shortest, ShortestPathTable};
use crate::placement::{compute_cost_tensor, converge_candidates, solve_many, CostTensor, ObjectiveKind};
use crate::rpf::{rpf_simulate, tradeoff_observed, tradeoff_scan, ScanRow};
use crate::topology::{parse_graphml_with, PhysicalTopology};
use crate::vsdn::{generate_vsdns, load_scenario, ScenarioConfig, VsdnInstance};
use output::*;

#[derive(Debug, Parser)]
#[command(name = "jhcpp", version, about = "Joint controller/hypervisor placement for vSDN")]
pub struct Cli {
    /// Topology Zoo GraphML file.
    #[arg(long, global = true)]
    pub topology: Option<PathBuf>,
    /// Scenario configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    /// Suppress the summary printed to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Worker threads; 0 picks the number of CPUs. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the placement problem for one or all latency objectives.
    Solve {
        /// worst, avg, avgmax, maxavg or all.
        #[arg(long, default_value = "all")]
        objective: String,
        /// Also write the all-pairs distance matrix.
        #[arg(long)]
        dump_distances: bool,
    },
    /// Classify control requests for one pair or scan all candidate pairs.
    Rpf {
        /// Controller node index (must be a controller candidate).
        #[arg(long, requires = "hypervisor", conflicts_with = "scan")]
        controller: Option<usize>,
        /// Hypervisor node index (must be a hypervisor candidate).
        #[arg(long, requires = "controller", conflicts_with = "scan")]
        hypervisor: Option<usize>,
        /// Scan every (controller, hypervisor) candidate pair.
        #[arg(long)]
        scan: bool,
    },
    /// Re-solve regenerated scenarios and count winning placements.
    Converge {
        #[arg(long, default_value_t = 100)]
        iterations: usize,
    },
    /// Summarize earlier `solve` and `rpf --scan` outputs in --out.
    Report,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::Geo { .. } => "geo",
        Error::Connectivity(_) => "connectivity",
        Error::Config { .. } => "config",
        Error::Capacity { .. } => "capacity",
        Error::Degenerate(_) => "degenerate",
        Error::Io { .. } => "io",
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 1 {
                let first = e.to_string();
                let first = first.lines().next().unwrap_or("invalid arguments");
                let first = first.trim_start_matches("error: ");
                eprintln!("error[usage]: {first}");
                eprintln!("{}", Cli::command().render_usage());
            } else {
                let _ = e.print();
            }
            return code;
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error[config]: cannot start {} worker threads: {e}", cli.threads);
            return 1;
        }
    };

    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            exit_code(&e)
        }
    }
}

/// Everything a command needs from `--topology` and `--scenario`.
struct Inputs {
    topology_path: PathBuf,
    scenario_path: PathBuf,
    config: ScenarioConfig,
    topology: PhysicalTopology,
}

impl Inputs {
    fn load(cli: &Cli) -> std::result::Result<Self, Failure> {
        let topology_path = cli
            .topology
            .clone()
            .ok_or_else(|| Failure::Usage("missing required flag --topology".into()))?;
        let scenario_path = cli
            .scenario
            .clone()
            .ok_or_else(|| Failure::Usage("missing required flag --scenario".into()))?;
        let scenario_text =
            fs::read_to_string(&scenario_path).map_err(|e| Error::io(&scenario_path, e))?;
        let graphml =
            fs::read_to_string(&topology_path).map_err(|e| Error::io(&topology_path, e))?;
        let config = load_scenario(&scenario_text)?;
        let topology = parse_graphml_with(&graphml, &config.geo_options())?;
        config.validate_for(&topology)?;
        Ok(Inputs {
            topology_path,
            scenario_path,
            config,
            topology,
        })
    }

    fn prepare(&self) -> Result<(ShortestPathTable, Vec<VsdnInstance>, CostTensor)> {
        let table = all_pairs_shortest(&self.topology)?;
        let vsdns = generate_vsdns(&self.config, &self.topology)?;
        let costs = compute_cost_tensor(
            &table,
            &vsdns,
            &self.config.hypervisor_candidates,
            &self.config.controller_candidates,
        )?;
        Ok((table, vsdns, costs))
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn create(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        inputs: Option<&Inputs>,
        started: (SystemTime, Instant),
    ) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            topology: inputs.map(|i| i.topology_path.clone()),
            scenario: inputs.map(|i| i.scenario_path.clone()),
            output_dir: self.dir.to_path_buf(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: inputs.map(|i| i.config.clone()),
            outputs: self.written,
            started_unix_s: started
                .0
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            duration_s: started.1.elapsed().as_secs_f64(),
        };
        write_json(&self.dir.join(RunManifest::file_name(command)), &manifest)
    }
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let started = (SystemTime::now(), Instant::now());
    match &cli.command {
        Command::Solve {
            objective,
            dump_distances,
        } => {
            let objectives = if objective == "all" {
                ObjectiveKind::ALL.to_vec()
            } else {
                vec![objective.parse::<ObjectiveKind>()?]
            };
            let inputs = Inputs::load(cli)?;
            let (table, vsdns, costs) = inputs.prepare()?;
            let results = solve_many(&objectives, &inputs.config, &costs, &vsdns)?;
            let records: Vec<SolveRecord> = results.iter().map(SolveRecord::from).collect();

            let mut out = Outputs::create(&cli.out)?;
            out.write(SOLVE_JSON, &json_bytes(&records))?;
            out.write(SOLVE_CSV, &solve_csv(&records))?;
            out.write(NODES_CSV, &nodes_csv(&inputs.topology))?;
            if *dump_distances {
                let mut buf = Vec::new();
                table
                    .write_distance_csv(&mut buf)
                    .expect("in-memory CSV write");
                out.write(DISTANCES_CSV, &buf)?;
            }
            out.finish("solve", Some(&inputs), started)?;
            if !cli.quiet {
                for r in &records {
                    println!(
                        "{:<7} controllers={:?} hypervisors={:?} value={:.6} ms",
                        r.objective, r.placement.controllers, r.placement.hypervisors, r.objective_value
                    );
                }
            }
        }
        Command::Rpf {
            controller,
            hypervisor,
            scan,
        } => {
            if !scan && controller.is_none() {
                return Err(Failure::Usage(
                    "rpf needs either --scan or both --controller and --hypervisor".into(),
                ));
            }
            let inputs = Inputs::load(cli)?;
            let (table, vsdns, costs) = inputs.prepare()?;
            let cfg = &inputs.config;
            let mut out = Outputs::create(&cli.out)?;
            if *scan {
                let rows = tradeoff_scan(
                    &table,
                    &vsdns,
                    &cfg.controller_candidates,
                    &cfg.hypervisor_candidates,
                    &costs,
                    cfg.c_proc_ms,
                    cfg.h_proc_ms,
                )?;
                let observed = tradeoff_observed(&rows);
                out.write(SCAN_CSV, &scan_csv(&rows))?;
                out.write(
                    SCAN_JSON,
                    &json_bytes(&ScanOutput {
                        tradeoff_observed: observed,
                        rows: rows.clone(),
                    }),
                )?;
                out.write(SCAN_PLOT_CSV, &scan_plot_csv(&rows))?;
                if !cli.quiet {
                    println!("scanned {} pairs; trade-off observed: {observed}", rows.len());
                }
            } else {
                let (c, h) = (controller.unwrap(), hypervisor.unwrap());
                let n = inputs.topology.num_nodes();
                for (flag, v) in [("controller", c), ("hypervisor", h)] {
                    if v >= n {
                        return Err(Error::config(flag, format!("node index {v} outside 0..{n}")).into());
                    }
                }
                let report = rpf_simulate(&table, &vsdns, c, h, cfg.c_proc_ms, cfg.h_proc_ms)?;
                out.write(RPF_JSON, &load_report_json(&report))?;
                if !cli.quiet {
                    println!(
                        "controller={c} hypervisor={h} cs={} cp={} dptc={} reduction={}",
                        report.cs, report.cp, report.dptc, report.reduction
                    );
                }
            }
            out.write(NODES_CSV, &nodes_csv(&inputs.topology))?;
            out.finish("rpf", Some(&inputs), started)?;
        }
        Command::Converge { iterations } => {
            if *iterations < 1 {
                return Err(Error::config("iterations", "must be at least 1").into());
            }
            let inputs = Inputs::load(cli)?;
            let table = converge_candidates(&inputs.config, &inputs.topology, *iterations)?;
            let mut out = Outputs::create(&cli.out)?;
            out.write(CONVERGE_CSV, &converge_csv(&table))?;
            out.write(NODES_CSV, &nodes_csv(&inputs.topology))?;
            out.finish("converge", Some(&inputs), started)?;
            if !cli.quiet {
                for (objective, wins) in &table.wins {
                    if let Some((p, count)) = wins.first() {
                        println!("{objective:<7} most frequent {p} ({count}/{iterations})");
                    }
                }
            }
        }
        Command::Report => {
            let scan_path = cli.out.join(SCAN_JSON);
            if !scan_path.is_file() {
                return Err(Error::config(
                    "out",
                    format!(
                        "{} not found; run `rpf --scan` with the same --out first",
                        scan_path.display()
                    ),
                )
                .into());
            }
            let scan: ScanOutput = read_json(&scan_path)?;
            let solve_path = cli.out.join(SOLVE_JSON);
            let solved: Option<Vec<SolveRecord>> = if solve_path.is_file() {
                Some(read_json(&solve_path)?)
            } else {
                None
            };
            let nodes_path = cli.out.join(NODES_CSV);
            let labels = if nodes_path.is_file() {
                read_node_labels(&nodes_path)?
            } else {
                Vec::new()
            };
            let text = render_report(&scan.rows, solved.as_deref(), &labels);
            let mut out = Outputs::create(&cli.out)?;
            out.write(REPORT_TXT, text.as_bytes())?;
            out.finish("report", None, started)?;
            if !cli.quiet {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn name(node: usize, labels: &[String]) -> String {
    match labels.get(node) {
        Some(label) if !label.is_empty() => format!("{node} ({label})"),
        _ => node.to_string(),
    }
}

fn names(nodes: &[usize], labels: &[String]) -> String {
    nodes
        .iter()
        .map(|&n| name(n, labels))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Human-readable trade-off summary over a scan and, optionally, the joint
/// solver results.
pub fn render_report(rows: &[ScanRow], solved: Option<&[SolveRecord]>, labels: &[String]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "Latency / hypervisor-load trade-off");
    let _ = writeln!(s, "===================================");
    let _ = writeln!(s, "scanned (controller, hypervisor) pairs: {}", rows.len());
    let _ = writeln!(s);

    if rows.is_empty() {
        let _ = writeln!(s, "verdict: no trade-off possible (empty scan)");
        return s;
    }

    let _ = writeln!(s, "latency-optimal single pairs:");
    for (k, objective) in ObjectiveKind::ALL.into_iter().enumerate() {
        if let Some(r) = rows.iter().find(|r| r.latency_optimal[k]) {
            let _ = writeln!(
                s,
                "  {:<7} C={} H={}  value={:.6} ms  reduction={:.4}",
                objective.name(),
                name(r.controller, labels),
                name(r.hypervisor, labels),
                objective.value(&r.metrics),
                r.load.reduction
            );
        }
    }
    if let Some(r) = rows.iter().find(|r| r.reduction_max) {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "reduction-maximal pair: C={} H={}  reduction={:.4} (cs={} cp={} dptc={})",
            name(r.controller, labels),
            name(r.hypervisor, labels),
            r.load.reduction,
            r.load.cs,
            r.load.cp,
            r.load.dptc
        );
        let _ = writeln!(
            s,
            "  its latencies: worst={:.6} avg={:.6} avg_max={:.6} max_avg={:.6} ms",
            r.metrics.worst, r.metrics.avg, r.metrics.avg_max, r.metrics.max_avg
        );
    }

    if let Some(records) = solved {
        let _ = writeln!(s);
        let _ = writeln!(s, "joint solver optima:");
        for r in records {
            let _ = writeln!(
                s,
                "  {:<7} controllers=[{}] hypervisors=[{}]  value={:.6} ms",
                r.objective,
                names(&r.placement.controllers, labels),
                names(&r.placement.hypervisors, labels),
                r.objective_value
            );
        }
    }

    let _ = writeln!(s);
    if rows.len() == 1 {
        let _ = writeln!(s, "verdict: no trade-off possible (single candidate pair)");
    } else if tradeoff_observed(rows) {
        let _ = writeln!(
            s,
            "verdict: trade-off observed; the pair that offloads the hypervisor most is not latency-optimal for every objective"
        );
    } else {
        let _ = writeln!(
            s,
            "verdict: no trade-off observed; one pair is both latency-optimal and reduction-maximal"
        );
    }
    s
}
