//! Reverse path-flow (RPF) classification of control requests.
//!
//! Every demand node of every tenant emits one request towards the
//! hypervisor along the deterministic shortest path. If the controller sits
//! on that route it intercepts the request, and processes it locally when
//!
//! ```text
//! c_proc_ms <= 2 * dist(controller, hypervisor) + h_proc_ms
//! ```
//!
//! Otherwise it forwards the request to the hypervisor. Requests whose route
//! misses the controller reach the hypervisor directly. The hypervisor load
//! reduction of a `(controller, hypervisor)` pair is `cs / (cs + cp + dptc)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::ShortestPathTable;
use crate::placement::{evaluate_metrics, optimal_assignment, CostTensor, MetricSet, ObjectiveKind, Placement};
use crate::vsdn::VsdnInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub vsdn: usize,
    pub source: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestOutcome {
    BlockedAtController,
    ForwardedControllerToHypervisor,
    DirectToHypervisor,
}

/// Request counts for one tenant or for a whole pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestCounts {
    /// Blocked (processed) at the controller.
    pub cs: usize,
    /// Forwarded from the controller to the hypervisor.
    pub cp: usize,
    /// Reached the hypervisor without passing the controller.
    pub dptc: usize,
}

impl RequestCounts {
    pub fn total(&self) -> usize {
        self.cs + self.cp + self.dptc
    }

    fn record(&mut self, outcome: RequestOutcome) {
        match outcome {
            RequestOutcome::BlockedAtController => self.cs += 1,
            RequestOutcome::ForwardedControllerToHypervisor => self.cp += 1,
            RequestOutcome::DirectToHypervisor => self.dptc += 1,
        }
    }

    fn add(&mut self, other: &RequestCounts) {
        self.cs += other.cs;
        self.cp += other.cp;
        self.dptc += other.dptc;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub controller: usize,
    pub hypervisor: usize,
    pub cs: usize,
    pub cp: usize,
    pub dptc: usize,
    /// `cs / (cs + cp + dptc)`.
    pub reduction: f64,
    /// `(vsdn id, counts)` in tenant order.
    pub per_vsdn: Vec<(usize, RequestCounts)>,
}

impl LoadReport {
    pub fn total(&self) -> usize {
        self.cs + self.cp + self.dptc
    }
}

/// Classifies a single request for the given controller/hypervisor pair.
pub fn classify_request(
    table: &ShortestPathTable,
    request: Request,
    controller: usize,
    hypervisor: usize,
    c_proc_ms: f64,
    h_proc_ms: f64,
) -> Result<RequestOutcome> {
    if [c_proc_ms, h_proc_ms].iter().any(|p| p.is_nan() || *p < 0.0) {
        return Err(Error::config(
            "c_proc_ms/h_proc_ms",
            "processing times must be non-negative",
        ));
    }
    if !table.passes_through(request.source, hypervisor, controller)? {
        return Ok(RequestOutcome::DirectToHypervisor);
    }
    if c_proc_ms <= 2.0 * table.dist(controller, hypervisor) + h_proc_ms {
        Ok(RequestOutcome::BlockedAtController)
    } else {
        Ok(RequestOutcome::ForwardedControllerToHypervisor)
    }
}

/// One request per (tenant, demand node), classified and counted.
pub fn rpf_simulate(
    table: &ShortestPathTable,
    vsdns: &[VsdnInstance],
    controller: usize,
    hypervisor: usize,
    c_proc_ms: f64,
    h_proc_ms: f64,
) -> Result<LoadReport> {
    let mut totals = RequestCounts::default();
    let mut per_vsdn = Vec::with_capacity(vsdns.len());
    for v in vsdns {
        let mut counts = RequestCounts::default();
        for &source in v.demand_nodes() {
            let request = Request { vsdn: v.id, source };
            counts.record(classify_request(
                table, request, controller, hypervisor, c_proc_ms, h_proc_ms,
            )?);
        }
        totals.add(&counts);
        per_vsdn.push((v.id, counts));
    }
    if totals.total() == 0 {
        return Err(Error::Degenerate(
            "no requests to classify; reduction is undefined".into(),
        ));
    }
    Ok(LoadReport {
        controller,
        hypervisor,
        cs: totals.cs,
        cp: totals.cp,
        dptc: totals.dptc,
        reduction: totals.cs as f64 / totals.total() as f64,
        per_vsdn,
    })
}

/// One `(controller, hypervisor)` point of the trade-off scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub controller: usize,
    pub hypervisor: usize,
    pub metrics: MetricSet,
    pub load: LoadReport,
    /// Latency-optimal flags in [`ObjectiveKind::ALL`] order.
    pub latency_optimal: [bool; 4],
    pub reduction_max: bool,
}

impl ScanRow {
    pub fn is_latency_optimal(&self, objective: ObjectiveKind) -> bool {
        let k = ObjectiveKind::ALL.iter().position(|&o| o == objective).unwrap();
        self.latency_optimal[k]
    }
}

/// Evaluates every single-controller, single-hypervisor pair.
///
/// Rows come in lexicographic `(controller, hypervisor)` order. For each
/// objective the first row with the minimal value is flagged, and likewise
/// the first row with the maximal reduction.
pub fn tradeoff_scan(
    table: &ShortestPathTable,
    vsdns: &[VsdnInstance],
    c_candidates: &[usize],
    h_candidates: &[usize],
    costs: &CostTensor,
    c_proc_ms: f64,
    h_proc_ms: f64,
) -> Result<Vec<ScanRow>> {
    let mut controllers = c_candidates.to_vec();
    controllers.sort_unstable();
    controllers.dedup();
    let mut hypervisors = h_candidates.to_vec();
    hypervisors.sort_unstable();
    hypervisors.dedup();
    for &c in &controllers {
        if !costs.controller_candidates().contains(&c) {
            return Err(Error::config(
                "controller_candidates",
                format!("controller {c} is not covered by the cost tensor"),
            ));
        }
    }
    for &h in &hypervisors {
        if !costs.hypervisor_candidates().contains(&h) {
            return Err(Error::config(
                "hypervisor_candidates",
                format!("hypervisor {h} is not covered by the cost tensor"),
            ));
        }
    }
    let pairs: Vec<(usize, usize)> = controllers
        .iter()
        .flat_map(|&c| hypervisors.iter().map(move |&h| (c, h)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Degenerate("empty candidate sets".into()));
    }

    let mut rows: Vec<ScanRow> = pairs
        .par_iter()
        .map(|&(c, h)| {
            let placement = Placement::single(c, h);
            let assignment = optimal_assignment(&placement, costs, vsdns);
            let metrics = evaluate_metrics(&assignment, costs, vsdns);
            let load = rpf_simulate(table, vsdns, c, h, c_proc_ms, h_proc_ms)?;
            Ok(ScanRow {
                controller: c,
                hypervisor: h,
                metrics,
                load,
                latency_optimal: [false; 4],
                reduction_max: false,
            })
        })
        .collect::<Result<_>>()?;

    for (k, objective) in ObjectiveKind::ALL.into_iter().enumerate() {
        let mut best = 0;
        for (i, row) in rows.iter().enumerate() {
            if objective.value(&row.metrics) < objective.value(&rows[best].metrics) {
                best = i;
            }
        }
        rows[best].latency_optimal[k] = true;
    }
    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.load.reduction > rows[best].load.reduction {
            best = i;
        }
    }
    rows[best].reduction_max = true;
    Ok(rows)
}

/// Whether, for at least one objective, no latency-optimal pair also
/// maximizes the hypervisor load reduction.
///
/// Ties are taken into account: a pair counts as optimal if it attains the
/// extreme value, flagged or not. Without ties this is exactly "the flagged
/// reduction-max row differs from the flagged latency-optimal row".
pub fn tradeoff_observed(scan: &[ScanRow]) -> bool {
    if scan.is_empty() {
        return false;
    }
    let max_reduction = scan
        .iter()
        .map(|r| r.load.reduction)
        .fold(f64::NEG_INFINITY, f64::max);
    ObjectiveKind::ALL.into_iter().any(|objective| {
        let best = scan
            .iter()
            .map(|r| objective.value(&r.metrics))
            .fold(f64::INFINITY, f64::min);
        !scan
            .iter()
            .any(|r| objective.value(&r.metrics) == best && r.load.reduction == max_reduction)
    })
}
