//! Joint controller/hypervisor placement under four latency objectives.
//!
//! A demand `d` of tenant `v` served by hypervisor `h` and controller `c`
//! costs `psi(v, d, h, c) = dist(d, h) + dist(h, c)`. Given the open
//! facilities, every objective is nondecreasing in each demand's latency, so
//! routing each demand through its cheapest open pair is optimal for all of
//! them at once. The solver therefore enumerates placements exactly and
//! evaluates each with that per-demand argmin.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{all_pairs_shortest, ShortestPathTable};
use crate::topology::PhysicalTopology;
use crate::vsdn::{generate_vsdns, ScenarioConfig, VsdnInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Largest latency of any demand.
    #[serde(rename = "worst")]
    WorstCase,
    /// Mean latency over all demands.
    #[serde(rename = "avg")]
    MinAverage,
    /// Mean over tenants of each tenant's worst latency.
    #[serde(rename = "avgmax")]
    AvgMax,
    /// Largest per-tenant mean latency.
    #[serde(rename = "maxavg")]
    MaxAvg,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::WorstCase,
        ObjectiveKind::MinAverage,
        ObjectiveKind::AvgMax,
        ObjectiveKind::MaxAvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::WorstCase => "worst",
            ObjectiveKind::MinAverage => "avg",
            ObjectiveKind::AvgMax => "avgmax",
            ObjectiveKind::MaxAvg => "maxavg",
        }
    }

    /// The metric this objective minimizes.
    pub fn value(self, metrics: &MetricSet) -> f64 {
        match self {
            ObjectiveKind::WorstCase => metrics.worst,
            ObjectiveKind::MinAverage => metrics.avg,
            ObjectiveKind::AvgMax => metrics.avg_max,
            ObjectiveKind::MaxAvg => metrics.max_avg,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObjectiveKind::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "objective",
                    format!("unknown objective `{s}` (expected worst, avg, avgmax or maxavg)"),
                )
            })
    }
}

/// Latency `psi` for every (tenant, demand, hypervisor candidate,
/// controller candidate).
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    hypervisors: Vec<usize>,
    controllers: Vec<usize>,
    vsdn_ids: Vec<usize>,
    /// Offset of each tenant's first demand in `demand_nodes`; one extra
    /// trailing entry.
    offsets: Vec<usize>,
    demand_nodes: Vec<usize>,
    /// Indexed `[demand][hypervisor][controller]`.
    psi: Vec<f64>,
}

fn sorted_unique(values: &[usize]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Builds the cost tensor from shortest-path distances.
pub fn compute_cost_tensor(
    table: &ShortestPathTable,
    vsdns: &[VsdnInstance],
    h_candidates: &[usize],
    c_candidates: &[usize],
) -> Result<CostTensor> {
    let n = table.num_nodes();
    let hypervisors = sorted_unique(h_candidates);
    let controllers = sorted_unique(c_candidates);
    if hypervisors.is_empty() {
        return Err(Error::config("hypervisor_candidates", "must not be empty"));
    }
    if controllers.is_empty() {
        return Err(Error::config("controller_candidates", "must not be empty"));
    }
    for (key, list) in [
        ("hypervisor_candidates", &hypervisors),
        ("controller_candidates", &controllers),
    ] {
        if let Some(bad) = list.iter().find(|&&i| i >= n) {
            return Err(Error::config(key, format!("node index {bad} outside 0..{n}")));
        }
    }

    let mut offsets = Vec::with_capacity(vsdns.len() + 1);
    let mut demand_nodes = Vec::new();
    for v in vsdns {
        offsets.push(demand_nodes.len());
        for &d in v.demand_nodes() {
            if d >= n {
                return Err(Error::config(
                    "demand_nodes",
                    format!("vSDN {} demand node {d} outside 0..{n}", v.id),
                ));
            }
            demand_nodes.push(d);
        }
    }
    offsets.push(demand_nodes.len());

    let mut psi = Vec::with_capacity(demand_nodes.len() * hypervisors.len() * controllers.len());
    for &d in &demand_nodes {
        for &h in &hypervisors {
            let to_hypervisor = table.dist(d, h);
            for &c in &controllers {
                psi.push(to_hypervisor + table.dist(h, c));
            }
        }
    }

    Ok(CostTensor {
        hypervisors,
        controllers,
        vsdn_ids: vsdns.iter().map(|v| v.id).collect(),
        offsets,
        demand_nodes,
        psi,
    })
}

impl CostTensor {
    pub fn hypervisor_candidates(&self) -> &[usize] {
        &self.hypervisors
    }

    pub fn controller_candidates(&self) -> &[usize] {
        &self.controllers
    }

    fn h_pos(&self, h: usize) -> Option<usize> {
        self.hypervisors.binary_search(&h).ok()
    }

    fn c_pos(&self, c: usize) -> Option<usize> {
        self.controllers.binary_search(&c).ok()
    }

    fn at(&self, demand: usize, hi: usize, ci: usize) -> f64 {
        self.psi[(demand * self.hypervisors.len() + hi) * self.controllers.len() + ci]
    }

    /// Looks up `psi(vsdn, demand, h, c)` by tenant id and node indices.
    pub fn psi(&self, vsdn_id: usize, demand_node: usize, h: usize, c: usize) -> Option<f64> {
        let v = self.vsdn_ids.iter().position(|&id| id == vsdn_id)?;
        let range = self.offsets[v]..self.offsets[v + 1];
        let d = range.clone().find(|&i| self.demand_nodes[i] == demand_node)?;
        Some(self.at(d, self.h_pos(h)?, self.c_pos(c)?))
    }

    fn num_vsdns(&self) -> usize {
        self.vsdn_ids.len()
    }

    fn demands_of(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    fn assert_matches(&self, vsdns: &[VsdnInstance]) {
        assert_eq!(
            self.vsdn_ids.len(),
            vsdns.len(),
            "cost tensor built for a different tenant set"
        );
        debug_assert!(vsdns.iter().enumerate().all(|(i, v)| {
            v.id == self.vsdn_ids[i]
                && v.demand_nodes() == &self.demand_nodes[self.demands_of(i)]
        }));
    }

    /// Same tensor with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CostTensor {
            psi: self.psi.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }
}

/// Open controllers and hypervisors, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub controllers: Vec<usize>,
    pub hypervisors: Vec<usize>,
}

impl Placement {
    pub fn new(mut controllers: Vec<usize>, mut hypervisors: Vec<usize>) -> Self {
        controllers.sort_unstable();
        controllers.dedup();
        hypervisors.sort_unstable();
        hypervisors.dedup();
        Placement {
            controllers,
            hypervisors,
        }
    }

    pub fn single(controller: usize, hypervisor: usize) -> Self {
        Placement {
            controllers: vec![controller],
            hypervisors: vec![hypervisor],
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{:?} H{:?}", self.controllers, self.hypervisors)
    }
}

/// The `(hypervisor, controller)` pair serving each demand, with its latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    vsdn_ids: Vec<usize>,
    /// Per tenant, per demand (in demand order): `(h, c, latency)`.
    choices: Vec<Vec<(usize, usize, f64)>>,
}

impl Assignment {
    /// `(h, c)` serving `demand_node` of tenant `vsdn_id`.
    pub fn choice(&self, vsdn_id: usize, demand_node: usize, vsdns: &[VsdnInstance]) -> Option<(usize, usize)> {
        let v = self.vsdn_ids.iter().position(|&id| id == vsdn_id)?;
        let d = vsdns[v].demand_nodes().iter().position(|&x| x == demand_node)?;
        let (h, c, _) = self.choices[v][d];
        Some((h, c))
    }

    /// Per tenant, per demand: `(h, c, latency)`.
    pub fn choices(&self) -> &[Vec<(usize, usize, f64)>] {
        &self.choices
    }

    /// Builds an assignment from explicit `(h, c)` choices, looking latencies
    /// up in `costs`. Returns `None` if a pair is not covered by the tensor or
    /// the shape does not match.
    pub fn from_choices(costs: &CostTensor, choices: &[Vec<(usize, usize)>]) -> Option<Self> {
        if choices.len() != costs.num_vsdns() {
            return None;
        }
        let mut out = Vec::with_capacity(choices.len());
        for (v, per_vsdn) in choices.iter().enumerate() {
            let range = costs.demands_of(v);
            if per_vsdn.len() != range.len() {
                return None;
            }
            let mut row = Vec::with_capacity(per_vsdn.len());
            for (d, &(h, c)) in range.zip(per_vsdn) {
                row.push((h, c, costs.at(d, costs.h_pos(h)?, costs.c_pos(c)?)));
            }
            out.push(row);
        }
        Some(Assignment {
            vsdn_ids: costs.vsdn_ids.clone(),
            choices: out,
        })
    }
}

/// Routes every demand through its cheapest open `(h, c)` pair; ties go to
/// the lexicographically smallest `(h, c)`.
///
/// Panics if the placement opens a node the tensor has no entries for.
pub fn optimal_assignment(
    placement: &Placement,
    costs: &CostTensor,
    vsdns: &[VsdnInstance],
) -> Assignment {
    costs.assert_matches(vsdns);
    assert!(
        !placement.controllers.is_empty() && !placement.hypervisors.is_empty(),
        "placement must open at least one controller and one hypervisor"
    );
    let open: Vec<(usize, usize, usize, usize)> = placement
        .hypervisors
        .iter()
        .flat_map(|&h| {
            let hi = costs
                .h_pos(h)
                .unwrap_or_else(|| panic!("hypervisor {h} is not a tensor candidate"));
            placement.controllers.iter().map(move |&c| (h, hi, c))
        })
        .map(|(h, hi, c)| {
            let ci = costs
                .c_pos(c)
                .unwrap_or_else(|| panic!("controller {c} is not a tensor candidate"));
            (h, hi, c, ci)
        })
        .collect();

    let choices = (0..costs.num_vsdns())
        .map(|v| {
            costs
                .demands_of(v)
                .map(|d| {
                    let mut best = (open[0].0, open[0].2, costs.at(d, open[0].1, open[0].3));
                    for &(h, hi, c, ci) in &open[1..] {
                        let latency = costs.at(d, hi, ci);
                        if latency < best.2 {
                            best = (h, c, latency);
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();

    Assignment {
        vsdn_ids: costs.vsdn_ids.clone(),
        choices,
    }
}

/// The four latency metrics of an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    /// Largest latency over all demands.
    pub worst: f64,
    /// `(vsdn id, worst latency of that tenant)` in tenant order.
    pub per_vsdn_worst: Vec<(usize, f64)>,
    /// Mean over all demands.
    pub avg: f64,
    /// Mean over tenants of their worst latency.
    pub avg_max: f64,
    /// Largest per-tenant mean.
    pub max_avg: f64,
}

/// Computes all four metrics. Latencies are re-read from `costs`.
pub fn evaluate_metrics(
    assignment: &Assignment,
    costs: &CostTensor,
    vsdns: &[VsdnInstance],
) -> MetricSet {
    costs.assert_matches(vsdns);
    let mut worst = f64::NEG_INFINITY;
    let mut total = 0.0;
    let mut count = 0usize;
    let mut sum_of_worst = 0.0;
    let mut max_avg = f64::NEG_INFINITY;
    let mut per_vsdn_worst = Vec::with_capacity(vsdns.len());

    for (v, row) in assignment.choices.iter().enumerate() {
        let mut vsdn_worst = f64::NEG_INFINITY;
        let mut vsdn_sum = 0.0;
        for (d, &(h, c, _)) in costs.demands_of(v).zip(row) {
            let latency = costs.at(
                d,
                costs.h_pos(h).expect("assigned hypervisor is a candidate"),
                costs.c_pos(c).expect("assigned controller is a candidate"),
            );
            vsdn_worst = vsdn_worst.max(latency);
            vsdn_sum += latency;
        }
        per_vsdn_worst.push((assignment.vsdn_ids[v], vsdn_worst));
        worst = worst.max(vsdn_worst);
        total += vsdn_sum;
        count += row.len();
        sum_of_worst += vsdn_worst;
        max_avg = max_avg.max(vsdn_sum / row.len() as f64);
    }

    MetricSet {
        worst,
        per_vsdn_worst,
        avg: total / count as f64,
        avg_max: sum_of_worst / vsdns.len() as f64,
        max_avg,
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn subset_count(n: usize, max_size: usize) -> u128 {
    (1..=max_size.min(n)).map(|k| binomial(n, k)).sum()
}

/// Non-empty subsets of `items` with at most `max_size` elements, in
/// lexicographic order of their sorted element lists.
fn bounded_subsets(items: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    fn extend(
        items: &[usize],
        start: usize,
        max_size: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for i in start..items.len() {
            prefix.push(items[i]);
            out.push(prefix.clone());
            if prefix.len() < max_size {
                extend(items, i + 1, max_size, prefix, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(items, 0, max_size, &mut Vec::new(), &mut out);
    out
}

/// Number of placements the config's search space contains.
pub fn search_space_size(config: &ScenarioConfig) -> u128 {
    subset_count(config.controller_candidates.len(), config.max_controllers)
        * subset_count(config.hypervisor_candidates.len(), config.max_hypervisors)
}

/// Every feasible placement: controller subsets (major) crossed with
/// hypervisor subsets (minor), each side in lexicographic order.
pub fn enumerate_placements(config: &ScenarioConfig) -> Result<Vec<Placement>> {
    let size = search_space_size(config);
    if size > config.max_placements as u128 {
        return Err(Error::Capacity {
            size,
            cap: config.max_placements,
        });
    }
    let controllers = bounded_subsets(&sorted_unique(&config.controller_candidates), config.max_controllers);
    let hypervisors = bounded_subsets(&sorted_unique(&config.hypervisor_candidates), config.max_hypervisors);
    Ok(controllers
        .iter()
        .flat_map(|c| {
            hypervisors.iter().map(move |h| Placement {
                controllers: c.clone(),
                hypervisors: h.clone(),
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub placement: Placement,
    pub assignment: Assignment,
    pub objective: ObjectiveKind,
    pub objective_value: f64,
    pub metrics: MetricSet,
}

fn evaluate_all(
    placements: &[Placement],
    costs: &CostTensor,
    vsdns: &[VsdnInstance],
) -> Vec<MetricSet> {
    placements
        .par_iter()
        .map(|p| evaluate_metrics(&optimal_assignment(p, costs, vsdns), costs, vsdns))
        .collect()
}

/// First index attaining the minimum; enumeration order breaks ties.
fn first_argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.expect("non-empty search space").0
}

/// Exact optimum of one objective over the config's search space.
pub fn solve(
    objective: ObjectiveKind,
    config: &ScenarioConfig,
    costs: &CostTensor,
    vsdns: &[VsdnInstance],
) -> Result<PlacementResult> {
    Ok(solve_many(&[objective], config, costs, vsdns)?.remove(0))
}

/// Solves several objectives sharing a single pass over the placements.
pub fn solve_many(
    objectives: &[ObjectiveKind],
    config: &ScenarioConfig,
    costs: &CostTensor,
    vsdns: &[VsdnInstance],
) -> Result<Vec<PlacementResult>> {
    let placements = enumerate_placements(config)?;
    let metrics = evaluate_all(&placements, costs, vsdns);
    Ok(objectives
        .iter()
        .map(|&objective| {
            let best = first_argmin(metrics.iter().map(|m| objective.value(m)));
            let placement = placements[best].clone();
            let assignment = optimal_assignment(&placement, costs, vsdns);
            PlacementResult {
                objective_value: objective.value(&metrics[best]),
                metrics: metrics[best].clone(),
                placement,
                assignment,
                objective,
            }
        })
        .collect())
}

/// How often each placement won, per objective, across regenerated scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub iterations: usize,
    /// One entry per objective in [`ObjectiveKind::ALL`] order; winners are
    /// sorted by descending count, then by enumeration order.
    pub wins: Vec<(ObjectiveKind, Vec<(Placement, usize)>)>,
}

/// Regenerates the scenario `iterations` times (seed = base seed + i,
/// wrapping), solves every objective each time and tallies the winners.
pub fn converge_candidates(
    base_config: &ScenarioConfig,
    topology: &PhysicalTopology,
    iterations: usize,
) -> Result<ConvergenceTable> {
    if iterations < 1 {
        return Err(Error::config("iterations", "must be at least 1"));
    }
    base_config.validate_for(topology)?;
    // fail fast before any work
    enumerate_placements(base_config)?;
    let table = all_pairs_shortest(topology)?;

    let winners: Vec<Vec<Placement>> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            let config = base_config.with_seed(base_config.seed.wrapping_add(i as u64));
            let vsdns = generate_vsdns(&config, topology)?;
            let costs = compute_cost_tensor(
                &table,
                &vsdns,
                &config.hypervisor_candidates,
                &config.controller_candidates,
            )?;
            Ok(solve_many(&ObjectiveKind::ALL, &config, &costs, &vsdns)?
                .into_iter()
                .map(|r| r.placement)
                .collect())
        })
        .collect::<Result<_>>()?;

    let wins = ObjectiveKind::ALL
        .iter()
        .enumerate()
        .map(|(k, &objective)| {
            let mut counts: BTreeMap<Placement, usize> = BTreeMap::new();
            for w in &winners {
                *counts.entry(w[k].clone()).or_default() += 1;
            }
            let mut sorted: Vec<(Placement, usize)> = counts.into_iter().collect();
            sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            (objective, sorted)
        })
        .collect();

    Ok(ConvergenceTable { iterations, wins })
}
