//! Shared fixtures, random instance corpus and independent oracles.
//!
//! The oracles here deliberately avoid the crate's own path and solver code:
//! distances come from Floyd-Warshall and placements from exhaustive
//! enumeration of every placement and every per-demand assignment.

#![allow(dead_code)]

use std::path::PathBuf;

use jhcpp::paths::{all_pairs_shortest, ShortestPathTable};
use jhcpp::placement::{compute_cost_tensor, CostTensor};
use jhcpp::topology::PhysicalTopology;
use jhcpp::vsdn::{ScenarioConfig, VsdnInstance, DEFAULT_MAX_PLACEMENTS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn att_graphml_path() -> PathBuf {
    manifest_dir().join("data/AttMpls.graphml")
}

pub fn att_scenario_path() -> PathBuf {
    manifest_dir().join("data/att_north_america.cfg")
}

pub fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    manifest_dir().join("tests/golden").join(name)
}

/// Compares against a golden file, or rewrites it when `UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, actual: &[u8]) -> Result<(), String> {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read(&path)
        .map_err(|e| format!("cannot read golden {}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("output differs from golden file {}", path.display()))
    }
}

pub fn line4() -> PhysicalTopology {
    PhysicalTopology::from_latencies(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap()
}

/// Dense N^3 relaxation (Floyd-Warshall) over the link list.
pub fn floyd_warshall(topology: &PhysicalTopology) -> Vec<Vec<f64>> {
    let n = topology.num_nodes();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for l in topology.links() {
        let (a, b) = (l.endpoint_a, l.endpoint_b);
        d[a][b] = d[a][b].min(l.latency_ms);
        d[b][a] = d[b][a].min(l.latency_ms);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Random connected graph: a random spanning tree plus extra edges.
///
/// With `dyadic` set, latencies are multiples of 1/4 so sums and scaling by
/// small integers stay exact in floating point.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize, dyadic: bool) -> PhysicalTopology {
    let latency = |rng: &mut ChaCha8Rng| {
        if dyadic {
            rng.gen_range(1..=40) as f64 / 4.0
        } else {
            rng.gen_range(0.05..25.0)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut links = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        links.push((order[i], order[j], latency(rng)));
    }
    for _ in 0..extra {
        if n < 2 {
            break;
        }
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            links.push((a, b, latency(rng)));
        }
    }
    PhysicalTopology::from_latencies(n, &links).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<usize> {
    let k = rng.gen_range(1..=max.min(n));
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut s = all[..k].to_vec();
    s.sort_unstable();
    s
}

/// A small placement instance: ≤ 8 nodes, ≤ 3 tenants, ≤ 3 candidates per
/// side, equal instance limits in {1, 2}.
pub struct Instance {
    pub topology: PhysicalTopology,
    pub vsdns: Vec<VsdnInstance>,
    pub config: ScenarioConfig,
}

impl Instance {
    pub fn table(&self) -> ShortestPathTable {
        all_pairs_shortest(&self.topology).unwrap()
    }

    pub fn costs(&self, table: &ShortestPathTable) -> CostTensor {
        compute_cost_tensor(
            table,
            &self.vsdns,
            &self.config.hypervisor_candidates,
            &self.config.controller_candidates,
        )
        .unwrap()
    }

    pub fn demand_lists(&self) -> Vec<Vec<usize>> {
        self.vsdns.iter().map(|v| v.demand_nodes().to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Instance {
        Instance {
            topology: self.topology.scaled(factor),
            vsdns: self.vsdns.clone(),
            config: self.config.clone(),
        }
    }
}

pub fn config_for(
    controllers: Vec<usize>,
    hypervisors: Vec<usize>,
    max_controllers: usize,
    max_hypervisors: usize,
) -> ScenarioConfig {
    ScenarioConfig {
        num_vsdns: 1,
        demand_size_min: 1,
        demand_size_max: 1,
        seed: 0,
        hypervisor_candidates: hypervisors,
        controller_candidates: controllers,
        max_hypervisors,
        max_controllers,
        c_proc_ms: 1.0,
        h_proc_ms: 1.0,
        propagation_speed_km_per_ms: 200.0,
        default_link_latency_ms: None,
        max_placements: DEFAULT_MAX_PLACEMENTS,
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, dyadic: bool) -> Instance {
    let n = rng.gen_range(1..=8);
    let extra = rng.gen_range(0..=n);
    let topology = random_connected(rng, n, extra, dyadic);
    let num_vsdns = rng.gen_range(1..=3);
    let vsdns = (0..num_vsdns)
        .map(|id| VsdnInstance::new(id, random_subset(rng, n, 2)).unwrap())
        .collect();
    let inst = rng.gen_range(1..=2);
    let mut config = config_for(random_subset(rng, n, 3), random_subset(rng, n, 3), inst, inst);
    config.c_proc_ms = rng.gen_range(0.0..10.0);
    config.h_proc_ms = rng.gen_range(0.0..10.0);
    Instance {
        topology,
        vsdns,
        config,
    }
}

/// Fixed-seed corpus of random instances.
pub fn corpus(seed: u64, count: usize, dyadic: bool) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, dyadic)).collect()
}

/// `[worst, avg, avg_max, max_avg]` of explicit per-demand latencies.
pub fn oracle_metrics(latencies: &[Vec<f64>]) -> [f64; 4] {
    let all: Vec<f64> = latencies.iter().flatten().copied().collect();
    let worst = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = all.iter().sum::<f64>() / all.len() as f64;
    let maxima: Vec<f64> = latencies
        .iter()
        .map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let avg_max = maxima.iter().sum::<f64>() / maxima.len() as f64;
    let max_avg = latencies
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    [worst, avg, avg_max, max_avg]
}

fn masks(len: usize, max_size: usize) -> Vec<u32> {
    (1u32..(1 << len))
        .filter(|m| m.count_ones() as usize <= max_size)
        .collect()
}

/// Exhaustive optimum of each objective, `[worst, avg, avg_max, max_avg]`.
///
/// Enumerates every placement (bitmask subsets) and, for each, every
/// assignment of every demand to every open (hypervisor, controller) pair.
pub fn brute_force_optimum(
    dist: &[Vec<f64>],
    demands: &[Vec<usize>],
    controllers: &[usize],
    hypervisors: &[usize],
    max_controllers: usize,
    max_hypervisors: usize,
) -> [f64; 4] {
    let flat: Vec<(usize, usize)> = demands
        .iter()
        .enumerate()
        .flat_map(|(v, ds)| ds.iter().map(move |&d| (v, d)))
        .collect();
    let mut best = [f64::INFINITY; 4];
    for cm in masks(controllers.len(), max_controllers) {
        for hm in masks(hypervisors.len(), max_hypervisors) {
            let open: Vec<(usize, usize)> = hypervisors
                .iter()
                .enumerate()
                .filter(|(i, _)| hm >> i & 1 == 1)
                .flat_map(|(_, &h)| {
                    controllers
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| cm >> j & 1 == 1)
                        .map(move |(_, &c)| (h, c))
                })
                .collect();
            let mut digits = vec![0usize; flat.len()];
            loop {
                let mut latencies: Vec<Vec<f64>> = demands.iter().map(|_| Vec::new()).collect();
                for (k, &(v, d)) in flat.iter().enumerate() {
                    let (h, c) = open[digits[k]];
                    latencies[v].push(dist[d][h] + dist[h][c]);
                }
                let m = oracle_metrics(&latencies);
                for i in 0..4 {
                    best[i] = best[i].min(m[i]);
                }
                // mixed-radix increment
                let mut k = 0;
                while k < digits.len() {
                    digits[k] += 1;
                    if digits[k] < open.len() {
                        break;
                    }
                    digits[k] = 0;
                    k += 1;
                }
                if k == digits.len() {
                    break;
                }
            }
        }
    }
    best
}
