//! Tenant virtual networks and scenario configuration.
//!
//! Scenario files are flat `key = value` lines. `#` starts a comment, lists
//! are comma-separated. Required keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `num_vsdns` | number of tenant networks |
//! | `demand_size_min`, `demand_size_max` | bounds on demand nodes per tenant |
//! | `seed` | generator seed (u64) |
//! | `hypervisor_candidates` | candidate hypervisor node indices |
//! | `controller_candidates` | candidate controller node indices |
//! | `max_hypervisors`, `max_controllers` | instance limits |
//! | `c_proc_ms`, `h_proc_ms` | controller / hypervisor processing times |
//!
//! Optional keys: `propagation_speed_km_per_ms` (default 200),
//! `default_link_latency_ms` (unset), `max_placements` (default 1000000).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::topology::{GeoOptions, PhysicalTopology, DEFAULT_PROPAGATION_SPEED_KM_PER_MS};

pub const DEFAULT_MAX_PLACEMENTS: u64 = 1_000_000;

/// A tenant network and the physical nodes that originate its control
/// requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VsdnInstance {
    pub id: usize,
    demand_nodes: Vec<usize>,
}

impl VsdnInstance {
    /// Demand nodes are stored sorted; duplicates and empty sets are rejected.
    pub fn new(id: usize, demand_nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut nodes: Vec<usize> = demand_nodes.into_iter().collect();
        nodes.sort_unstable();
        let before = nodes.len();
        nodes.dedup();
        if nodes.len() != before {
            return Err(Error::config(
                "demand_nodes",
                format!("vSDN {id} lists a demand node twice"),
            ));
        }
        if nodes.is_empty() {
            return Err(Error::config(
                "demand_nodes",
                format!("vSDN {id} has no demand nodes"),
            ));
        }
        Ok(VsdnInstance {
            id,
            demand_nodes: nodes,
        })
    }

    pub fn demand_nodes(&self) -> &[usize] {
        &self.demand_nodes
    }
}

/// Total number of demands across all tenants.
pub fn total_demands(vsdns: &[VsdnInstance]) -> usize {
    vsdns.iter().map(|v| v.demand_nodes.len()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_vsdns: usize,
    pub demand_size_min: usize,
    pub demand_size_max: usize,
    pub seed: u64,
    /// Sorted, duplicate-free.
    pub hypervisor_candidates: Vec<usize>,
    /// Sorted, duplicate-free.
    pub controller_candidates: Vec<usize>,
    pub max_hypervisors: usize,
    pub max_controllers: usize,
    pub c_proc_ms: f64,
    pub h_proc_ms: f64,
    pub propagation_speed_km_per_ms: f64,
    pub default_link_latency_ms: Option<f64>,
    pub max_placements: u64,
}

const REQUIRED_KEYS: [&str; 10] = [
    "num_vsdns",
    "demand_size_min",
    "demand_size_max",
    "seed",
    "hypervisor_candidates",
    "controller_candidates",
    "max_hypervisors",
    "max_controllers",
    "c_proc_ms",
    "h_proc_ms",
];

const OPTIONAL_KEYS: [&str; 3] = [
    "propagation_speed_km_per_ms",
    "default_link_latency_ms",
    "max_placements",
];

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("expected a non-negative integer, got `{value}`")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::config(key, format!("expected a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::config(key, "value must be finite"));
    }
    Ok(v)
}

fn parse_candidates(key: &str, value: &str) -> Result<Vec<usize>> {
    let mut set = BTreeSet::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !set.insert(parse_usize(key, item)?) {
            return Err(Error::config(key, format!("duplicate candidate {item}")));
        }
    }
    if set.is_empty() {
        return Err(Error::config(key, "candidate set must not be empty"));
    }
    Ok(set.into_iter().collect())
}

/// Parses and validates a scenario file.
///
/// Checks that need the topology (index ranges, demand size versus node
/// count) live in [`ScenarioConfig::validate_for`].
pub fn load_scenario(file_text: &str) -> Result<ScenarioConfig> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in file_text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim();
        if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        if entries
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::config(key, "key given more than once"));
        }
    }
    for key in REQUIRED_KEYS {
        if !entries.contains_key(key) {
            return Err(Error::config(key, "missing required key"));
        }
    }
    let get = |key: &str| entries[key].as_str();

    let seed_text = get("seed");
    let config = ScenarioConfig {
        num_vsdns: parse_usize("num_vsdns", get("num_vsdns"))?,
        demand_size_min: parse_usize("demand_size_min", get("demand_size_min"))?,
        demand_size_max: parse_usize("demand_size_max", get("demand_size_max"))?,
        seed: seed_text.parse().map_err(|_| {
            Error::config("seed", format!("expected a 64-bit unsigned integer, got `{seed_text}`"))
        })?,
        hypervisor_candidates: parse_candidates(
            "hypervisor_candidates",
            get("hypervisor_candidates"),
        )?,
        controller_candidates: parse_candidates(
            "controller_candidates",
            get("controller_candidates"),
        )?,
        max_hypervisors: parse_usize("max_hypervisors", get("max_hypervisors"))?,
        max_controllers: parse_usize("max_controllers", get("max_controllers"))?,
        c_proc_ms: parse_f64("c_proc_ms", get("c_proc_ms"))?,
        h_proc_ms: parse_f64("h_proc_ms", get("h_proc_ms"))?,
        propagation_speed_km_per_ms: match entries.get("propagation_speed_km_per_ms") {
            Some(v) => parse_f64("propagation_speed_km_per_ms", v)?,
            None => DEFAULT_PROPAGATION_SPEED_KM_PER_MS,
        },
        default_link_latency_ms: entries
            .get("default_link_latency_ms")
            .map(|v| parse_f64("default_link_latency_ms", v))
            .transpose()?,
        max_placements: match entries.get("max_placements") {
            Some(v) => v.parse().map_err(|_| {
                Error::config("max_placements", format!("expected an integer, got `{v}`"))
            })?,
            None => DEFAULT_MAX_PLACEMENTS,
        },
    };
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    /// Topology-independent checks.
    pub fn validate(&self) -> Result<()> {
        if self.num_vsdns < 1 {
            return Err(Error::config("num_vsdns", "must be at least 1"));
        }
        if self.demand_size_min < 1 {
            return Err(Error::config("demand_size_min", "must be at least 1"));
        }
        if self.demand_size_max < self.demand_size_min {
            return Err(Error::config(
                "demand_size_max",
                "must not be smaller than demand_size_min",
            ));
        }
        if self.hypervisor_candidates.is_empty() {
            return Err(Error::config("hypervisor_candidates", "must not be empty"));
        }
        if self.controller_candidates.is_empty() {
            return Err(Error::config("controller_candidates", "must not be empty"));
        }
        if self.max_hypervisors < 1 {
            return Err(Error::config("max_hypervisors", "must be at least 1"));
        }
        if self.max_controllers < 1 {
            return Err(Error::config("max_controllers", "must be at least 1"));
        }
        if self.c_proc_ms < 0.0 {
            return Err(Error::config("c_proc_ms", "must be non-negative"));
        }
        if self.h_proc_ms < 0.0 {
            return Err(Error::config("h_proc_ms", "must be non-negative"));
        }
        if self.propagation_speed_km_per_ms.is_nan() || self.propagation_speed_km_per_ms <= 0.0 {
            return Err(Error::config("propagation_speed_km_per_ms", "must be positive"));
        }
        if matches!(self.default_link_latency_ms, Some(v) if v < 0.0) {
            return Err(Error::config("default_link_latency_ms", "must be non-negative"));
        }
        if self.max_placements < 1 {
            return Err(Error::config("max_placements", "must be at least 1"));
        }
        Ok(())
    }

    /// Checks that every index fits the topology and demand sets can be drawn.
    pub fn validate_for(&self, topology: &PhysicalTopology) -> Result<()> {
        self.validate()?;
        let n = topology.num_nodes();
        if self.demand_size_max > n {
            return Err(Error::config(
                "demand_size_max",
                format!("{} exceeds the topology's {n} nodes", self.demand_size_max),
            ));
        }
        for (key, list) in [
            ("hypervisor_candidates", &self.hypervisor_candidates),
            ("controller_candidates", &self.controller_candidates),
        ] {
            if let Some(bad) = list.iter().find(|&&i| i >= n) {
                return Err(Error::config(
                    key,
                    format!("node index {bad} outside 0..{n}"),
                ));
            }
        }
        Ok(())
    }

    pub fn geo_options(&self) -> GeoOptions {
        GeoOptions {
            propagation_speed_km_per_ms: self.propagation_speed_km_per_ms,
            default_link_latency_ms: self.default_link_latency_ms,
        }
    }

    /// Copy of this config with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Draws `num_vsdns` tenant networks from the config's seed.
///
/// Tenants are generated in id order. For each, the demand set size is drawn
/// uniformly from `demand_size_min..=demand_size_max`, then that many
/// distinct nodes are sampled uniformly (see [`SplitMix64`]).
pub fn generate_vsdns(
    config: &ScenarioConfig,
    topology: &PhysicalTopology,
) -> Result<Vec<VsdnInstance>> {
    config.validate_for(topology)?;
    let n = topology.num_nodes();
    let mut rng = SplitMix64::new(config.seed);
    (0..config.num_vsdns)
        .map(|id| {
            let size = rng.between(config.demand_size_min, config.demand_size_max);
            VsdnInstance::new(id, rng.sample_without_replacement(n, size))
        })
        .collect()
}
