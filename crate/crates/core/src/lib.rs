//! Joint placement of SDN controllers and network hypervisors for
//! virtualized SDN (vSDN) deployments.
//!
//! The crate covers the whole pipeline:
//!
//! * [`topology`]: Topology Zoo GraphML ingestion and geo-derived link latencies.
//! * [`paths`]: deterministic all-pairs shortest paths.
//! * [`vsdn`]: tenant networks and seeded scenario generation.
//! * [`placement`]: the latency cost tensor and an exact solver for the four
//!   latency objectives (worst case, average, avg-of-max, max-of-avg).
//! * [`rpf`]: reverse path-flow classification of control requests and the
//!   hypervisor load reduction metric.
//! * [`cli`]: batch front end producing CSV/JSON reports.

pub mod cli;
pub mod error;
pub mod paths;
pub mod placement;
pub mod rng;
pub mod rpf;
pub mod topology;
pub mod vsdn;

pub use error::{Error, Result};
