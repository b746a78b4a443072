//! All-pairs shortest paths with a deterministic shortest-path tree per source.
//!
//! Each source runs Dijkstra, popping vertices by `(distance, index)`. When a
//! relaxation reaches a vertex at exactly its current distance, the new
//! predecessor wins only if its index is strictly smaller.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::topology::PhysicalTopology;

const NO_PRED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTable {
    n: usize,
    dist: Vec<f64>,
    pred: Vec<usize>,
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn single_source(topology: &PhysicalTopology, source: usize) -> (Vec<f64>, Vec<usize>) {
    let n = topology.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier {
        dist: 0.0,
        node: source,
    });

    while let Some(Frontier { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in topology.neighbors(u) {
            if done[v] {
                continue;
            }
            let candidate = d + w;
            if candidate < dist[v] {
                dist[v] = candidate;
                pred[v] = u;
                heap.push(Frontier {
                    dist: candidate,
                    node: v,
                });
            } else if candidate == dist[v] && u < pred[v] {
                pred[v] = u;
            }
        }
    }
    (dist, pred)
}

/// Computes the table, one Dijkstra run per source on the current rayon pool.
///
/// The result does not depend on the number of worker threads.
pub fn all_pairs_shortest(topology: &PhysicalTopology) -> Result<ShortestPathTable> {
    topology.ensure_connected()?;
    let n = topology.num_nodes();
    let rows: Vec<(Vec<f64>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|s| single_source(topology, s))
        .collect();
    let mut dist = Vec::with_capacity(n * n);
    let mut pred = Vec::with_capacity(n * n);
    for (d, p) in rows {
        dist.extend(d);
        pred.extend(p);
    }
    Ok(ShortestPathTable { n, dist, pred })
}

impl ShortestPathTable {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn dist(&self, s: usize, t: usize) -> f64 {
        self.dist[s * self.n + t]
    }

    /// Predecessor of `t` on the shortest path from `s`; `None` on the
    /// diagonal.
    pub fn pred(&self, s: usize, t: usize) -> Option<usize> {
        match self.pred[s * self.n + t] {
            NO_PRED => None,
            p => Some(p),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::Connectivity(format!(
                "node index {i} outside 0..{}",
                self.n
            )));
        }
        Ok(())
    }

    /// Node sequence of the shortest path from `s` to `t`, both included.
    pub fn path_nodes(&self, s: usize, t: usize) -> Result<Vec<usize>> {
        self.check_index(s)?;
        self.check_index(t)?;
        if !self.dist(s, t).is_finite() {
            return Err(Error::Connectivity(format!("node {t} unreachable from {s}")));
        }
        let mut path = vec![t];
        let mut cur = t;
        while cur != s {
            cur = self
                .pred(s, cur)
                .expect("reachable non-source node has a predecessor");
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Whether `x` lies on the shortest path from `s` to `t` (endpoints count).
    pub fn passes_through(&self, s: usize, t: usize, x: usize) -> Result<bool> {
        self.check_index(x)?;
        if x == s || x == t {
            self.path_nodes(s, t)?;
            return Ok(true);
        }
        Ok(self.path_nodes(s, t)?.contains(&x))
    }

    /// Distance matrix as CSV: a header row of node indices, then one row
    /// per source prefixed with its index.
    pub fn write_distance_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["source".to_string()];
        header.extend((0..self.n).map(|i| i.to_string()));
        writer.write_record(&header)?;
        for s in 0..self.n {
            let mut row = vec![s.to_string()];
            row.extend((0..self.n).map(|t| self.dist(s, t).to_string()));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}
