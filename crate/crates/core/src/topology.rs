//! Physical topology: Topology Zoo GraphML ingestion and latency weighting.
//!
//! Nodes get dense indices in document order. Link latency is the
//! great-circle distance between the endpoints divided by the propagation
//! speed (200 km/ms by default, i.e. light in fiber).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Default signal propagation speed in km per millisecond (2e5 km/s).
pub const DEFAULT_PROPAGATION_SPEED_KM_PER_MS: f64 = 200.0;

/// Great-circle distance between two points given in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let half_dphi = ((lat2 - lat1).to_radians() / 2.0).sin();
    let half_dlambda = ((lon2 - lon1).to_radians() / 2.0).sin();
    let a = half_dphi * half_dphi + phi1.cos() * phi2.cos() * half_dlambda * half_dlambda;
    2.0 * EARTH_RADIUS_KM * a.sqrt().atan2((1.0 - a).max(0.0).sqrt())
}

/// Options controlling how link latencies are derived from geography.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoOptions {
    pub propagation_speed_km_per_ms: f64,
    /// Latency assigned to links touching a node without coordinates.
    /// `None` makes missing coordinates a hard error.
    pub default_link_latency_ms: Option<f64>,
}

impl Default for GeoOptions {
    fn default() -> Self {
        GeoOptions {
            propagation_speed_km_per_ms: DEFAULT_PROPAGATION_SPEED_KM_PER_MS,
            default_link_latency_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalNode {
    pub index: usize,
    /// Node identifier as written in the source document.
    pub source_id: String,
    pub label: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

impl PhysicalNode {
    fn coordinates(&self) -> Option<(f64, f64)> {
        Some((self.latitude?, self.longitude?))
    }

    fn display_name(&self) -> String {
        if self.label.is_empty() || self.label == self.source_id {
            self.source_id.clone()
        } else {
            format!("{} ({})", self.source_id, self.label)
        }
    }
}

/// Propagation latency between two nodes at the default fiber speed.
pub fn link_latency(a: &PhysicalNode, b: &PhysicalNode) -> Result<f64> {
    link_latency_with_speed(a, b, DEFAULT_PROPAGATION_SPEED_KM_PER_MS)
}

pub fn link_latency_with_speed(
    a: &PhysicalNode,
    b: &PhysicalNode,
    speed_km_per_ms: f64,
) -> Result<f64> {
    let missing = |n: &PhysicalNode| Error::Geo {
        node: n.display_name(),
        reason: "missing Latitude/Longitude".into(),
    };
    let (lat1, lon1) = a.coordinates().ok_or_else(|| missing(a))?;
    let (lat2, lon2) = b.coordinates().ok_or_else(|| missing(b))?;
    Ok(haversine_km(lat1, lon1, lat2, lon2) / speed_km_per_ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalLink {
    pub endpoint_a: usize,
    pub endpoint_b: usize,
    pub latency_ms: f64,
}

/// Undirected, latency-weighted physical graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTopology {
    nodes: Vec<PhysicalNode>,
    links: Vec<PhysicalLink>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PhysicalTopology {
    /// Builds a topology from nodes and links.
    ///
    /// Link endpoints are normalised so that `endpoint_a < endpoint_b`;
    /// parallel links collapse onto the first occurrence, keeping the
    /// smallest latency. Connectivity is not required here, see
    /// [`PhysicalTopology::ensure_connected`].
    pub fn new(nodes: Vec<PhysicalNode>, links: Vec<PhysicalLink>) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            if node.index != i {
                return Err(Error::Parse(format!(
                    "node indices must be consecutive from 0; found {} at position {i}",
                    node.index
                )));
            }
            if let Some(lat) = node.latitude {
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(Error::Geo {
                        node: node.display_name(),
                        reason: format!("latitude {lat} outside [-90, 90]"),
                    });
                }
            }
            if let Some(lon) = node.longitude {
                if !(-180.0..=180.0).contains(&lon) {
                    return Err(Error::Geo {
                        node: node.display_name(),
                        reason: format!("longitude {lon} outside [-180, 180]"),
                    });
                }
            }
        }

        let n = nodes.len();
        let mut dedup: Vec<PhysicalLink> = Vec::with_capacity(links.len());
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for link in links {
            let (a, b) = (link.endpoint_a, link.endpoint_b);
            if a >= n || b >= n {
                return Err(Error::Parse(format!(
                    "link ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::Parse(format!(
                    "self-loop on node {}",
                    nodes[a].display_name()
                )));
            }
            if !link.latency_ms.is_finite() || link.latency_ms < 0.0 {
                return Err(Error::Parse(format!(
                    "link ({a}, {b}) has invalid latency {}",
                    link.latency_ms
                )));
            }
            let key = (a.min(b), a.max(b));
            match seen.get(&key) {
                Some(&pos) => {
                    let kept = &mut dedup[pos];
                    kept.latency_ms = kept.latency_ms.min(link.latency_ms);
                }
                None => {
                    seen.insert(key, dedup.len());
                    dedup.push(PhysicalLink {
                        endpoint_a: key.0,
                        endpoint_b: key.1,
                        latency_ms: link.latency_ms,
                    });
                }
            }
        }

        let mut adjacency = vec![Vec::new(); n];
        for link in &dedup {
            adjacency[link.endpoint_a].push((link.endpoint_b, link.latency_ms));
            adjacency[link.endpoint_b].push((link.endpoint_a, link.latency_ms));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(neighbor, _)| neighbor);
        }

        Ok(PhysicalTopology {
            nodes,
            links: dedup,
            adjacency,
        })
    }

    /// Convenience constructor for coordinate-free graphs with explicit
    /// latencies. Node `i` gets source id and label `i`.
    pub fn from_latencies(num_nodes: usize, links: &[(usize, usize, f64)]) -> Result<Self> {
        let nodes = (0..num_nodes)
            .map(|i| PhysicalNode {
                index: i,
                source_id: i.to_string(),
                label: i.to_string(),
                latitude: None,
                longitude: None,
            })
            .collect();
        let links = links
            .iter()
            .map(|&(a, b, latency_ms)| PhysicalLink {
                endpoint_a: a,
                endpoint_b: b,
                latency_ms,
            })
            .collect();
        Self::new(nodes, links)
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[PhysicalLink] {
        &self.links
    }

    /// Neighbors of `node` with link latency, sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.num_nodes();
        let mut component = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            component[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if component[v] == usize::MAX {
                        component[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn ensure_connected(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Connectivity("topology has no nodes".into()));
        }
        let components = self.components();
        if components.len() == 1 {
            return Ok(());
        }
        let listing = components
            .iter()
            .map(|c| {
                let names: Vec<_> = c.iter().map(|&i| self.nodes[i].display_name()).collect();
                format!("{{{}}}", names.join(", "))
            })
            .collect::<Vec<_>>()
            .join(" ");
        Err(Error::Connectivity(format!(
            "graph has {} components: {listing}",
            components.len()
        )))
    }

    /// Same graph with every link latency multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let links = self
            .links
            .iter()
            .map(|l| PhysicalLink {
                latency_ms: l.latency_ms * factor,
                ..*l
            })
            .collect();
        Self::new(self.nodes.clone(), links).expect("scaling preserves validity")
    }
}

/// Parses a GraphML document with the default [`GeoOptions`].
pub fn parse_graphml(document_text: &str) -> Result<PhysicalTopology> {
    parse_graphml_with(document_text, &GeoOptions::default())
}

/// Parses a Topology Zoo style GraphML document.
///
/// Node attributes are looked up through `<key>` declarations whose
/// `attr.name` is `Latitude`, `Longitude` or `label`. The resulting graph
/// must be connected.
pub fn parse_graphml_with(document_text: &str, options: &GeoOptions) -> Result<PhysicalTopology> {
    let doc = roxmltree::Document::parse(document_text)
        .map_err(|e| Error::Parse(format!("malformed XML: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(Error::Parse(format!(
            "expected <graphml> root element, found <{}>",
            root.tag_name().name()
        )));
    }

    let mut lat_key = None;
    let mut lon_key = None;
    let mut label_key = None;
    for key in root.children().filter(|n| n.has_tag_name_local("key")) {
        let applies_to_nodes = matches!(key.attribute("for"), Some("node") | Some("all") | None);
        if !applies_to_nodes {
            continue;
        }
        let (Some(id), Some(name)) = (key.attribute("id"), key.attribute("attr.name")) else {
            continue;
        };
        match name {
            "Latitude" => lat_key = Some(id),
            "Longitude" => lon_key = Some(id),
            "label" => label_key = Some(id),
            _ => {}
        }
    }

    let graph = root
        .children()
        .find(|n| n.has_tag_name_local("graph"))
        .ok_or_else(|| Error::Parse("document has no <graph> element".into()))?;
    if graph.attribute("edgedefault") == Some("directed") {
        return Err(Error::Parse(
            "directed graphs are not supported; expected edgedefault=\"undirected\"".into(),
        ));
    }

    let mut nodes = Vec::new();
    let mut index_of: BTreeMap<&str, usize> = BTreeMap::new();
    for node in graph.children().filter(|n| n.has_tag_name_local("node")) {
        let id = node
            .attribute("id")
            .ok_or_else(|| Error::Parse("<node> without id attribute".into()))?;
        if index_of.contains_key(id) {
            return Err(Error::Parse(format!("duplicate node id `{id}`")));
        }
        let data = |key: Option<&str>| -> Option<&str> {
            let key = key?;
            node.children()
                .find(|d| d.has_tag_name_local("data") && d.attribute("key") == Some(key))
                .and_then(|d| d.text())
                .map(str::trim)
        };
        let coord = |key: Option<&str>, what: &str| -> Result<Option<f64>> {
            match data(key) {
                None | Some("") => Ok(None),
                Some(text) => text.parse::<f64>().map(Some).map_err(|_| Error::Geo {
                    node: id.to_string(),
                    reason: format!("unparsable {what} `{text}`"),
                }),
            }
        };
        let latitude = coord(lat_key, "Latitude")?;
        let longitude = coord(lon_key, "Longitude")?;
        let label = data(label_key).unwrap_or(id).to_string();
        index_of.insert(id, nodes.len());
        nodes.push(PhysicalNode {
            index: nodes.len(),
            source_id: id.to_string(),
            label,
            latitude,
            longitude,
        });
    }

    if options.default_link_latency_ms.is_none() {
        if let Some(node) = nodes.iter().find(|n| n.coordinates().is_none()) {
            return Err(Error::Geo {
                node: node.display_name(),
                reason: "missing Latitude/Longitude and no default_link_latency_ms configured"
                    .into(),
            });
        }
    }

    let mut links = Vec::new();
    for edge in graph.children().filter(|n| n.has_tag_name_local("edge")) {
        if edge.attribute("directed") == Some("true") {
            return Err(Error::Parse("directed edges are not supported".into()));
        }
        let endpoint = |attr: &str| -> Result<usize> {
            let id = edge
                .attribute(attr)
                .ok_or_else(|| Error::Parse(format!("<edge> without {attr} attribute")))?;
            index_of
                .get(id)
                .copied()
                .ok_or_else(|| Error::Parse(format!("edge references unknown node `{id}`")))
        };
        let a = endpoint("source")?;
        let b = endpoint("target")?;
        let latency_ms = match (nodes[a].coordinates(), nodes[b].coordinates()) {
            (Some(_), Some(_)) => {
                link_latency_with_speed(&nodes[a], &nodes[b], options.propagation_speed_km_per_ms)?
            }
            _ => options
                .default_link_latency_ms
                .expect("checked above that a fallback exists"),
        };
        links.push(PhysicalLink {
            endpoint_a: a,
            endpoint_b: b,
            latency_ms,
        });
    }

    let topology = PhysicalTopology::new(nodes, links)?;
    topology.ensure_connected()?;
    Ok(topology)
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for roxmltree::Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}
