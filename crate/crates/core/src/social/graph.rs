//! Closeness graph and its threshold clustering into OffSNs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::gamma::{closeness, fit_gamma};
use crate::error::{Error, Result};
use crate::trace::{ContactStats, NodePair};

pub const GRAPH_HEADER: &str = "node_i,node_j,weight";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClosenessGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<NodePair, f64>,
}

impl ClosenessGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>) {
        self.nodes.insert(id.into());
    }

    /// Inserts or replaces the edge `a - b`. Both endpoints join the node set.
    pub fn set_edge(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        if a == b {
            return Err(Error::domain(format!("self-edge on {a}")));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("edge weight {weight} outside [0, 1]")));
        }
        self.nodes.insert(a.to_owned());
        self.nodes.insert(b.to_owned());
        self.edges.insert(NodePair::new(a, b), weight);
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<NodePair, f64> {
        &self.edges
    }

    /// Edge weight, 0 when the pair has no edge.
    pub fn weight(&self, a: &str, b: &str) -> f64 {
        self.edges.get(&NodePair::new(a, b)).copied().unwrap_or(0.0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{GRAPH_HEADER}")?;
        for (pair, w) in &self.edges {
            writeln!(out, "{},{},{}", pair.first(), pair.second(), w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end_matches('\r') != GRAPH_HEADER {
            return Err(Error::Format(format!("bad graph header `{header}`, expected `{GRAPH_HEADER}`")));
        }
        let mut graph = ClosenessGraph::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            }
            let w: f64 = fields[2].parse().map_err(|_| parse_err(format!("non-numeric weight `{}`", fields[2])))?;
            graph.set_edge(fields[0], fields[1], w).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(graph)
    }
}

/// One edge per pair with at least `n_min` encounters, weighted by the
/// closeness of its fitted duration model at `x_min`. Every UE that appears
/// in `stats` is a node, with or without edges.
pub fn build_closeness_graph(
    stats: &BTreeMap<NodePair, ContactStats>,
    x_min: f64,
    n_min: u64,
) -> Result<ClosenessGraph> {
    if !(x_min >= 0.0) {
        return Err(Error::domain(format!("x_min must be non-negative, got {x_min}")));
    }
    if n_min < 1 {
        return Err(Error::domain("n_min must be at least 1"));
    }
    let mut graph = ClosenessGraph::new();
    for (pair, s) in stats {
        graph.add_node(pair.first());
        graph.add_node(pair.second());
        if s.n_encounters < n_min {
            continue;
        }
        let w = closeness(fit_gamma(s)?, x_min)?;
        graph.set_edge(pair.first(), pair.second(), w)?;
    }
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsnPartition {
    /// Sorted member lists, ordered by their first member.
    pub clusters: Vec<Vec<String>>,
    pub white: Vec<String>,
    #[serde(rename = "w_T")]
    pub threshold: f64,
}

impl OffsnPartition {
    /// Index of the cluster containing `id`, `None` for white-area UEs.
    pub fn cluster_of(&self, id: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.binary_search_by(|m| m.as_str().cmp(id)).is_ok())
    }

    pub fn is_white(&self, id: &str) -> bool {
        self.white.binary_search_by(|m| m.as_str().cmp(id)).is_ok()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Connected components of the subgraph keeping edges with weight ≥ `w_t`.
/// Components of size one are white-area nodes.
pub fn build_offsn(graph: &ClosenessGraph, w_t: f64) -> Result<OffsnPartition> {
    if !(0.0..=1.0).contains(&w_t) {
        return Err(Error::config(format!("w_T must lie in [0, 1], got {w_t}")));
    }
    let mut adj: BTreeMap<&str, Vec<&str>> = graph.nodes.iter().map(|n| (n.as_str(), Vec::new())).collect();
    for (pair, &w) in &graph.edges {
        if w >= w_t {
            adj.get_mut(pair.first()).expect("edge endpoint is a node").push(pair.second());
            adj.get_mut(pair.second()).expect("edge endpoint is a node").push(pair.first());
        }
    }

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut clusters = Vec::new();
    let mut white = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut component = vec![start.to_owned()];
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for &next in &adj[node] {
                if seen.insert(next) {
                    component.push(next.to_owned());
                    stack.push(next);
                }
            }
        }
        if component.len() == 1 {
            white.extend(component);
        } else {
            component.sort();
            clusters.push(component);
        }
    }
    clusters.sort();
    Ok(OffsnPartition { clusters, white, threshold: w_t })
}
