//! Finite directed multigraphs, paths, and tracial states on the vertex algebra.
//!
//! Orientation: `adjacency[i][j]` counts the edges with source `i` and range `j`.
//! Paths are stored in traversal order, so the first stored edge leaves `s(μ)`
//! and the last one enters `r(μ)`.

mod parse;
mod paths;
mod scc;

pub use parse::{parse_graph, parse_graph_value};
pub use paths::{count_paths, count_paths_matrix};
pub(crate) use paths::ln_big;
pub use scc::{Component, ComponentDecomposition};

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};

/// One edge of a multigraph; parallel edges are told apart by `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub range: usize,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    labels: Vec<String>,
    adjacency: Vec<Vec<u64>>,
    edges: Vec<Edge>,
    edge_labels: Option<Vec<String>>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl MultiGraph {
    pub fn new(labels: Vec<String>, adjacency: Vec<Vec<u64>>) -> Result<Self, ParseError> {
        let n = labels.len();
        if n == 0 {
            return Err(ParseError::NoVertices);
        }
        let mut seen = HashMap::new();
        for label in &labels {
            if seen.insert(label.as_str(), ()).is_some() {
                return Err(ParseError::DuplicateLabel(label.clone()));
            }
        }
        if adjacency.len() != n {
            return Err(ParseError::NonSquare {
                expected: n,
                row: adjacency.len(),
                found: 0,
            });
        }
        for (row, entries) in adjacency.iter().enumerate() {
            if entries.len() != n {
                return Err(ParseError::NonSquare {
                    expected: n,
                    row,
                    found: entries.len(),
                });
            }
        }

        let mut edges = Vec::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &count) in row.iter().enumerate() {
                for index in 0..count {
                    let id = edges.len();
                    edges.push(Edge {
                        source: i,
                        range: j,
                        index,
                    });
                    out_edges[i].push(id);
                    in_edges[j].push(id);
                }
            }
        }

        Ok(Self {
            labels,
            adjacency,
            edges,
            edge_labels: None,
            out_edges,
            in_edges,
        })
    }

    /// Builds a graph from borrowed labels; handy for fixtures and tests.
    pub fn from_matrix(labels: &[&str], adjacency: &[&[u64]]) -> Result<Self, ParseError> {
        Self::new(
            labels.iter().map(|s| s.to_string()).collect(),
            adjacency.iter().map(|r| r.to_vec()).collect(),
        )
    }

    /// Attaches user-supplied edge names, one per edge in canonical order.
    pub fn with_edge_labels(mut self, labels: Vec<String>) -> Result<Self, ParseError> {
        if labels.len() != self.edges.len() {
            return Err(ParseError::Field {
                field: "edges".into(),
                message: format!(
                    "{} edge labels supplied for {} edges",
                    labels.len(),
                    self.edges.len()
                ),
            });
        }
        let mut seen = HashMap::new();
        for l in &labels {
            if seen.insert(l.as_str(), ()).is_some() {
                return Err(ParseError::DuplicateEdgeLabel(l.clone()));
            }
        }
        self.edge_labels = Some(labels);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn vertex_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn adjacency(&self) -> &[Vec<u64>] {
        &self.adjacency
    }

    pub fn count(&self, source: usize, range: usize) -> u64 {
        self.adjacency[source][range]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    /// Total number of edges `d`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn has_edge_labels(&self) -> bool {
        self.edge_labels.is_some()
    }

    /// `"<from>-><to>#<index>"` unless the input named its edges.
    pub fn edge_label(&self, id: usize) -> String {
        match &self.edge_labels {
            Some(labels) => labels[id].clone(),
            None => {
                let e = self.edges[id];
                format!(
                    "{}->{}#{}",
                    self.labels[e.source], self.labels[e.range], e.index
                )
            }
        }
    }

    pub fn edge_by_label(&self, label: &str) -> Option<usize> {
        if let Some(labels) = &self.edge_labels {
            if let Some(id) = labels.iter().position(|l| l == label) {
                return Some(id);
            }
        }
        let (ends, index) = label.rsplit_once('#')?;
        let (from, to) = ends.split_once("->")?;
        let index: u64 = index.parse().ok()?;
        let s = self.vertex_index(from)?;
        let r = self.vertex_index(to)?;
        self.out_edges[s]
            .iter()
            .copied()
            .find(|&id| self.edges[id].range == r && self.edges[id].index == index)
    }

    /// Vertices whose adjacency column is zero: nothing has them as range.
    pub fn sources(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| self.in_edges[v].is_empty())
            .collect()
    }

    /// Complement of [`MultiGraph::sources`]: the vertices spanning `J_X`.
    pub fn regular_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| !self.in_edges[v].is_empty())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.vertex_count();
        DMatrix::from_fn(n, n, |i, j| self.adjacency[i][j] as f64)
    }

    /// Restriction to `vertices`, kept in the given order.
    pub fn induced(&self, vertices: &[usize]) -> MultiGraph {
        let labels = vertices.iter().map(|&v| self.labels[v].clone()).collect();
        let adjacency = vertices
            .iter()
            .map(|&i| vertices.iter().map(|&j| self.adjacency[i][j]).collect())
            .collect();
        MultiGraph::new(labels, adjacency).expect("induced subgraph of a valid graph")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "vertices": self.labels,
            "matrix": self.adjacency,
        });
        if let Some(labels) = &self.edge_labels {
            obj["edge_labels"] = serde_json::json!(labels);
        }
        obj
    }
}

/// A finite path `μ`, stored from source to range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    start: usize,
    edges: Vec<usize>,
}

impl Path {
    pub fn empty(vertex: usize) -> Self {
        Self {
            start: vertex,
            edges: Vec::new(),
        }
    }

    pub fn new(graph: &MultiGraph, start: usize, edges: Vec<usize>) -> Result<Self> {
        if start >= graph.vertex_count() {
            return Err(Error::InvalidPath(format!("vertex {start} out of range")));
        }
        let mut at = start;
        for &id in &edges {
            if id >= graph.edge_count() {
                return Err(Error::InvalidPath(format!("edge {id} out of range")));
            }
            let e = graph.edge(id);
            if e.source != at {
                return Err(Error::InvalidPath(format!(
                    "edge {} does not start at `{}`",
                    graph.edge_label(id),
                    graph.label(at)
                )));
            }
            at = e.range;
        }
        Ok(Self { start, edges })
    }

    /// Path through `edges` in traversal order; the first edge fixes the source.
    pub fn from_edges(graph: &MultiGraph, edges: Vec<usize>) -> Result<Self> {
        let start = match edges.first() {
            Some(&id) if id < graph.edge_count() => graph.edge(id).source,
            Some(&id) => return Err(Error::InvalidPath(format!("edge {id} out of range"))),
            None => return Err(Error::InvalidPath("empty edge list needs a vertex".into())),
        };
        Self::new(graph, start, edges)
    }

    pub(crate) fn from_parts_unchecked(start: usize, edges: Vec<usize>) -> Self {
        Self { start, edges }
    }

    pub fn source(&self) -> usize {
        self.start
    }

    pub fn range(&self, graph: &MultiGraph) -> usize {
        self.edges
            .last()
            .map_or(self.start, |&id| graph.edge(id).range)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// `other` followed by `self`, i.e. the word `self·other`.
    pub fn after(&self, other: &Path) -> Path {
        let mut edges = other.edges.clone();
        edges.extend_from_slice(&self.edges);
        Path {
            start: other.start,
            edges,
        }
    }

    pub fn display(&self, graph: &MultiGraph) -> String {
        if self.edges.is_empty() {
            return graph.label(self.start).to_string();
        }
        self.edges
            .iter()
            .map(|&id| graph.edge_label(id))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Weights below this are treated as outside the support.
pub const SUPPORT_EPSILON: f64 = 1e-13;

/// A tracial state on the diagonal algebra: a probability vector over vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    weights: Vec<f64>,
}

impl Trace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidTrace("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidTrace(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTrace(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Rescales non-negative weights to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidTrace(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidTrace("weights sum to zero".into()));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn dirac(n: usize, v: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[v] = 1.0;
        Self { weights }
    }

    pub fn mix(lambda: f64, a: &Trace, b: &Trace) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidTrace("traces over different vertex sets".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0,1]")));
        }
        Self::normalized(
            a.weights
                .iter()
                .zip(&b.weights)
                .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                .collect(),
        )
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&v| self.weights[v] > SUPPORT_EPSILON)
            .collect()
    }

    pub fn distance(&self, other: &Trace) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_len(&self, graph: &MultiGraph) -> Result<()> {
        if self.len() != graph.vertex_count() {
            return Err(Error::InvalidTrace(format!(
                "trace has {} weights for {} vertices",
                self.len(),
                graph.vertex_count()
            )));
        }
        Ok(())
    }

    /// Named weights, omitting vertices outside the support.
    pub fn to_json(&self, graph: &MultiGraph) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for v in self.support() {
            map.insert(graph.label(v).to_string(), serde_json::json!(self.weights[v]));
        }
        serde_json::Value::Object(map)
    }
}
