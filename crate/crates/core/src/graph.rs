//! Graph devices and the clique and isomorphism encodings.
//!
//! The device of a graph has the vertices as states and one three-block
//! partition `{{u}, {v}, V - {u, v}}` per edge. Reductions between graph
//! devices are subgraph embeddings, so `D(K_k) <= D(G)` says that `G` has a
//! `k`-clique, and `D(G) ≡ D(H)` says that the graphs are isomorphic.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::device::{Device, DeviceError};
use crate::partition::{GroundSet, Partition};
use crate::reduction::{decide_equivalence, find_reduction, EquivalenceOutcome, ReductionError};

/// Largest graph accepted by the exhaustive clique oracle.
pub const BRUTE_CLIQUE_MAX_VERTICES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has {0} vertices; graph devices need at least 4")]
    TooFewVertices(usize),
    #[error("vertex {0:?} has no edges")]
    IsolatedVertex(String),
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("edge endpoint {0:?} is not a vertex")]
    UnknownVertex(String),
    #[error("self-loop at {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge {0:?}-{1:?}")]
    DuplicateEdge(String, String),
    #[error("clique size must be at least 4, got {0}")]
    CliqueTooSmall(usize),
    #[error("graph has {size} vertices, above the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("malformed graph JSON: {0}")]
    Json(String),
    #[error("solver returned a witness that does not check out: {0}")]
    BadWitness(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// `{"vertices": [...], "edges": [["u","v"], ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// A simple undirected graph. Edges are stored as index pairs `(u, v)` with
/// `u < v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: &[(String, String)]) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.as_str(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let lookup = |v: &String| {
                index
                    .get(v.as_str())
                    .copied()
                    .ok_or_else(|| GraphError::UnknownVertex(v.clone()))
            };
            let (u, w) = (lookup(a)?, lookup(b)?);
            if u == w {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            if !set.insert((u.min(w), u.max(w))) {
                return Err(GraphError::DuplicateEdge(a.clone(), b.clone()));
            }
        }
        Ok(Self {
            vertices,
            edges: set,
        })
    }

    /// A graph on vertices `1..=n` from 0-based index pairs.
    pub fn from_indices(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let named: Vec<(String, String)> = edges
            .iter()
            .map(|&(u, v)| {
                let name = |x: usize| labels.get(x).cloned().unwrap_or_else(|| (x + 1).to_string());
                (name(u), name(v))
            })
            .collect();
        Self::new(labels, &named)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let raw: RawGraph = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        Self::new(raw.vertices, &raw.edges)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| (self.vertices[u].clone(), self.vertices[v].clone()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("graph JSON is always serializable")
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// The same graph with vertex `v` renamed to `labels[perm[v]]` and the
    /// vertex list reordered to `labels`.
    pub fn relabeled(&self, perm: &[usize], labels: Vec<String>) -> Result<Self, GraphError> {
        let edges: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(u, v)| (labels[perm[u]].clone(), labels[perm[v]].clone()))
            .collect();
        Self::new(labels, &edges)
    }
}

/// `K_k` on vertices `1..=k`.
pub fn complete_graph(k: usize) -> Result<Graph, GraphError> {
    if k < 4 {
        return Err(GraphError::TooFewVertices(k));
    }
    let edges: Vec<(usize, usize)> = (0..k)
        .flat_map(|u| (u + 1..k).map(move |v| (u, v)))
        .collect();
    Graph::from_indices(k, &edges)
}

/// The device of a graph with at least four vertices and no isolated vertex.
pub fn graph_device(g: &Graph) -> Result<Device, GraphError> {
    let n = g.num_vertices();
    if n < 4 {
        return Err(GraphError::TooFewVertices(n));
    }
    if let Some(v) = (0..n).find(|&v| g.degree(v) == 0) {
        return Err(GraphError::IsolatedVertex(g.vertices[v].clone()));
    }
    let ground = Arc::new(GroundSet::new(g.vertices.iter().cloned()).map_err(DeviceError::from)?);
    let parts = g
        .edges()
        .map(|(u, v)| {
            let keys: Vec<u32> = (0..n)
                .map(|x| if x == u { 1 } else if x == v { 2 } else { 0 })
                .collect();
            Partition::from_keys(ground.clone(), &keys, 3)
        })
        .collect();
    Ok(Device::new(None, ground, parts)?)
}

/// A `k`-clique found through the reduction `D(K_k) <= D(G)`.
///
/// The returned vertex list is checked against the graph itself.
pub fn clique_via_reduction(
    g: &Graph,
    k: usize,
    config: &SolverConfig,
) -> Result<Option<Vec<usize>>, GraphError> {
    if k < 4 {
        return Err(GraphError::CliqueTooSmall(k));
    }
    let dk = graph_device(&complete_graph(k)?)?;
    let dg = graph_device(g)?;
    let Some(r) = find_reduction(&dk, &dg, config)?.into_witness() else {
        return Ok(None);
    };
    let clique = r.phi;
    let distinct: BTreeSet<usize> = clique.iter().copied().collect();
    if distinct.len() != k {
        return Err(GraphError::BadWitness("vertex map is not injective".into()));
    }
    for (i, &u) in clique.iter().enumerate() {
        for &v in &clique[i + 1..] {
            if !g.has_edge(u, v) {
                return Err(GraphError::BadWitness(format!(
                    "{} and {} are not adjacent",
                    g.vertices[u], g.vertices[v]
                )));
            }
        }
    }
    Ok(Some(clique))
}

/// An isomorphism `G -> H` found through `D(G) ≡ D(H)`, as a vertex map.
///
/// The map is checked edge by edge against both graphs.
pub fn gi_via_equivalence(
    g: &Graph,
    h: &Graph,
    config: &SolverConfig,
) -> Result<Option<Vec<usize>>, GraphError> {
    let dg = graph_device(g)?;
    let dh = graph_device(h)?;
    let EquivalenceOutcome::Equivalent { forward, .. } = decide_equivalence(&dg, &dh, config)? else {
        return Ok(None);
    };
    let phi = forward.phi;
    let image: BTreeSet<usize> = phi.iter().copied().collect();
    if image.len() != g.num_vertices() || g.num_vertices() != h.num_vertices() {
        return Err(GraphError::BadWitness("vertex map is not a bijection".into()));
    }
    if g.num_edges() != h.num_edges() || g.edges().any(|(u, v)| !h.has_edge(phi[u], phi[v])) {
        return Err(GraphError::BadWitness("vertex map does not preserve edges".into()));
    }
    Ok(Some(phi))
}

/// Exhaustive `k`-clique test.
pub fn brute_clique(g: &Graph, k: usize) -> Result<bool, GraphError> {
    let n = g.num_vertices();
    if n > BRUTE_CLIQUE_MAX_VERTICES {
        return Err(GraphError::TooLarge {
            size: n,
            cap: BRUTE_CLIQUE_MAX_VERTICES,
        });
    }
    if k == 0 {
        return Ok(true);
    }
    Ok((0u32..1 << n).any(|set| {
        set.count_ones() as usize == k
            && (0..n).all(|u| {
                set >> u & 1 == 0 || (u + 1..n).all(|v| set >> v & 1 == 0 || g.has_edge(u, v))
            })
    }))
}
