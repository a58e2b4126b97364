//! Undirected weighted graphs in compressed row form, plus the dataset types
//! that travel with them.

mod io;
mod stats;
mod synth;

use std::collections::VecDeque;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_dataset, write_dataset, Manifest};
pub use stats::{edge_homophily, random_split, shortest_path_hops, HopMatrix, UNREACHABLE};
pub use synth::{
    generate_hub_periphery, generate_structural_replicas, noise_variances, random_graph, NoiseMode,
    ReplicaPair, SyntheticConfig,
};

/// Dense row-major node feature matrix (`n x p`).
pub type FeatureMatrix = Array2<f64>;

/// Immutable undirected graph stored as a symmetric CSR adjacency.
///
/// Rows are sorted and duplicate-free, self-loops are never stored, and
/// `degrees[u]` is the weighted row sum of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    edge_weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl Graph {
    /// Unweighted graph from an edge list. Each pair may be given in either
    /// or both orientations.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_weighted_edges(num_nodes, &weighted)
    }

    /// Weighted graph from an edge list. When a pair appears more than once
    /// the first occurrence wins.
    pub fn from_weighted_edges(num_nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        for (i, &(u, v, w)) in edges.iter().enumerate() {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::validation(format!(
                    "edge {i} ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::validation(format!("edge {i} is a self-loop on node {u}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::validation(format!(
                    "edge {i} ({u}, {v}) has invalid weight {w}"
                )));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            entries.push((a, b, w));
        }
        // stable sort keeps the first occurrence of each pair in front
        entries.sort_by_key(|&(a, b, _)| (a, b));
        entries.dedup_by_key(|e| (e.0, e.1));

        let mut directed: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len() * 2);
        for &(a, b, w) in &entries {
            directed.push((a, b, w));
            directed.push((b, a, w));
        }
        directed.sort_unstable_by_key(|&(a, b, _)| (a, b));

        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(a, _, _) in &directed {
            row_offsets[a + 1] += 1;
        }
        for u in 0..num_nodes {
            row_offsets[u + 1] += row_offsets[u];
        }
        let col_indices: Vec<usize> = directed.iter().map(|e| e.1).collect();
        let edge_weights: Vec<f64> = directed.iter().map(|e| e.2).collect();
        let degrees = (0..num_nodes)
            .map(|u| edge_weights[row_offsets[u]..row_offsets[u + 1]].iter().sum())
            .collect();

        Ok(Graph {
            num_nodes,
            row_offsets,
            col_indices,
            edge_weights,
            degrees,
        })
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            num_nodes,
            row_offsets: vec![0; num_nodes + 1],
            col_indices: Vec::new(),
            edge_weights: Vec::new(),
            degrees: vec![0.0; num_nodes],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    /// Number of stored (directed) adjacency entries, i.e. `2 * num_edges`.
    pub fn num_entries(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Weighted degrees `d_u = sum_v A_uv`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, u: usize) -> f64 {
        self.degrees[u]
    }

    /// Number of neighbours of `u`, ignoring weights.
    pub fn neighbor_count(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    /// Neighbours of `u` with their edge weights.
    pub fn weighted_neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[u]..self.row_offsets[u + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.edge_weights[range].iter().copied())
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let start = self.row_offsets[u];
        self.neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|i| self.edge_weights[start + i])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.weighted_neighbors(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, w)| (u, v, w))
        })
    }

    pub fn is_unweighted(&self) -> bool {
        self.edge_weights.iter().all(|&w| w == 1.0)
    }

    /// Dense adjacency matrix (no diagonal).
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes;
        let mut a = Array2::zeros((n, n));
        for u in 0..n {
            for (v, w) in self.weighted_neighbors(u) {
                a[[u, v]] = w;
            }
        }
        a
    }

    /// Component id per node, numbered in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.num_nodes {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes == 0 || self.components().iter().all(|&c| c == 0)
    }

    /// Two disjoint copies side by side: node `u` of `other` becomes
    /// `u + self.num_nodes()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let offset = self.num_nodes;
        let edges: Vec<_> = self
            .edges()
            .chain(other.edges().map(|(u, v, w)| (u + offset, v + offset, w)))
            .collect();
        Graph::from_weighted_edges(self.num_nodes + other.num_nodes, &edges)
            .expect("union of valid graphs is valid")
    }

    /// Relabels nodes so that node `u` becomes `perm[u]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        check_permutation(perm, self.num_nodes)?;
        let edges: Vec<_> = self
            .edges()
            .map(|(u, v, w)| (perm[u], perm[v], w))
            .collect();
        Graph::from_weighted_edges(self.num_nodes, &edges)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::shape(n, perm.len()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::validation("not a permutation"));
        }
    }
    Ok(())
}

/// Train/test node partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(rename = "train")]
    pub train_ids: Vec<usize>,
    #[serde(rename = "test")]
    pub test_ids: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for &id in self.train_ids.iter().chain(&self.test_ids) {
            if id >= num_nodes {
                return Err(Error::validation(format!(
                    "split node {id} out of range for {num_nodes} nodes"
                )));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::validation(format!(
                    "node {id} appears twice in the split"
                )));
            }
        }
        Ok(())
    }
}

/// Graph, features, labels and an optional split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Option<SplitSpec>,
}

impl DatasetBundle {
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        features: FeatureMatrix,
        labels: Vec<usize>,
        num_classes: usize,
        split: Option<SplitSpec>,
    ) -> Result<Self> {
        let bundle = DatasetBundle {
            name: name.into(),
            graph,
            features,
            labels,
            num_classes,
            split,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.features.nrows() != n {
            return Err(Error::shape(
                format!("{n} feature rows"),
                format!("{} rows", self.features.nrows()),
            ));
        }
        if self.labels.len() != n {
            return Err(Error::shape(
                format!("{n} labels"),
                format!("{} labels", self.labels.len()),
            ));
        }
        if let Some((u, &c)) = self
            .labels
            .iter()
            .enumerate()
            .find(|&(_, &c)| c >= self.num_classes)
        {
            return Err(Error::validation(format!(
                "label {c} of node {u} is outside [0, {})",
                self.num_classes
            )));
        }
        if let Some(v) = self.features.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite feature value {v}")));
        }
        if let Some(split) = &self.split {
            split.validate(n)?;
        }
        Ok(())
    }
}
