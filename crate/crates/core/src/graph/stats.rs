use std::collections::VecDeque;

use rand::seq::SliceRandom;

use super::{Graph, SplitSpec};
use crate::error::{Error, Result};
use crate::rng;

/// Hop count for pairs in different components.
pub const UNREACHABLE: u32 = u32::MAX;

/// Fraction of undirected edges whose endpoints share a label.
pub fn edge_homophily(graph: &Graph, labels: &[usize]) -> Result<f64> {
    if labels.len() != graph.num_nodes() {
        return Err(Error::shape(graph.num_nodes(), labels.len()));
    }
    let total = graph.num_edges();
    if total == 0 {
        return Err(Error::Undefined("edge homophily of a graph without edges".into()));
    }
    let same = graph
        .edges()
        .filter(|&(u, v, _)| labels[u] == labels[v])
        .count();
    Ok(same as f64 / total as f64)
}

/// All-pairs unweighted hop counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    hops: Vec<u32>,
}

impl HopMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Hop count, or `None` when `u` and `v` are in different components.
    pub fn get(&self, u: usize, v: usize) -> Option<u32> {
        match self.hops[u * self.n + v] {
            UNREACHABLE => None,
            h => Some(h),
        }
    }

    pub fn raw(&self, u: usize, v: usize) -> u32 {
        self.hops[u * self.n + v]
    }
}

/// BFS from every node, ignoring edge weights.
pub fn shortest_path_hops(graph: &Graph) -> HopMatrix {
    let n = graph.num_nodes();
    let mut hops = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut hops[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let next = row[u] + 1;
            for &v in graph.neighbors(u) {
                if row[v] == UNREACHABLE {
                    row[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }
    HopMatrix { n, hops }
}

/// Uniform random train subset of size `train_count`; the rest is test.
/// Both id lists come back sorted.
pub fn random_split(num_nodes: usize, train_count: usize, seed: u64) -> Result<SplitSpec> {
    if train_count >= num_nodes {
        return Err(Error::validation(format!(
            "train_count {train_count} must be smaller than the {num_nodes} nodes"
        )));
    }
    let mut ids: Vec<usize> = (0..num_nodes).collect();
    ids.shuffle(&mut rng::stream(seed, 0));
    let mut train_ids = ids[..train_count].to_vec();
    let mut test_ids = ids[train_count..].to_vec();
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(SplitSpec {
        train_ids,
        test_ids,
    })
}
