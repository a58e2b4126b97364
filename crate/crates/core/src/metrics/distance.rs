use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{shortest_path_hops, Graph};
use crate::rng;

/// Symmetric, non-negative, zero-diagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
}

impl DistanceMatrix {
    /// Checks symmetry (1e-12), non-negativity and an exactly zero diagonal.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::shape(n, values.ncols()));
        }
        for i in 0..n {
            if values[[i, i]] != 0.0 {
                return Err(Error::validation(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let (a, b) = (values[[i, j]], values[[j, i]]);
                if !(a >= 0.0) || !(b >= 0.0) || (a - b).abs() > 1e-12 {
                    return Err(Error::validation(format!(
                        "entries ({i},{j}) and ({j},{i}) are not a symmetric non-negative pair"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { values })
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Restriction to `idx` in the given order.
    pub fn select(&self, idx: &[usize]) -> DistanceMatrix {
        let values = Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| {
            self.values[[idx[a], idx[b]]]
        });
        DistanceMatrix { values }
    }

    /// Entries above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.size();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.values[[i, j]]);
            }
        }
        out
    }
}

/// Exact Euclidean distances between rows.
pub fn pairwise_euclidean(x: ArrayView2<'_, f64>) -> DistanceMatrix {
    let n = x.nrows();
    let sq: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
    let gram = x.dot(&x.t());
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let mut d2 = sq[i] + sq[j] - 2.0 * gram[[i, j]];
            // the Gram expansion cancels badly for nearby points
            if d2 < 1e-8 * (sq[i] + sq[j]) {
                d2 = x
                    .row(i)
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
            let d = d2.max(0.0).sqrt();
            values[[i, j]] = d;
            values[[j, i]] = d;
        }
    }
    DistanceMatrix { values }
}

/// `K(u,v) = exp(-hops(u,v)^2 / eps)`, zero across components.
pub fn diffusion_kernel(graph: &Graph, eps: f64) -> Result<Array2<f64>> {
    if !(eps > 0.0) {
        return Err(Error::validation(format!("eps = {eps} must be positive")));
    }
    let hops = shortest_path_hops(graph);
    let n = graph.num_nodes();
    Ok(Array2::from_shape_fn((n, n), |(u, v)| match hops.get(u, v) {
        Some(h) => (-(h as f64).powi(2) / eps).exp(),
        None => 0.0,
    }))
}

/// How a kernel similarity becomes a dissimilarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphDistance {
    /// `1 - K`
    #[default]
    OneMinusKernel,
    /// `sqrt(2 - 2K)`, the feature-space distance induced by the kernel.
    KernelInduced,
}

pub fn graph_distance(graph: &Graph, eps: f64) -> Result<DistanceMatrix> {
    graph_distance_with(graph, eps, GraphDistance::OneMinusKernel)
}

pub fn graph_distance_with(graph: &Graph, eps: f64, kind: GraphDistance) -> Result<DistanceMatrix> {
    let mut k = diffusion_kernel(graph, eps)?;
    k.mapv_inplace(|v| match kind {
        GraphDistance::OneMinusKernel => 1.0 - v,
        GraphDistance::KernelInduced => (2.0 - 2.0 * v).max(0.0).sqrt(),
    });
    k.diag_mut().fill(0.0);
    Ok(DistanceMatrix { values: k })
}

/// Ranks starting at 1; tied values share their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::Undefined("rank correlation needs at least two values".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::validation("rank correlation input contains NaN"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::Undefined("rank correlation of a constant input".into()))
}

/// Spearman correlation between the off-diagonal entries of two distance
/// matrices. Above `max_pairs` node pairs, that many pairs are sampled
/// uniformly (with replacement) using `seed`.
pub fn distance_spearman(
    a: &DistanceMatrix,
    b: &DistanceMatrix,
    max_pairs: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.size();
    if b.size() != n {
        return Err(Error::shape(n, b.size()));
    }
    let total = n * n.saturating_sub(1) / 2;
    if total <= max_pairs {
        return spearman(&a.upper_triangle(), &b.upper_triangle());
    }
    let mut rng = rng::stream(seed, 0);
    let (mut xs, mut ys) = (Vec::with_capacity(max_pairs), Vec::with_capacity(max_pairs));
    while xs.len() < max_pairs {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            xs.push(a.get(i, j));
            ys.push(b.get(i, j));
        }
    }
    spearman(&xs, &ys)
}
