//! The two operator families.
//!
//! Symmetric: `S = D_b^-a (A + bI) D_b^-a` with `D_b = diag(d + b)`, so
//! `S_uv = A_uv (d_u + b)^-a (d_v + b)^-a` and `S_uu = b (d_u + b)^-2a`.
//!
//! Row-normalized: the symmetric operator with each row divided by its sum.
//! The self term keeps its weight `b (d_u + b)^-2a` before normalization.
//! A simplified closed form that drops the `b` factor on the self term also
//! circulates; this module follows the matrix definition.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Symmetric,
    RowNormalized,
}

impl Family {
    pub const BOTH: [Family; 2] = [Family::Symmetric, Family::RowNormalized];

    /// Short name used in CSV output and on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Symmetric => "sym",
            Family::RowNormalized => "row",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "sym" | "symmetric" => Some(Family::Symmetric),
            "row" | "row_normalized" | "row-normalized" => Some(Family::RowNormalized),
            _ => None,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub alpha: f64,
    pub beta: f64,
    pub family: Family,
}

impl ConvParams {
    pub fn new(alpha: f64, beta: f64, family: Family) -> Self {
        ConvParams {
            alpha,
            beta,
            family,
        }
    }

    /// The usual GCN propagation rule (`alpha = 0.5`, `beta = 1`).
    pub fn gcn() -> Self {
        ConvParams::new(0.5, 1.0, Family::Symmetric)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation(format!(
                "alpha = {} outside [0, 1]",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::validation(format!("beta = {} must be >= 0", self.beta)));
        }
        Ok(())
    }
}

/// `(d + beta)^-alpha` with the convention `x^0 = 1` even at `x = 0`.
pub(crate) fn inv_pow(aug_degree: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        (-alpha * aug_degree.ln()).exp()
    }
}

/// A constructed convolution matrix in CSR form (graph pattern plus the
/// diagonal when `beta > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    params: ConvParams,
    aug_degrees: Vec<f64>,
}

pub fn build(graph: &Graph, params: ConvParams) -> Result<SparseOperator> {
    match params.family {
        Family::Symmetric => build_symmetric(graph, params.alpha, params.beta),
        Family::RowNormalized => build_row_normalized(graph, params.alpha, params.beta),
    }
}

pub fn build_symmetric(graph: &Graph, alpha: f64, beta: f64) -> Result<SparseOperator> {
    let params = ConvParams::new(alpha, beta, Family::Symmetric);
    params.validate()?;
    let n = graph.num_nodes();
    let aug_degrees: Vec<f64> = graph.degrees().iter().map(|d| d + beta).collect();
    if alpha > 0.0 {
        if let Some(u) = aug_degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::DivisionByZero { node: u });
        }
    }
    let scale: Vec<f64> = aug_degrees.iter().map(|&d| inv_pow(d, alpha)).collect();

    let with_diag = beta > 0.0;
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(graph.num_entries() + n);
    let mut values = Vec::with_capacity(graph.num_entries() + n);
    row_offsets.push(0);
    for u in 0..n {
        let mut diag_done = !with_diag;
        for (v, w) in graph.weighted_neighbors(u) {
            if !diag_done && v > u {
                col_indices.push(u);
                values.push(beta * scale[u] * scale[u]);
                diag_done = true;
            }
            col_indices.push(v);
            values.push(w * scale[u] * scale[v]);
        }
        if !diag_done {
            col_indices.push(u);
            values.push(beta * scale[u] * scale[u]);
        }
        row_offsets.push(col_indices.len());
    }

    Ok(SparseOperator {
        n,
        row_offsets,
        col_indices,
        values,
        params,
        aug_degrees,
    })
}

pub fn build_row_normalized(graph: &Graph, alpha: f64, beta: f64) -> Result<SparseOperator> {
    let sym = match build_symmetric(graph, alpha, beta) {
        // an empty row cannot be normalized whatever the exponent
        Err(Error::DivisionByZero { node }) => return Err(Error::ZeroRowSum { node }),
        other => other?,
    };
    let mut op = sym;
    op.params.family = Family::RowNormalized;
    for u in 0..op.n {
        let range = op.row_offsets[u]..op.row_offsets[u + 1];
        let sum: f64 = op.values[range.clone()].iter().sum();
        if !(sum > 0.0) {
            return Err(Error::ZeroRowSum { node: u });
        }
        for v in &mut op.values[range] {
            *v /= sum;
        }
    }
    Ok(op)
}

impl SparseOperator {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> ConvParams {
        self.params
    }

    pub fn family(&self) -> Family {
        self.params.family
    }

    /// `d_u + beta` per node.
    pub fn aug_degrees(&self) -> &[f64] {
        &self.aug_degrees
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `u` as `(column, value)`.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[u]..self.row_offsets[u + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.row(u).find(|&(c, _)| c == v).map_or(0.0, |(_, x)| x)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|u| self.row(u).map(|(_, x)| x).sum()).collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut s = Array2::zeros((self.n, self.n));
        for u in 0..self.n {
            for (v, x) in self.row(u) {
                s[[u, v]] = x;
            }
        }
        s
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.n {
            return Err(Error::shape(
                format!("{} rows", self.n),
                format!("{rows} rows"),
            ));
        }
        Ok(())
    }

    /// `S X`.
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_rows(x.nrows())?;
        let mut out = Array2::zeros((self.n, x.ncols()));
        #[cfg(feature = "parallel")]
        {
            use ndarray::parallel::prelude::*;
            if self.nnz() * x.ncols() > 1 << 16 {
                out.axis_iter_mut(Axis(0))
                    .into_par_iter()
                    .enumerate()
                    .for_each(|(u, mut row)| {
                        for (v, s) in self.row(u) {
                            row.scaled_add(s, &x.row(v));
                        }
                    });
                return Ok(out);
            }
        }
        for (u, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for (v, s) in self.row(u) {
                row.scaled_add(s, &x.row(v));
            }
        }
        Ok(out)
    }

    /// `S^T X`. Equal to [`apply`](Self::apply) for the symmetric family.
    pub fn apply_transpose(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if self.params.family == Family::Symmetric {
            return self.apply(x);
        }
        self.check_rows(x.nrows())?;
        let mut out = Array2::zeros((self.n, x.ncols()));
        for u in 0..self.n {
            let xu = x.row(u);
            for (v, s) in self.row(u) {
                out.row_mut(v).scaled_add(s, &xu);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    use super::*;

    fn path2() -> Graph {
        Graph::from_edges(2, &[(0, 1)]).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        Graph::from_edges(leaves + 1, &edges).unwrap()
    }

    #[test]
    fn gcn_on_two_nodes() {
        let s = build_symmetric(&path2(), 0.5, 1.0).unwrap().to_dense();
        assert_abs_diff_eq!(s, array![[0.5, 0.5], [0.5, 0.5]], epsilon = 1e-15);
    }

    #[test]
    fn zero_exponent_zero_loop_is_adjacency() {
        let g = star(3);
        let op = build_symmetric(&g, 0.0, 0.0).unwrap();
        assert_eq!(op.to_dense(), g.to_dense());
        assert_eq!(op.nnz(), g.num_entries());
    }

    #[test]
    fn triangle_alpha_one() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = build_symmetric(&g, 1.0, 0.0).unwrap().to_dense();
        // D^-1 A D^-1 with d = 2
        let a = g.to_dense();
        let oracle = a.mapv(|x| x / 4.0);
        assert_eq!(s, oracle);
        for u in 0..3 {
            assert_eq!(s[[u, u]], 0.0);
        }
    }

    #[test]
    fn isolated_node_with_zero_beta() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            build_symmetric(&g, 0.5, 0.0),
            Err(Error::DivisionByZero { node: 2 })
        ));
        assert!(build_symmetric(&g, 0.0, 0.0).is_ok());
        assert!(matches!(
            build_row_normalized(&g, 0.0, 0.0),
            Err(Error::ZeroRowSum { node: 2 })
        ));
        assert!(build_row_normalized(&g, 0.5, 1.0).is_ok());
    }

    #[test]
    fn params_are_validated() {
        assert!(build_symmetric(&path2(), 1.5, 1.0).is_err());
        assert!(build_symmetric(&path2(), 0.5, -1.0).is_err());
    }

    #[test]
    fn row_normalized_two_nodes() {
        let s = build_row_normalized(&path2(), 0.5, 1.0).unwrap().to_dense();
        assert_abs_diff_eq!(s, array![[0.5, 0.5], [0.5, 0.5]], epsilon = 1e-15);
    }

    #[test]
    fn star_leaf_row() {
        // leaf: self 1 * 2^-2 = 0.25, hub 2^-1 4^-1 = 0.125
        let s = build_row_normalized(&star(3), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.get(1, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(1, 0), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn apply_identity_returns_columns() {
        let g = star(3);
        let op = build_symmetric(&g, 0.3, 2.0).unwrap();
        let out = op.apply(Array2::eye(4).view()).unwrap();
        assert_eq!(out, op.to_dense());
    }

    #[test]
    fn row_normalized_fixes_constants() {
        let op = build_row_normalized(&star(5), 0.7, 0.5).unwrap();
        let ones = Array2::ones((6, 1));
        let out = op.apply(ones.view()).unwrap();
        for v in out.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn transpose_matches_dense() {
        let op = build_row_normalized(&star(4), 0.6, 1.0).unwrap();
        let x = Array2::from_shape_fn((5, 2), |(i, j)| (i * 3 + j) as f64 - 2.5);
        let dense = op.to_dense().t().dot(&x);
        assert_abs_diff_eq!(op.apply_transpose(x.view()).unwrap(), dense, epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let op = build_symmetric(&path2(), 0.5, 1.0).unwrap();
        assert!(matches!(
            op.apply(Array2::zeros((3, 1)).view()),
            Err(Error::Shape { .. })
        ));
    }
}
