use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureSummary {
    /// `(u, v, curvature)` for every edge, `u < v`, lexicographic.
    pub edges: Vec<(usize, usize, f64)>,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl CurvatureSummary {
    pub fn values(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.2).collect()
    }
}

fn common_neighbors(graph: &Graph, u: usize, v: usize) -> usize {
    let (a, b) = (graph.neighbors(u), graph.neighbors(v));
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Augmented Forman curvature `4 - d_u - d_v + 3 t(u,v)` of every edge,
/// with unweighted degrees and `t` the number of triangles on the edge.
pub fn forman_curvature(graph: &Graph) -> Result<CurvatureSummary> {
    if graph.num_edges() == 0 {
        return Err(Error::Undefined("curvature of a graph without edges".into()));
    }
    let edges: Vec<(usize, usize, f64)> = graph
        .edges()
        .map(|(u, v, _)| {
            let du = graph.neighbor_count(u) as f64;
            let dv = graph.neighbor_count(v) as f64;
            let t = common_neighbors(graph, u, v) as f64;
            (u, v, 4.0 - du - dv + 3.0 * t)
        })
        .collect();
    let n = edges.len() as f64;
    let mean = edges.iter().map(|e| e.2).sum::<f64>() / n;
    let var = edges.iter().map(|e| (e.2 - mean).powi(2)).sum::<f64>() / n;
    Ok(CurvatureSummary {
        edges,
        mean,
        sd: var.sqrt(),
    })
}

/// Graph on the rows of `h` joining the `m_edges` closest pairs. Ties in
/// distance go to the lexicographically smaller pair.
pub fn reconstruct_graph(h: ArrayView2<'_, f64>, m_edges: usize) -> Result<Graph> {
    let n = h.nrows();
    let max = n * n.saturating_sub(1) / 2;
    if m_edges > max {
        return Err(Error::validation(format!(
            "{m_edges} edges requested but only {max} node pairs exist"
        )));
    }
    let mut pairs: Vec<(f64, u32, u32)> = Vec::with_capacity(max);
    for i in 0..n {
        let ri = h.row(i);
        for j in i + 1..n {
            let d2: f64 = ri.iter().zip(h.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            pairs.push((d2, i as u32, j as u32));
        }
    }
    let cmp = |a: &(f64, u32, u32), b: &(f64, u32, u32)| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    };
    if m_edges < pairs.len() && m_edges > 0 {
        pairs.select_nth_unstable_by(m_edges - 1, cmp);
    }
    pairs.truncate(m_edges);
    let edges: Vec<(usize, usize)> = pairs
        .into_iter()
        .map(|(_, i, j)| (i as usize, j as usize))
        .collect();
    Graph::from_edges(n, &edges)
}

/// Curvature of the listed node pairs using `graph`'s degrees and triangle
/// counts; the pairs need not be edges of `graph`.
pub fn curvature_on_edges(graph: &Graph, edges: &[(usize, usize)]) -> Vec<f64> {
    edges
        .iter()
        .map(|&(u, v)| {
            4.0 - graph.neighbor_count(u) as f64 - graph.neighbor_count(v) as f64
                + 3.0 * common_neighbors(graph, u, v) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn closed_forms() {
        let cycle = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        assert!(forman_curvature(&cycle).unwrap().values().iter().all(|&c| c == 0.0));
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = forman_curvature(&k3).unwrap();
        assert_eq!(s.values(), vec![3.0; 3]);
        assert_eq!((s.mean, s.sd), (3.0, 0.0));
        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(forman_curvature(&star).unwrap().values(), vec![-1.0; 4]);
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(forman_curvature(&Graph::empty(3)).is_err());
    }

    #[test]
    fn reconstruct_closest_pair() {
        let h = array![[0.0, 0.0], [10.0, 0.0], [0.5, 0.0]];
        let g = reconstruct_graph(h.view(), 1).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert!(g.has_edge(0, 2));
        assert!(reconstruct_graph(h.view(), 4).is_err());
    }

    #[test]
    fn equally_spaced_points_give_a_path() {
        let h = ndarray::Array2::from_shape_fn((6, 1), |(i, _)| i as f64);
        let g = reconstruct_graph(h.view(), 5).unwrap();
        for i in 0..5 {
            assert!(g.has_edge(i, i + 1));
        }
    }

    #[test]
    fn ties_prefer_lexicographic_pairs() {
        let h = ndarray::Array2::<f64>::zeros((4, 2));
        let g = reconstruct_graph(h.view(), 2).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2));
    }
}
