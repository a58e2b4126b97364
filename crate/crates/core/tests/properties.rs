use convgeom::conv::{build, build_row_normalized, build_symmetric};
use convgeom::geometry::check_lemma31;
use convgeom::graph::random_graph;
use convgeom::metrics::{forman_curvature, pairwise_euclidean, spearman};
use convgeom::{ConvParams, Family, Graph};
use ndarray::Array2;
use proptest::prelude::*;

fn graph() -> impl Strategy<Value = Graph> {
    (2usize..25, 0.0f64..0.6, any::<u64>()).prop_map(|(n, p, seed)| random_graph(n, p, seed).unwrap())
}

fn features(n: usize, p: usize, seed: u64) -> Array2<f64> {
    // cheap deterministic values in [0, 1)
    Array2::from_shape_fn((n, p), |(i, j)| {
        let h = (i as u64 * 2654435761 + j as u64 * 40503 + seed).wrapping_mul(0x9E3779B97F4A7C15);
        (h >> 11) as f64 / (1u64 << 53) as f64
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_family_is_symmetric(g in graph(), alpha in 0.0f64..=1.0, beta in 0.0f64..3.0) {
        let s = build_symmetric(&g, alpha, beta).unwrap().to_dense();
        for u in 0..g.num_nodes() {
            for v in 0..u {
                prop_assert!((s[[u, v]] - s[[v, u]]).abs() <= 1e-15 * s[[u, v]].abs().max(1.0));
            }
        }
    }

    #[test]
    fn row_normalized_rows_sum_to_one(g in graph(), alpha in 0.0f64..=1.0, beta in 0.0f64..3.0) {
        let op = build_row_normalized(&g, alpha, beta).unwrap();
        for s in op.row_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn apply_matches_dense_product(
        g in graph(),
        alpha in 0.0f64..=1.0,
        beta in 0.0f64..3.0,
        row in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let family = if row { Family::RowNormalized } else { Family::Symmetric };
        let op = build(&g, ConvParams::new(alpha, beta, family)).unwrap();
        let x = features(g.num_nodes(), 3, seed);
        let dense = op.to_dense();
        let diff = &op.apply(x.view()).unwrap() - &dense.dot(&x);
        prop_assert!(diff.iter().all(|d| d.abs() < 1e-12));
        let diff = &op.apply_transpose(x.view()).unwrap() - &dense.t().dot(&x);
        prop_assert!(diff.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn norm_bound_holds(g in graph(), alpha in 0.0f64..=1.0, beta in 0.0f64..3.0, seed in any::<u64>()) {
        let z = features(g.num_nodes(), 4, seed);
        let report = check_lemma31(&g, alpha, beta, &z).unwrap();
        prop_assert_eq!(report.num_violations(), 0);
    }

    #[test]
    fn spearman_is_bounded_and_rank_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = spearman(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            let squashed: Vec<f64> = x.iter().map(|v| v.atan()).collect();
            prop_assert!((spearman(&squashed, &y).unwrap() - r).abs() < 1e-12);
            prop_assert!((spearman(&y, &x).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_triangle_inequality(seed in any::<u64>(), n in 3usize..20) {
        let x = features(n, 3, seed);
        let d = pairwise_euclidean(x.view());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn curvature_sum_identity(g in graph()) {
        // sum over edges of (4 - d_u - d_v + 3t) = 4m - sum_u d_u^2 + 9 * triangles
        let c = forman_curvature(&g).unwrap();
        let m = g.num_edges() as f64;
        let sq: f64 = (0..g.num_nodes()).map(|u| (g.neighbor_count(u) as f64).powi(2)).sum();
        let mut triangles = 0usize;
        for (u, v, _) in g.edges() {
            triangles += g.neighbors(u).iter().filter(|w| g.has_edge(v, **w)).count();
        }
        let expected = 4.0 * m - sq + 3.0 * triangles as f64;
        prop_assert!((c.values().iter().sum::<f64>() - expected).abs() < 1e-9);
    }
}
