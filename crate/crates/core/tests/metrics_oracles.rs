use approx::assert_abs_diff_eq;
use convgeom::graph::random_graph;
use convgeom::metrics::{
    diffusion_kernel, distance_spearman, gromov_wasserstein, pairwise_euclidean, pca, spearman,
    DistanceMatrix, GwConfig,
};
use convgeom::Graph;
use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_matrix(rng: &mut StdRng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, p), || rng.random_range(-2.0..2.0))
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix; eigenvalues
/// descending with eigenvectors as columns.
fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (values, vectors)
}

#[test]
fn pca_matches_jacobi_oracle() {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..10 {
        let n = rng.random_range(8..40);
        let p = rng.random_range(2..7);
        // anisotropic data so the spectrum is well separated
        let mut x = random_matrix(&mut rng, n, p);
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            col *= 1.0 + 1.5 * j as f64;
        }
        let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
        let xc = &x - &mean;
        let cov = xc.t().dot(&xc) / (n as f64 - 1.0);
        let (values, vectors) = jacobi_eigen(&cov);
        let k = 2.min(p);
        let got = pca(x.view(), k).unwrap();
        for c in 0..k {
            assert_abs_diff_eq!(got.eigenvalues[c], values[c], epsilon = 1e-7 * values[0]);
            let dot: f64 = (0..p).map(|r| got.components[[c, r]] * vectors[[r, c]]).sum();
            assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-6);
        }
        let coords = xc.dot(&got.components.t());
        assert_abs_diff_eq!(got.coords, coords, epsilon = 1e-9);
    }
}

#[test]
fn euclidean_matches_naive() {
    let mut rng = StdRng::seed_from_u64(2);
    let x = random_matrix(&mut rng, 25, 4);
    let d = pairwise_euclidean(x.view());
    for i in 0..25 {
        assert_eq!(d.get(i, i), 0.0);
        for j in 0..25 {
            let naive: f64 = (0..4).map(|k| (x[[i, k]] - x[[j, k]]).powi(2)).sum::<f64>().sqrt();
            assert_abs_diff_eq!(d.get(i, j), naive, epsilon = 1e-10);
            assert_eq!(d.get(i, j), d.get(j, i));
        }
    }
}

#[test]
fn nearby_points_keep_their_distance() {
    let x = ndarray::array![[1e6, 1e6], [1e6 + 1e-4, 1e6], [0.0, 0.0]];
    let d = pairwise_euclidean(x.view());
    assert_abs_diff_eq!(d.get(0, 1), 1e-4, epsilon = 1e-9);
}

#[test]
fn spearman_without_ties_matches_closed_form() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(3..50);
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let rank = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            let mut r = vec![0.0; v.len()];
            for (pos, &i) in idx.iter().enumerate() {
                r[i] = pos as f64;
            }
            r
        };
        let (rx, ry) = (rank(&x), rank(&y));
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        let nf = n as f64;
        let expected = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        assert_abs_diff_eq!(spearman(&x, &y).unwrap(), expected, epsilon = 1e-12);
    }
}

#[test]
fn spearman_of_constant_input_is_undefined() {
    assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn embeddings_equal_to_features_correlate_perfectly() {
    let mut rng = StdRng::seed_from_u64(4);
    let x = random_matrix(&mut rng, 30, 5);
    let h = &x * 0.25;
    let r = distance_spearman(&pairwise_euclidean(x.view()), &pairwise_euclidean(h.view()), 1_000_000, 0)
        .unwrap();
    assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
}

#[test]
fn diffusion_kernel_on_a_path() {
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let k = diffusion_kernel(&g, 0.5).unwrap();
    for i in 0..4usize {
        for j in 0..4usize {
            let hops = i.abs_diff(j) as f64;
            assert_abs_diff_eq!(k[[i, j]], (-hops * hops / 0.5).exp(), epsilon = 1e-15);
        }
    }
}

#[test]
fn diffusion_kernel_is_zero_across_components() {
    let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
    let k = diffusion_kernel(&g, 0.5).unwrap();
    assert_eq!(k[[0, 2]], 0.0);
    assert_eq!(k[[1, 1]], 1.0);
}

#[test]
fn gw_between_different_spaces() {
    let mut rng = StdRng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 12, 2);
    let b = random_matrix(&mut rng, 9, 3);
    let da = pairwise_euclidean(a.view());
    let db = pairwise_euclidean(b.view());
    let cfg = GwConfig::default();
    let ab = gromov_wasserstein(&da, &db, &cfg).unwrap();
    assert!(ab.value > 1e-3);
    assert!(ab.marginal_error() <= 1e-9);
    assert_eq!(ab.coupling.dim(), (12, 9));
    // the objective of the returned coupling is the reported value
    let (n, m) = (12, 9);
    let mut obj = 0.0;
    for i in 0..n {
        for k in 0..n {
            for j in 0..m {
                for l in 0..m {
                    obj += (da.get(i, k) - db.get(j, l)).powi(2) * ab.coupling[[i, j]] * ab.coupling[[k, l]];
                }
            }
        }
    }
    assert_abs_diff_eq!(ab.value, obj, epsilon = 1e-9);
    // a scaled copy of a space has a positive but smaller distance than a very different one
    let scaled = DistanceMatrix::new(da.values() * 1.1).unwrap();
    let near = gromov_wasserstein(&da, &scaled, &cfg).unwrap();
    assert!(near.value < ab.value);
}

#[test]
fn gw_subsample_is_deterministic() {
    let g = random_graph(60, 0.05, 3).unwrap();
    let d = convgeom::metrics::graph_distance(&g, 0.5).unwrap();
    let cfg = GwConfig {
        subsample: Some(20),
        ..GwConfig::default()
    };
    let a = gromov_wasserstein(&d, &d, &cfg).unwrap();
    let b = gromov_wasserstein(&d, &d, &cfg).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.support, b.support);
}
