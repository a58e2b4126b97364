use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

const MAX_ITERS: usize = 1000;
const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// `k x p`, orthonormal rows.
    pub components: Array2<f64>,
    /// Covariance eigenvalues (denominator `n - 1`), descending.
    pub eigenvalues: Vec<f64>,
    pub mean: Array1<f64>,
    /// `n x k` projection of the centred data.
    pub coords: Array2<f64>,
}

/// Top-`k` principal components by power iteration with deflation.
///
/// Iterates `v <- Xc^T Xc v` without forming the covariance. Each component
/// is oriented so that its largest-magnitude loading is positive.
pub fn pca(x: ArrayView2<'_, f64>, k: usize) -> Result<Pca> {
    let (n, p) = x.dim();
    if k > n.min(p) {
        return Err(Error::validation(format!(
            "{k} components requested from a {n}x{p} matrix"
        )));
    }
    let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(p));
    let xc = &x - &mean;
    let denom = (n.max(2) - 1) as f64;
    let mut components = Array2::zeros((k, p));
    let mut eigenvalues = Vec::with_capacity(k);
    let mut rng = rng::stream(0x5eed, 0);

    for c in 0..k {
        let found = components.slice(ndarray::s![..c, ..]).to_owned();
        let deflate = |v: &mut Array1<f64>| {
            for row in found.rows() {
                let proj = row.dot(v);
                v.scaled_add(-proj, &row);
            }
        };
        let mut v = Array1::from_shape_fn(p, |_| StandardNormal.sample(&mut rng));
        deflate(&mut v);
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..MAX_ITERS {
            let mut w = xc.t().dot(&xc.dot(&v)) / denom;
            deflate(&mut w);
            let next = v.dot(&w);
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            v = w / norm;
            let done = (next - lambda).abs() <= REL_TOL * next.abs();
            lambda = next;
            if done {
                break;
            }
        }
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
        if pivot < 0.0 {
            v.mapv_inplace(|a| -a);
        }
        components.row_mut(c).assign(&v);
        eigenvalues.push(lambda.max(0.0));
    }
    let coords = xc.dot(&components.t());
    Ok(Pca {
        components,
        eigenvalues,
        mean,
        coords,
    })
}

pub fn pca_project(x: ArrayView2<'_, f64>, k: usize) -> Result<Array2<f64>> {
    Ok(pca(x, k)?.coords)
}

fn normalize(v: &mut Array1<f64>) {
    let norm = v.dot(v).sqrt();
    if norm > 0.0 {
        *v /= norm;
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    use super::*;

    #[test]
    fn line_is_one_component() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i as f64) * if j == 0 { 1.0 } else { 2.0 });
        let r = pca(x.view(), 2).unwrap();
        let total: f64 = r.eigenvalues.iter().sum();
        assert!(r.eigenvalues[0] / total > 0.9999);
        assert!(r.components[[0, 1]] > 0.0);
    }

    #[test]
    fn projection_is_centred() {
        let x = array![[1.0, 5.0, 2.0], [3.0, -1.0, 0.5], [7.0, 2.0, 2.0], [0.0, 0.0, 9.0]];
        let c = pca_project(x.view(), 2).unwrap();
        for m in c.mean_axis(Axis(0)).unwrap() {
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn too_many_components() {
        assert!(pca(Array2::<f64>::zeros((3, 2)).view(), 3).is_err());
    }
}
