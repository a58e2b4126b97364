use std::fmt;

use ndarray::{ArrayView2, Axis};
use serde::{Serialize, Serializer};

use super::distance::spearman;
use crate::error::{Error, Result};
use crate::geometry::quantile_sorted;

/// Logarithmic degree class: `0`, `1`, `2`, `3-4`, `5-8`, `9-16`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeBucket {
    pub lo: usize,
    pub hi: usize,
}

impl DegreeBucket {
    pub fn of(degree: usize) -> Self {
        if degree <= 2 {
            return DegreeBucket {
                lo: degree,
                hi: degree,
            };
        }
        let hi = degree.next_power_of_two();
        DegreeBucket { lo: hi / 2 + 1, hi }
    }

    pub fn contains(&self, degree: usize) -> bool {
        (self.lo..=self.hi).contains(&degree)
    }
}

impl fmt::Display for DegreeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}-{}", self.lo, self.hi)
        }
    }
}

impl Serialize for DegreeBucket {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub bucket: DegreeBucket,
    pub count: usize,
    pub mean_norm: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

fn row_norms(h: ArrayView2<'_, f64>) -> Vec<f64> {
    h.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).collect()
}

/// Embedding norms grouped by degree bucket, in increasing bucket order.
pub fn norm_degree_profile(h: ArrayView2<'_, f64>, degrees: &[usize]) -> Result<Vec<ProfileRow>> {
    if h.nrows() != degrees.len() {
        return Err(Error::shape(h.nrows(), degrees.len()));
    }
    let norms = row_norms(h);
    let mut groups: std::collections::BTreeMap<DegreeBucket, Vec<f64>> = Default::default();
    for (&d, &n) in degrees.iter().zip(&norms) {
        groups.entry(DegreeBucket::of(d)).or_default().push(n);
    }
    Ok(groups
        .into_iter()
        .map(|(bucket, mut v)| {
            let mean_norm = v.iter().sum::<f64>() / v.len() as f64;
            v.sort_by(f64::total_cmp);
            ProfileRow {
                bucket,
                count: v.len(),
                mean_norm,
                q10: quantile_sorted(&v, 0.1),
                q50: quantile_sorted(&v, 0.5),
                q90: quantile_sorted(&v, 0.9),
            }
        })
        .collect())
}

/// Spearman correlation between node degree and embedding norm.
pub fn degree_norm_spearman(h: ArrayView2<'_, f64>, degrees: &[f64]) -> Result<f64> {
    if h.nrows() != degrees.len() {
        return Err(Error::shape(h.nrows(), degrees.len()));
    }
    spearman(degrees, &row_norms(h))
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;

    use super::*;

    #[test]
    fn buckets() {
        let labels: Vec<String> = [0, 1, 2, 3, 4, 5, 8, 9, 16, 17]
            .iter()
            .map(|&d| DegreeBucket::of(d).to_string())
            .collect();
        assert_eq!(
            labels,
            ["0", "1", "2", "3-4", "3-4", "5-8", "5-8", "9-16", "9-16", "17-32"]
        );
        for d in 0..200 {
            assert!(DegreeBucket::of(d).contains(d));
        }
    }

    #[test]
    fn zero_embeddings() {
        let h = Array2::zeros((4, 3));
        let p = norm_degree_profile(h.view(), &[1, 2, 3, 9]).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|r| r.mean_norm == 0.0));
    }

    #[test]
    fn scaled_rows_increase() {
        let degrees = [1, 1, 2, 3, 4, 6, 7, 12, 30];
        let h = Array2::from_shape_fn((degrees.len(), 2), |(i, _)| degrees[i] as f64);
        let p = norm_degree_profile(h.view(), &degrees).unwrap();
        assert!(p.windows(2).all(|w| w[0].mean_norm < w[1].mean_norm));
        assert_eq!(p.iter().map(|r| r.count).sum::<usize>(), degrees.len());
    }
}
