//! Square-loss Gromov-Wasserstein discrepancy between two finite metric
//! spaces with uniform weights.
//!
//! Conditional gradient on the coupling: each step linearises the quadratic
//! objective, solves the resulting transport problem with log-domain
//! Sinkhorn scaling, rounds the plan onto the exact marginals and moves
//! towards it with an exact line search. The entropic regularisation is
//! halved every outer step down to a floor, so late plans are close to
//! unregularised vertices.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwConfig {
    /// Initial regularisation relative to `median(D1) * median(D2)`.
    pub epsilon_reg: f64,
    pub max_outer: usize,
    pub max_sinkhorn: usize,
    /// Stopping tolerance on the objective; Sinkhorn stops once marginal
    /// errors are below `tol` or a `1e-4` fraction of the smallest mass.
    pub tol: f64,
    pub subsample: Option<usize>,
    pub seed: u64,
}

impl Default for GwConfig {
    fn default() -> Self {
        GwConfig {
            epsilon_reg: 5e-3,
            max_outer: 50,
            max_sinkhorn: 200,
            tol: 1e-9,
            subsample: Some(300),
            seed: 0,
        }
    }
}

impl GwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::validation("GW tolerance must be positive"));
        }
        if !(self.epsilon_reg > 0.0) {
            return Err(Error::validation("GW regularisation must be positive"));
        }
        if self.max_outer == 0 || self.max_sinkhorn == 0 {
            return Err(Error::validation("GW iteration limits must be positive"));
        }
        if self.subsample == Some(0) {
            return Err(Error::validation("GW subsample size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwResult {
    pub value: f64,
    /// `n x m`, rows sum to `1/n`, columns to `1/m`.
    pub coupling: Array2<f64>,
    pub converged: bool,
    /// Objective after each outer step, starting with the initial plan.
    pub objective_trace: Vec<f64>,
    /// Indices of the points used from each space after subsampling.
    pub support: (Vec<usize>, Vec<usize>),
}

impl GwResult {
    /// Largest absolute deviation of the coupling marginals from uniform.
    pub fn marginal_error(&self) -> f64 {
        let (n, m) = self.coupling.dim();
        let rows = self
            .coupling
            .rows()
            .into_iter()
            .map(|r| (r.sum() - 1.0 / n as f64).abs());
        let cols = self
            .coupling
            .columns()
            .into_iter()
            .map(|c| (c.sum() - 1.0 / m as f64).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

const EPS_FLOOR_RATIO: f64 = 1e-4;

pub fn gromov_wasserstein(d1: &DistanceMatrix, d2: &DistanceMatrix, cfg: &GwConfig) -> Result<GwResult> {
    cfg.validate()?;
    if d1.size() == 0 || d2.size() == 0 {
        return Err(Error::validation("GW needs two non-empty spaces"));
    }
    let idx1 = subsample(d1.size(), cfg);
    let idx2 = subsample(d2.size(), cfg);
    let c1 = d1.select(&idx1).values().clone();
    let c2 = d2.select(&idx2).values().clone();
    let (n, m) = (c1.nrows(), c2.nrows());
    let p = Array1::from_elem(n, 1.0 / n as f64);
    let q = Array1::from_elem(m, 1.0 / m as f64);

    let const_c = {
        let r = (&c1 * &c1).dot(&p);
        let c = (&c2 * &c2).dot(&q);
        Array2::from_shape_fn((n, m), |(i, j)| r[i] + c[j])
    };
    let cross = |t: &Array2<f64>| c1.dot(t).dot(&c2.t());
    let objective = |t: &Array2<f64>| ((&const_c - &(cross(t) * 2.0)) * t).sum().max(0.0);

    let scale = (median_off_diagonal(&c1) * median_off_diagonal(&c2)).max(f64::MIN_POSITIVE);
    let mut eps = cfg.epsilon_reg * scale;
    let eps_floor = eps * EPS_FLOOR_RATIO;

    let mut t = initial_plan(&c1, &c2, &p, &q, cfg);
    let mut f = objective(&t);
    let mut trace = vec![f];
    let mut converged = false;
    let mut warm = Potentials::zeros(n, m);
    for _ in 0..cfg.max_outer {
        let ct = cross(&t);
        let grad = (&const_c - &(&ct * 2.0)) * 2.0;
        let target = sinkhorn_log(&grad, &p, &q, eps, cfg.max_sinkhorn, sinkhorn_tol(cfg, n.max(m)), &mut warm);
        let target = round_to_marginals(target, &p, &q);
        let delta = &target - &t;

        let cd = cross(&delta);
        let a = -2.0 * (&cd * &delta).sum();
        let b = (&const_c * &delta).sum() - 2.0 * ((&cd * &t).sum() + (&ct * &delta).sum());
        let tau = if a > 0.0 {
            (-b / (2.0 * a)).clamp(0.0, 1.0)
        } else if a + b < 0.0 {
            1.0
        } else {
            0.0
        };

        let next = &t + &(&delta * tau);
        let f_next = objective(&next);
        let at_floor = eps <= eps_floor;
        if f_next <= f {
            let change = f - f_next;
            t = next;
            f = f_next;
            if at_floor && change <= cfg.tol * f.max(1.0) {
                trace.push(f);
                converged = true;
                break;
            }
        } else if at_floor {
            trace.push(f);
            converged = true;
            break;
        }
        trace.push(f);
        eps = (eps * 0.5).max(eps_floor);
    }

    Ok(GwResult {
        value: f,
        coupling: t,
        converged,
        objective_trace: trace,
        support: (idx1, idx2),
    })
}

fn subsample(n: usize, cfg: &GwConfig) -> Vec<usize> {
    match cfg.subsample {
        Some(k) if k < n => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng::stream(cfg.seed, 1));
            let mut idx = idx[..k].to_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..n).collect(),
    }
}

fn median_off_diagonal(c: &Array2<f64>) -> f64 {
    let n = c.nrows();
    let mut v: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| c[[i, j]])
        .collect();
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    let med = v[v.len() / 2];
    if med > 0.0 {
        med
    } else {
        v.last().copied().filter(|&x| x > 0.0).unwrap_or(1.0)
    }
}

/// Starting plan from matching sorted distance rows: entry `(i, j)` costs
/// the squared difference between the distance distributions seen from `i`
/// and from `j`. A seeded multiplicative jitter keeps the search off the
/// symmetric saddle point when every row looks alike.
fn initial_plan(
    c1: &Array2<f64>,
    c2: &Array2<f64>,
    p: &Array1<f64>,
    q: &Array1<f64>,
    cfg: &GwConfig,
) -> Array2<f64> {
    let grid = c1.nrows().max(c2.nrows());
    let profiles = |c: &Array2<f64>| -> Vec<Vec<f64>> {
        c.rows()
            .into_iter()
            .map(|r| {
                let mut v = r.to_vec();
                v.sort_by(f64::total_cmp);
                (0..grid)
                    .map(|k| quantile_grid(&v, k, grid))
                    .collect()
            })
            .collect()
    };
    let (a, b) = (profiles(c1), profiles(c2));
    let cost = Array2::from_shape_fn((a.len(), b.len()), |(i, j)| {
        a[i].iter().zip(&b[j]).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / grid as f64
    });
    let mut entries: Vec<f64> = cost.iter().copied().filter(|&v| v > 0.0).collect();
    let plan = if entries.is_empty() {
        Array2::from_shape_fn(cost.dim(), |(i, j)| p[i] * q[j])
    } else {
        entries.sort_by(f64::total_cmp);
        let eps = cfg.epsilon_reg * EPS_FLOOR_RATIO * entries[entries.len() / 2];
        sinkhorn_log(&cost, p, q, eps, cfg.max_sinkhorn, sinkhorn_tol(cfg, p.len().max(q.len())), &mut Potentials::zeros(p.len(), q.len()))
    };
    let mut rng = rng::stream(cfg.seed, 2);
    let jittered = plan.mapv(|v| v * (1.0 + 0.5 * rng.random::<f64>()));
    round_to_marginals(jittered, p, q)
}

/// Value at position `k` of `grid` evenly spaced quantile levels.
fn quantile_grid(sorted: &[f64], k: usize, grid: usize) -> f64 {
    if grid == 1 || sorted.len() == 1 {
        return sorted[0];
    }
    let pos = k as f64 / (grid - 1) as f64 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + it.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn sinkhorn_tol(cfg: &GwConfig, size: usize) -> f64 {
    cfg.tol.max(1e-4 / size as f64)
}

/// Dual potentials, reused as the starting point of the next solve.
struct Potentials {
    f: Array1<f64>,
    g: Array1<f64>,
}

impl Potentials {
    fn zeros(n: usize, m: usize) -> Self {
        Potentials {
            f: Array1::zeros(n),
            g: Array1::zeros(m),
        }
    }
}

/// Row-wise `eps * (log target - logsumexp((pot - cost) / eps))` with `cost`
/// given row-major as `rows x pot.len()`.
fn soft_min_update(out: &mut Array1<f64>, target_log: &Array1<f64>, pot: &[f64], cost: &[f64], eps: f64) {
    let m = pot.len();
    let mut buf = vec![0.0; m];
    for (i, o) in out.iter_mut().enumerate() {
        let c = &cost[i * m..(i + 1) * m];
        let mut max = f64::NEG_INFINITY;
        for j in 0..m {
            buf[j] = (pot[j] - c[j]) / eps;
            max = max.max(buf[j]);
        }
        let sum: f64 = buf.iter().map(|v| (v - max).exp()).sum();
        *o = eps * (target_log[i] - (max + sum.ln()));
    }
}

fn sinkhorn_log(
    cost: &Array2<f64>,
    p: &Array1<f64>,
    q: &Array1<f64>,
    eps: f64,
    max_iter: usize,
    tol: f64,
    warm: &mut Potentials,
) -> Array2<f64> {
    const CHECK_EVERY: usize = 10;
    let (n, m) = cost.dim();
    let lp = p.mapv(f64::ln);
    let lq = q.mapv(f64::ln);
    let c = cost.as_standard_layout();
    let c = c.as_slice().expect("standard layout");
    let ct = cost.t().as_standard_layout().into_owned();
    let ct = ct.as_slice().expect("standard layout");
    let Potentials { f, g } = warm;
    let plan = |f: &Array1<f64>, g: &Array1<f64>| {
        Array2::from_shape_fn((n, m), |(i, j)| ((f[i] + g[j] - cost[[i, j]]) / eps).exp())
    };
    for it in 0..max_iter {
        soft_min_update(f, &lp, g.as_slice().expect("contiguous"), c, eps);
        soft_min_update(g, &lq, f.as_slice().expect("contiguous"), ct, eps);
        if (it + 1) % CHECK_EVERY != 0 && it + 1 != max_iter {
            continue;
        }
        // columns are exact after the g update; check the rows
        let mut err = 0.0f64;
        for i in 0..n {
            let row = (0..m).map(|j| (f[i] + g[j] - c[i * m + j]) / eps);
            err = err.max((log_sum_exp(row).exp() - p[i]).abs());
        }
        if err <= tol {
            break;
        }
    }
    plan(f, g)
}

/// Moves a non-negative plan onto the exact marginals `p`, `q`: scale rows
/// and columns down where they overshoot, then distribute the remaining
/// deficit as a rank-one correction.
fn round_to_marginals(mut t: Array2<f64>, p: &Array1<f64>, q: &Array1<f64>) -> Array2<f64> {
    for (mut row, &pi) in t.rows_mut().into_iter().zip(p) {
        let s = row.sum();
        if s > pi {
            row *= pi / s;
        }
    }
    for (mut col, &qj) in t.columns_mut().into_iter().zip(q) {
        let s = col.sum();
        if s > qj {
            col *= qj / s;
        }
    }
    let er: Array1<f64> = p - &t.sum_axis(ndarray::Axis(1));
    let ec: Array1<f64> = q - &t.sum_axis(ndarray::Axis(0));
    let total = er.sum();
    if total > 0.0 {
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                t[[i, j]] += er[i].max(0.0) * ec[j].max(0.0) / total;
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn two_point(a: f64) -> DistanceMatrix {
        DistanceMatrix::new(array![[0.0, a], [a, 0.0]]).unwrap()
    }

    #[test]
    fn rounding_hits_marginals() {
        let p = Array1::from_elem(3, 1.0 / 3.0);
        let q = Array1::from_elem(2, 0.5);
        let t = round_to_marginals(array![[0.3, 0.1], [0.0, 0.05], [0.2, 0.2]], &p, &q);
        for r in t.rows() {
            assert!((r.sum() - 1.0 / 3.0).abs() < 1e-15);
        }
        for c in t.columns() {
            assert!((c.sum() - 0.5).abs() < 1e-15);
        }
        assert!(t.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn two_point_closed_form() {
        let r = gromov_wasserstein(&two_point(1.0), &two_point(3.0), &GwConfig::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6, "{}", r.value);
        assert!(r.marginal_error() < 1e-12);
    }

    #[test]
    fn trace_is_non_increasing() {
        let d1 = DistanceMatrix::new(array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]]).unwrap();
        let d2 = two_point(0.7);
        let r = gromov_wasserstein(&d1, &d2, &GwConfig::default()).unwrap();
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.coupling.dim(), (3, 2));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = GwConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(gromov_wasserstein(&two_point(1.0), &two_point(1.0), &cfg).is_err());
    }
}
