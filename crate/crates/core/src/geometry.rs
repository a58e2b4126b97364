//! Closed-form geometry of convolved embeddings and empirical checks.
//!
//! Two results are implemented here:
//!
//! * A per-node norm bound for the symmetric family,
//!   `||(SZ)_u|| <= ||Z||_{2,inf} ((d_u+b)^(1-2a) - a Dbar_u / (d_u+b)^(2a)
//!   + a(a+1)M/2 * D2bar_u / (d_u+b)^(1+2a))`, where `Dbar_u` and `D2bar_u`
//!   are the edge-weighted mean (squared) degree differences around `u`.
//! * Mean and high-probability bounds on `||(S eps W)_u||^2` for Gaussian
//!   feature perturbations, which control the distance between embeddings of
//!   structurally equivalent nodes.
//!
//! The constant `M` comes from the remainder of a second-order expansion of
//! `(1 + x)^-a`. Three versions of it are in circulation; [`MConstant`]
//! exposes all of them and [`MConstant::Conservative`] is the one for which
//! the norm bound is a theorem.

use ndarray::{Array2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conv::{self, inv_pow, ConvParams, Family};
use crate::error::{Error, Result};
use crate::gcn;
use crate::graph::{generate_structural_replicas, Graph};
use crate::metrics::profile::DegreeBucket;
use crate::rng;

/// Neighbourhood degree-heterogeneity statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyStats {
    /// `sum_v A_uv (d_v - d_u) / (d_u + b)`.
    pub delta_bar: Vec<f64>,
    /// `sum_v A_uv (d_v - d_u)^2 / (d_u + b)`.
    pub delta_sq_bar: Vec<f64>,
    pub degree: Vec<f64>,
    pub aug_degree: Vec<f64>,
}

/// The self term carries weight `beta` but a zero degree difference, so only
/// true neighbours contribute.
pub fn topology_stats(graph: &Graph, beta: f64) -> TopologyStats {
    let n = graph.num_nodes();
    let deg = graph.degrees();
    let mut delta_bar = vec![0.0; n];
    let mut delta_sq_bar = vec![0.0; n];
    let mut aug_degree = vec![0.0; n];
    for u in 0..n {
        let a = deg[u] + beta;
        aug_degree[u] = a;
        if a == 0.0 {
            continue;
        }
        let (mut s1, mut s2) = (0.0, 0.0);
        for (v, w) in graph.weighted_neighbors(u) {
            let diff = deg[v] - deg[u];
            s1 += w * diff;
            s2 += w * diff * diff;
        }
        delta_bar[u] = s1 / a;
        delta_sq_bar[u] = s2 / a;
    }
    TopologyStats {
        delta_bar,
        delta_sq_bar,
        degree: deg.to_vec(),
        aug_degree,
    }
}

/// Which expansion-remainder constant to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MConstant {
    /// `((d_max + b) / (b + 1))^(2 + a)`: bounds `(1 + xi)^-(a+2)` for every
    /// neighbour of degree at least 1.
    #[default]
    Conservative,
    /// `((d_max + b) / (b + 1))^2`.
    Squared,
    /// `(d_max + b)^(2 + a)`.
    Unnormalized,
}

impl MConstant {
    pub const ALL: [MConstant; 3] = [
        MConstant::Conservative,
        MConstant::Squared,
        MConstant::Unnormalized,
    ];

    pub fn value(self, max_degree: f64, alpha: f64, beta: f64) -> f64 {
        let ratio = (max_degree + beta) / (beta + 1.0);
        match self {
            MConstant::Conservative => ratio.powf(2.0 + alpha),
            MConstant::Squared => ratio * ratio,
            MConstant::Unnormalized => (max_degree + beta).powf(2.0 + alpha),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MConstant::Conservative => "conservative",
            MConstant::Squared => "squared",
            MConstant::Unnormalized => "unnormalized",
        }
    }
}

/// Per-node norm bound with the conservative constant.
pub fn lemma31_bound(graph: &Graph, alpha: f64, beta: f64, z_norm_max: f64) -> Vec<f64> {
    lemma31_bound_with(graph, alpha, beta, z_norm_max, MConstant::Conservative)
}

pub fn lemma31_bound_with(
    graph: &Graph,
    alpha: f64,
    beta: f64,
    z_norm_max: f64,
    m: MConstant,
) -> Vec<f64> {
    let stats = topology_stats(graph, beta);
    let m = m.value(graph.max_degree(), alpha, beta);
    (0..graph.num_nodes())
        .map(|u| {
            let a = stats.aug_degree[u];
            if a == 0.0 {
                // isolated node without self loop: the row of S is empty
                return 0.0;
            }
            let lead = a.powf(1.0 - 2.0 * alpha);
            let first = alpha * stats.delta_bar[u] * inv_pow(a, 2.0 * alpha);
            let second = alpha * (alpha + 1.0) * m / 2.0
                * stats.delta_sq_bar[u]
                * inv_pow(a, 1.0 + 2.0 * alpha);
            z_norm_max * (lead - first + second)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeBound {
    pub node: usize,
    pub empirical_norm: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub beta: f64,
    pub z_norm_max: f64,
    pub m: MConstant,
    pub nodes: Vec<NodeBound>,
}

impl BoundReport {
    pub fn violations(&self) -> impl Iterator<Item = &NodeBound> {
        self.nodes.iter().filter(|b| !b.satisfied)
    }

    pub fn num_violations(&self) -> usize {
        self.violations().count()
    }

    /// Smallest `bound - empirical` over nodes.
    pub fn worst_slack(&self) -> f64 {
        self.nodes
            .iter()
            .map(|b| b.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub m: MConstant,
    /// Multiplies every bound before comparison; 1 for real checks.
    pub bound_scale: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            m: MConstant::Conservative,
            bound_scale: 1.0,
        }
    }
}

/// Compares `||(SZ)_u||` under the symmetric operator to the norm bound.
pub fn check_lemma31(graph: &Graph, alpha: f64, beta: f64, z: &Array2<f64>) -> Result<BoundReport> {
    check_lemma31_with(graph, alpha, beta, z, CheckOptions::default())
}

pub fn check_lemma31_with(
    graph: &Graph,
    alpha: f64,
    beta: f64,
    z: &Array2<f64>,
    opts: CheckOptions,
) -> Result<BoundReport> {
    let op = conv::build_symmetric(graph, alpha, beta)?;
    let sz = op.apply(z.view())?;
    let z_norm_max = z
        .axis_iter(Axis(0))
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max);
    let bounds = lemma31_bound_with(graph, alpha, beta, z_norm_max, opts.m);
    let nodes = sz
        .axis_iter(Axis(0))
        .zip(bounds)
        .enumerate()
        .map(|(u, (row, bound))| {
            let empirical_norm = row.dot(&row).sqrt();
            let bound = bound * opts.bound_scale;
            NodeBound {
                node: u,
                empirical_norm,
                bound,
                satisfied: empirical_norm <= bound + BOUND_TOLERANCE,
                slack: bound - empirical_norm,
            }
        })
        .collect();
    Ok(BoundReport {
        alpha,
        beta,
        z_norm_max,
        m: opts.m,
        nodes,
    })
}

/// Mean and high-probability bounds on `||(S eps W)_u||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma41Bound {
    /// Upper bound on the mean.
    pub mu: f64,
    pub deviation: f64,
    /// `mu + deviation`: exceeded with probability at most `delta`.
    pub high_prob_bound: f64,
    /// The exact mean `sigma^2 ||W||_F^2 sum_v S_uv^2`.
    pub exact_mean: f64,
}

/// Bounds for node `u`.
///
/// `w_fro` enters the mean, `w_norm` the deviation term; callers normally
/// pass the Frobenius norm for both.
///
/// Symmetric family:
/// `mu = s^2 |W|^2 ((d+b)^(2-4a) + 2a|Dbar| (d+b)^(-4a) + a(2a+1) M D2bar (d+b)^(-1-4a))`
/// and deviation `2 sqrt(2) s |W| (d+b)^(1-2a) sqrt(1 + 2a|Dbar|/(d+b) + a(2a+1)M) ln(1/delta)`.
///
/// Row-normalized family, with `s_uv = A_uv (d_v+b)^-a` over the closed
/// neighbourhood: `mu = s^2 |W|^2 max_v s_uv / sum_v s_uv`, which follows
/// from `sum s^2 <= max s * sum s`, and deviation
/// `2 sqrt(2) sqrt(sum_j var_j) ln(1/delta)` from the per-coordinate
/// variances of the perturbation.
#[allow(clippy::too_many_arguments)]
pub fn lemma41_bounds(
    graph: &Graph,
    u: usize,
    alpha: f64,
    beta: f64,
    sigma: f64,
    w_norm: f64,
    w_fro: f64,
    delta: f64,
    family: Family,
) -> Result<Lemma41Bound> {
    if u >= graph.num_nodes() {
        return Err(Error::validation(format!("node {u} out of range")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::validation(format!("delta = {delta} outside (0, 1)")));
    }
    ConvParams::new(alpha, beta, family).validate()?;
    let deg = graph.degrees();
    let a = deg[u] + beta;
    if a <= 0.0 {
        return Err(Error::DivisionByZero { node: u });
    }
    let log_term = (1.0 / delta).ln();
    let var_scale = sigma * sigma;

    // closed-neighbourhood weights A_uv (d_v + b)^-a, self weight b
    let mut weights: Vec<f64> = graph
        .weighted_neighbors(u)
        .map(|(v, w)| w * inv_pow(deg[v] + beta, alpha))
        .collect();
    if beta > 0.0 {
        weights.push(beta * inv_pow(a, alpha));
    }

    match family {
        Family::Symmetric => {
            let stats = topology_stats(graph, beta);
            let m = MConstant::Conservative.value(graph.max_degree(), alpha, beta);
            let dbar = stats.delta_bar[u].abs();
            let d2bar = stats.delta_sq_bar[u];
            let row_scale = inv_pow(a, alpha);
            let sum_sq: f64 = weights.iter().map(|w| (w * row_scale).powi(2)).sum();
            let exact_mean = var_scale * w_fro * w_fro * sum_sq;
            let mu = var_scale
                * w_fro
                * w_fro
                * (a.powf(2.0 - 4.0 * alpha)
                    + 2.0 * alpha * dbar * inv_pow(a, 4.0 * alpha)
                    + alpha * (2.0 * alpha + 1.0) * m * d2bar * inv_pow(a, 1.0 + 4.0 * alpha));
            let deviation = 2.0 * 2f64.sqrt()
                * sigma
                * w_norm
                * a.powf(1.0 - 2.0 * alpha)
                * (1.0 + 2.0 * alpha * dbar / a + alpha * (2.0 * alpha + 1.0) * m).sqrt()
                * log_term;
            Ok(Lemma41Bound {
                mu,
                deviation,
                high_prob_bound: mu + deviation,
                exact_mean,
            })
        }
        Family::RowNormalized => {
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroRowSum { node: u });
            }
            let max = weights.iter().copied().fold(0.0, f64::max);
            let sum_sq: f64 = weights.iter().map(|w| (w / total).powi(2)).sum();
            let exact_mean = var_scale * w_fro * w_fro * sum_sq;
            let mu = var_scale * w_fro * w_fro * max / total;
            let deviation =
                2.0 * 2f64.sqrt() * (var_scale * w_norm * w_norm * sum_sq).sqrt() * log_term;
            Ok(Lemma41Bound {
                mu,
                deviation,
                high_prob_bound: mu + deviation,
                exact_mean,
            })
        }
    }
}

/// The row-normalized mean exactly as usually displayed,
/// `s^2 |W|^2 / sum_v (d_v+b)^(-2a) / (1+b)`. It is not an upper bound in
/// general (it undershoots whenever the self loop carries much of the
/// row mass) and is kept only for reporting next to [`lemma41_bounds`].
pub fn row_normalized_displayed_mean(
    graph: &Graph,
    u: usize,
    alpha: f64,
    beta: f64,
    sigma: f64,
    w_fro: f64,
) -> f64 {
    let deg = graph.degrees();
    let mut s: f64 = graph
        .neighbors(u)
        .iter()
        .map(|&v| inv_pow(deg[v] + beta, 2.0 * alpha))
        .sum();
    s += inv_pow(deg[u] + beta, 2.0 * alpha);
    sigma * sigma * w_fro * w_fro / s / (1.0 + beta)
}

/// Empirical distribution of `||(S eps W)_u||^2` for every node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloNode {
    pub node: usize,
    pub bound: Lemma41Bound,
    pub empirical_mean: f64,
    /// Standard error of `empirical_mean`.
    pub standard_error: f64,
    pub empirical_quantile: f64,
}

/// Standard errors of slack granted to the sample mean. Where the mean bound
/// is attained (uniform closed-neighbourhood weights, for instance) the
/// sample mean exceeds it about half the time from sampling noise alone.
pub const MC_MEAN_Z: f64 = 4.0;

impl MonteCarloNode {
    /// Sample mean within [`MC_MEAN_Z`] standard errors below `mu` or better.
    pub fn mean_ok(&self) -> bool {
        self.empirical_mean <= self.bound.mu + MC_MEAN_Z * self.standard_error
    }

    /// Sample mean at or below `mu` with no allowance for sampling noise.
    pub fn mean_below_strict(&self) -> bool {
        self.empirical_mean <= self.bound.mu
    }

    pub fn quantile_ok(&self) -> bool {
        self.empirical_quantile <= self.bound.high_prob_bound
    }
}

/// Draws `eps` with i.i.d. `N(0, sigma^2)` entries (`n x W.nrows()`) and
/// records `||(S eps W)_u||^2`; compares the mean to `mu` and the
/// `(1 - delta)`-quantile to `mu + deviation`. The Frobenius norm of `w` is
/// used on both sides of the bound.
pub fn lemma41_monte_carlo(
    graph: &Graph,
    params: ConvParams,
    sigma: f64,
    w: &Array2<f64>,
    delta: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<MonteCarloNode>> {
    if draws == 0 {
        return Err(Error::validation("at least one draw is required"));
    }
    let op = conv::build(graph, params)?;
    let n = graph.num_nodes();
    let p = w.nrows();
    let w_fro = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = rng::stream(seed, 0);

    let mut samples = vec![Vec::with_capacity(draws); n];
    for _ in 0..draws {
        let eps = Array2::from_shape_simple_fn((n, p), || noise.sample(&mut rng));
        let d = op.apply(eps.view())?.dot(w);
        for (u, row) in d.axis_iter(Axis(0)).enumerate() {
            samples[u].push(row.dot(&row));
        }
    }

    samples
        .into_iter()
        .enumerate()
        .map(|(u, mut s)| {
            let bound = lemma41_bounds(
                graph,
                u,
                params.alpha,
                params.beta,
                sigma,
                w_fro,
                w_fro,
                delta,
                params.family,
            )?;
            let count = s.len() as f64;
            let empirical_mean = s.iter().sum::<f64>() / count;
            let var = s.iter().map(|v| (v - empirical_mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
            s.sort_by(f64::total_cmp);
            let empirical_quantile = quantile_sorted(&s, 1.0 - delta);
            Ok(MonteCarloNode {
                node: u,
                bound,
                empirical_mean,
                standard_error: (var / count).sqrt(),
                empirical_quantile,
            })
        })
        .collect()
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Leading term of the symmetric-family distance between two nodes with
/// identical features: `(d_u+b)^(1-2a) - (d_u'+b)^(1-2a)`.
pub fn toy2_leading_term(d_u: f64, d_u2: f64, alpha: f64, beta: f64) -> Result<f64> {
    if d_u < 0.0 || d_u2 < 0.0 || beta < 0.0 {
        return Err(Error::validation("degrees and beta must be non-negative"));
    }
    if d_u + beta == 0.0 || d_u2 + beta == 0.0 {
        return Err(Error::validation("degree and beta cannot both be zero"));
    }
    let e = 1.0 - 2.0 * alpha;
    Ok((d_u + beta).powf(e) - (d_u2 + beta).powf(e))
}

/// Settings for the structural-replica distance experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralConfig {
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    /// Failure probability used for the high-probability part of the bound.
    pub delta: f64,
}

impl Default for StructuralConfig {
    fn default() -> Self {
        StructuralConfig {
            sigma: 1.0,
            trials: 100,
            seed: 0,
            feature_dim: 16,
            hidden_dim: 32,
            delta: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeClassDistance {
    pub bucket: DegreeBucket,
    pub nodes: usize,
    pub mean_distance: f64,
    pub mean_sq_distance: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    /// Mean over trials and nodes of the propagated squared-distance bound.
    pub mean_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralStats {
    pub alpha: f64,
    pub beta: f64,
    pub family: Family,
    pub sigma: f64,
    pub trials: usize,
    pub classes: Vec<DegreeClassDistance>,
    pub mean_distance: f64,
    pub max_distance: f64,
    /// Nodes whose trial-averaged squared distance exceeds their
    /// trial-averaged bound.
    pub bound_violations: usize,
}

/// Distances between embeddings of twin nodes in two replicas of
/// `template`, under freshly initialised (untrained) two-layer GCNs.
///
/// The bound compared against is the structural lemma pushed through the
/// second layer: ReLU is 1-Lipschitz and `S >= 0`, so
/// `||H_u - H_u'||^2 <= (sum_v S_uv) sum_v S_uv ||E_v||^2` where `E = S eps W1`
/// is the first-layer perturbation, and each `||E_v||^2` is bounded by
/// `mu_v + deviation_v`.
pub fn structural_distance_experiment(
    template: &Graph,
    params: ConvParams,
    cfg: &StructuralConfig,
) -> Result<StructuralStats> {
    if cfg.trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    params.validate()?;
    let n = template.num_nodes();
    let template_op = conv::build(template, params)?;
    let row_sums = template_op.row_sums();

    let mut dist = vec![Vec::with_capacity(cfg.trials); n];
    let mut bound_sum = vec![0.0; n];
    for t in 0..cfg.trials as u64 {
        let pair =
            generate_structural_replicas(template, cfg.seed.wrapping_add(t), cfg.sigma, cfg.feature_dim)?;
        let op = conv::build(&pair.graph, params)?;
        let model = gcn::init_model(
            cfg.feature_dim,
            cfg.hidden_dim,
            1,
            cfg.seed.wrapping_add(t).wrapping_add(1_000_000),
        )?;
        let h = gcn::forward(&model, &op, pair.features.view())?.embeddings;
        for u in 0..n {
            let diff = &h.row(u) - &h.row(pair.phi[u]);
            dist[u].push(diff.dot(&diff).sqrt());
        }

        let w_fro = model.w1.iter().map(|v| v * v).sum::<f64>().sqrt();
        let first_layer: Vec<f64> = (0..n)
            .map(|v| {
                lemma41_bounds(
                    template,
                    v,
                    params.alpha,
                    params.beta,
                    cfg.sigma,
                    w_fro,
                    w_fro,
                    cfg.delta,
                    params.family,
                )
                .map(|b| b.high_prob_bound)
            })
            .collect::<Result<_>>()?;
        for u in 0..n {
            let inner: f64 = template_op.row(u).map(|(v, s)| s * first_layer[v]).sum();
            bound_sum[u] += row_sums[u] * inner;
        }
    }

    let trials = cfg.trials as f64;
    let mut bound_violations = 0;
    let mut per_node_bound = vec![0.0; n];
    for u in 0..n {
        per_node_bound[u] = bound_sum[u] / trials;
        let mean_sq = dist[u].iter().map(|d| d * d).sum::<f64>() / trials;
        if mean_sq > per_node_bound[u] + BOUND_TOLERANCE {
            bound_violations += 1;
        }
    }

    let mut buckets: Vec<DegreeBucket> = (0..n)
        .map(|u| DegreeBucket::of(template.neighbor_count(u)))
        .collect();
    let node_bucket = buckets.clone();
    buckets.sort();
    buckets.dedup();
    let classes = buckets
        .into_iter()
        .map(|bucket| {
            let members: Vec<usize> = (0..n).filter(|&u| node_bucket[u] == bucket).collect();
            let mut all: Vec<f64> = members.iter().flat_map(|&u| dist[u].iter().copied()).collect();
            let count = all.len() as f64;
            let mean_distance = all.iter().sum::<f64>() / count;
            let mean_sq_distance = all.iter().map(|d| d * d).sum::<f64>() / count;
            all.sort_by(f64::total_cmp);
            let mean_bound =
                members.iter().map(|&u| per_node_bound[u]).sum::<f64>() / members.len() as f64;
            DegreeClassDistance {
                bucket,
                nodes: members.len(),
                mean_distance,
                mean_sq_distance,
                q10: quantile_sorted(&all, 0.1),
                q50: quantile_sorted(&all, 0.5),
                q90: quantile_sorted(&all, 0.9),
                mean_bound,
            }
        })
        .collect();

    let flat: Vec<f64> = dist.iter().flatten().copied().collect();
    Ok(StructuralStats {
        alpha: params.alpha,
        beta: params.beta,
        family: params.family,
        sigma: cfg.sigma,
        trials: cfg.trials,
        classes,
        mean_distance: flat.iter().sum::<f64>() / flat.len().max(1) as f64,
        max_distance: flat.iter().copied().fold(0.0, f64::max),
        bound_violations,
    })
}
