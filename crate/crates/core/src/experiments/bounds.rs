use ndarray::Array2;
use rand::Rng;
use serde::Serialize;

use super::par_map;
use crate::conv::{ConvParams, Family};
use crate::error::{Error, Result};
use crate::geometry::{check_lemma31_with, lemma41_monte_carlo, CheckOptions, MConstant, MC_MEAN_Z};
use crate::graph::{random_graph, Graph};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub num_graphs: usize,
    pub max_nodes: usize,
    pub feature_dim: usize,
    pub seed: u64,
    /// Graphs (the first ones) that also get the Monte-Carlo check.
    pub mc_templates: usize,
    pub mc_draws: usize,
    pub delta: f64,
    pub sigma: f64,
    /// Multiplies every bound before comparison; only for exercising the
    /// failure path.
    pub bound_scale: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            betas: vec![0.0, 1.0, 2.0],
            num_graphs: 50,
            max_nodes: 30,
            feature_dim: 4,
            seed: 0,
            mc_templates: 3,
            mc_draws: 2000,
            delta: 0.1,
            sigma: 1.0,
            bound_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCell {
    pub alpha: f64,
    pub beta: f64,
    pub nodes_checked: usize,
    pub violations: usize,
    pub worst_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCell {
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    pub nodes_checked: usize,
    /// Sample means above `mu` by more than the sampling-noise allowance.
    pub mean_violations: usize,
    /// Sample means above `mu` at all; informational.
    pub mean_strict_exceedances: usize,
    pub quantile_violations: usize,
    /// Smallest `mu - empirical mean`.
    pub worst_mean_slack: f64,
    /// Smallest `(mu + deviation) - empirical quantile`.
    pub worst_quantile_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub config: BoundsConfig,
    pub norm_bound: Vec<BoundCell>,
    pub monte_carlo: Vec<MonteCarloCell>,
    pub total_violations: usize,
}

/// `i`-th random test graph of a run: connected, 2 to `max_nodes` nodes.
pub fn test_graph(seed: u64, i: u64, max_nodes: usize) -> Result<Graph> {
    let mut r = rng::stream(seed, 10 + i);
    let n = r.random_range(2..=max_nodes.max(2));
    let p = r.random_range(0.0..0.5);
    random_graph(n, p, seed.wrapping_mul(1_000_003).wrapping_add(i))
}

/// Glorot-scaled weights used for the Monte-Carlo check.
fn mc_weights(p: usize, h: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::stream(seed, 3);
    let bound = (6.0 / (p + h) as f64).sqrt();
    Array2::from_shape_simple_fn((p, h), || r.random_range(-bound..bound))
}

/// Norm-bound check on random graphs with random non-negative features, and
/// the Monte-Carlo check of the perturbation bounds on the first few graphs.
pub fn run_bounds(cfg: &BoundsConfig) -> Result<BoundsReport> {
    if cfg.num_graphs == 0 {
        return Err(Error::validation("at least one graph is required"));
    }
    let graphs: Vec<Graph> = (0..cfg.num_graphs as u64)
        .map(|i| test_graph(cfg.seed, i, cfg.max_nodes))
        .collect::<Result<_>>()?;
    run_bounds_on(&graphs, cfg)
}

/// Same checks on caller-supplied graphs; `num_graphs` and `max_nodes` are
/// ignored.
pub fn run_bounds_on(graphs: &[Graph], cfg: &BoundsConfig) -> Result<BoundsReport> {
    if graphs.is_empty() {
        return Err(Error::validation("at least one graph is required"));
    }
    if cfg.feature_dim == 0 || cfg.mc_draws < 2 {
        return Err(Error::validation("feature_dim must be positive and mc_draws at least 2"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) || !(cfg.sigma >= 0.0) {
        return Err(Error::validation("delta must lie in (0, 1) and sigma be non-negative"));
    }
    for &alpha in &cfg.alphas {
        for &beta in &cfg.betas {
            ConvParams::new(alpha, beta, Family::Symmetric).validate()?;
        }
    }
    let features: Vec<Array2<f64>> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut r = rng::stream(cfg.seed, 1_000 + i as u64);
            Array2::from_shape_simple_fn((g.num_nodes(), cfg.feature_dim), || r.random::<f64>())
        })
        .collect();

    let mut cells = Vec::new();
    for &alpha in &cfg.alphas {
        for &beta in &cfg.betas {
            cells.push((alpha, beta));
        }
    }
    let opts = CheckOptions {
        m: MConstant::Conservative,
        bound_scale: cfg.bound_scale,
    };
    let norm_bound: Vec<BoundCell> = par_map(&cells, |&(alpha, beta)| -> Result<BoundCell> {
        let mut cell = BoundCell {
            alpha,
            beta,
            nodes_checked: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
        };
        for (g, z) in graphs.iter().zip(&features) {
            let r = check_lemma31_with(g, alpha, beta, z, opts)?;
            cell.nodes_checked += r.nodes.len();
            cell.violations += r.num_violations();
            cell.worst_slack = cell.worst_slack.min(r.worst_slack());
        }
        Ok(cell)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut mc_grid = Vec::new();
    for family in Family::BOTH {
        for &(alpha, beta) in &cells {
            mc_grid.push(ConvParams::new(alpha, beta, family));
        }
    }
    let templates = &graphs[..cfg.mc_templates.min(graphs.len())];
    let weights = mc_weights(cfg.feature_dim, cfg.feature_dim, cfg.seed);
    let monte_carlo: Vec<MonteCarloCell> = par_map(&mc_grid, |&params| -> Result<MonteCarloCell> {
        let mut cell = MonteCarloCell {
            family: params.family,
            alpha: params.alpha,
            beta: params.beta,
            nodes_checked: 0,
            mean_violations: 0,
            mean_strict_exceedances: 0,
            quantile_violations: 0,
            worst_mean_slack: f64::INFINITY,
            worst_quantile_slack: f64::INFINITY,
        };
        for (i, g) in templates.iter().enumerate() {
            let nodes = lemma41_monte_carlo(
                g,
                params,
                cfg.sigma,
                &weights,
                cfg.delta,
                cfg.mc_draws,
                cfg.seed.wrapping_add(i as u64),
            )?;
            for node in nodes {
                let mean_slack = node.bound.mu * cfg.bound_scale - node.empirical_mean;
                let q_slack = node.bound.high_prob_bound * cfg.bound_scale - node.empirical_quantile;
                cell.nodes_checked += 1;
                cell.mean_violations += usize::from(mean_slack < -MC_MEAN_Z * node.standard_error);
                cell.mean_strict_exceedances += usize::from(mean_slack < 0.0);
                cell.quantile_violations += usize::from(q_slack < 0.0);
                cell.worst_mean_slack = cell.worst_mean_slack.min(mean_slack);
                cell.worst_quantile_slack = cell.worst_quantile_slack.min(q_slack);
            }
        }
        Ok(cell)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let total_violations = norm_bound.iter().map(|c| c.violations).sum::<usize>()
        + monte_carlo
            .iter()
            .map(|c| c.mean_violations + c.quantile_violations)
            .sum::<usize>();
    Ok(BoundsReport {
        config: cfg.clone(),
        norm_bound,
        monte_carlo,
        total_violations,
    })
}
