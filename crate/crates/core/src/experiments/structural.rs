use std::path::Path;

use super::{io_error, par_map};
use crate::conv::{ConvParams, Family};
use crate::error::Result;
use crate::geometry::{structural_distance_experiment, StructuralConfig, StructuralStats};
use crate::graph::{generate_hub_periphery, Graph, SyntheticConfig};

/// Two 20-node cliques, each member rooting a 3-node preferential-attachment
/// tree: 40 clique nodes and 120 periphery nodes.
pub fn replica_template() -> Result<Graph> {
    let cfg = SyntheticConfig {
        num_hubs: 2,
        hub_size: 20,
        periphery_size: 3,
        one_hot_dim: 2,
        ..SyntheticConfig::default()
    };
    Ok(generate_hub_periphery(&cfg)?.graph)
}

/// Structural-replica distances for every family and alpha.
pub fn run_structural(
    template: &Graph,
    families: &[Family],
    alphas: &[f64],
    beta: f64,
    cfg: &StructuralConfig,
) -> Result<Vec<StructuralStats>> {
    let mut grid = Vec::new();
    for &family in families {
        for &alpha in alphas {
            grid.push(ConvParams::new(alpha, beta, family));
        }
    }
    par_map(&grid, |&params| structural_distance_experiment(template, params, cfg))
        .into_iter()
        .collect()
}

/// One row per family, alpha and degree class.
pub fn write_structural_csv(stats: &[StructuralStats], path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from(
        "family,alpha,beta,sigma,degree_class,nodes,mean_distance,mean_sq_distance,q10,q50,q90,mean_bound\n",
    );
    for s in stats {
        for c in &s.classes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.family.short_name(),
                s.alpha,
                s.beta,
                s.sigma,
                c.bucket,
                c.nodes,
                c.mean_distance,
                c.mean_sq_distance,
                c.q10,
                c.q50,
                c.q90,
                c.mean_bound
            );
        }
    }
    std::fs::write(path, out).map_err(io_error(path))
}
