use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::conv::{self, ConvParams};
use crate::error::{Error, Result};
use crate::gcn::{self, TrainConfig};
use crate::graph::DatasetBundle;
use crate::metrics::curvature::curvature_on_edges;
use crate::metrics::{
    degree_norm_spearman, distance_spearman, forman_curvature, gromov_wasserstein,
    graph_distance_with, norm_degree_profile, pairwise_euclidean, pca_project, reconstruct_graph,
    spearman, GraphDistance, GwConfig, ProfileRow,
};
use crate::plot::{emit_svg_scatter, ColorBy};

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryOptions {
    /// Kernel width of the diffusion graph distance.
    pub eps: f64,
    pub distance: GraphDistance,
    pub gw: GwConfig,
    /// Node pairs used for distance correlations before sampling kicks in.
    pub max_pairs: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions {
            eps: 0.5,
            distance: GraphDistance::OneMinusKernel,
            gw: GwConfig::default(),
            max_pairs: 1_000_000,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureStats {
    pub mean: f64,
    pub sd: f64,
    pub edges: usize,
}

/// Everything measured on one trained model. Correlations that are
/// undefined (a constant input) are `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub dataset: String,
    pub params: ConvParams,
    pub train: TrainConfig,
    pub test_accuracy: f64,
    pub degree_norm_spearman: Option<f64>,
    pub spearman_graph_embedding: Option<f64>,
    pub spearman_feature_embedding: Option<f64>,
    pub gw_graph_embedding: f64,
    pub gw_feature_embedding: f64,
    pub curvature_mean_original: f64,
    pub curvature_mean_reconstructed: f64,
    /// Original edges scored in both graphs.
    pub curvature_spearman: Option<f64>,
    pub curvature_original: CurvatureStats,
    pub curvature_reconstructed: CurvatureStats,
    pub norm_degree_profile: Vec<ProfileRow>,
    pub svgs: Vec<String>,
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains one model on the bundle's split and measures its embeddings.
pub fn run_geometry(
    bundle: &DatasetBundle,
    params: ConvParams,
    train: &TrainConfig,
    opts: &GeometryOptions,
) -> Result<DiagnosticsReport> {
    let op = conv::build(&bundle.graph, params)?;
    let result = gcn::train_with_operator(bundle, &op, train)?;
    let h = &result.embeddings;
    let graph = &bundle.graph;
    let n = bundle.num_nodes();

    let unweighted: Vec<usize> = (0..n).map(|u| graph.neighbor_count(u)).collect();
    let profile = norm_degree_profile(h.view(), &unweighted)?;
    let degree_norm = defined(degree_norm_spearman(h.view(), graph.degrees()))?;

    let d_graph = graph_distance_with(graph, opts.eps, opts.distance)?;
    let d_feat = pairwise_euclidean(bundle.features.view());
    let d_emb = pairwise_euclidean(h.view());
    let seed = opts.gw.seed;
    let sp_graph = defined(distance_spearman(&d_graph, &d_emb, opts.max_pairs, seed))?;
    let sp_feat = defined(distance_spearman(&d_feat, &d_emb, opts.max_pairs, seed))?;
    let gw_graph = gromov_wasserstein(&d_graph, &d_emb, &opts.gw)?.value;
    let gw_feat = gromov_wasserstein(&d_feat, &d_emb, &opts.gw)?.value;

    let original = forman_curvature(graph)?;
    let rebuilt_graph = reconstruct_graph(h.view(), graph.num_edges())?;
    let rebuilt = forman_curvature(&rebuilt_graph)?;
    let edge_list: Vec<(usize, usize)> = original.edges.iter().map(|e| (e.0, e.1)).collect();
    let rescored = curvature_on_edges(&rebuilt_graph, &edge_list);
    let curvature_spearman = defined(spearman(&original.values(), &rescored))?;

    let mut svgs = Vec::new();
    if let Some(dir) = &opts.out_dir {
        let k = 2.min(h.ncols()).min(n);
        if k == 2 {
            let coords = pca_project(h.view(), 2)?;
            let by_class = dir.join("pca_by_class.svg");
            let title = format!("{} embeddings, {} alpha={} beta={}", bundle.name, params.family, params.alpha, params.beta);
            emit_svg_scatter(coords.view(), ColorBy::Class(&bundle.labels), &title, &by_class)?;
            let log_degree: Vec<f64> = graph.degrees().iter().map(|d| (1.0 + d).ln()).collect();
            let by_degree = dir.join("pca_by_degree.svg");
            emit_svg_scatter(coords.view(), ColorBy::Scalar(&log_degree), &format!("{title} (log degree)"), &by_degree)?;
            svgs.extend([path_string(&by_class), path_string(&by_degree)]);
        }
    }

    Ok(DiagnosticsReport {
        dataset: bundle.name.clone(),
        params,
        train: train.clone(),
        test_accuracy: result.test_accuracy,
        degree_norm_spearman: degree_norm,
        spearman_graph_embedding: sp_graph,
        spearman_feature_embedding: sp_feat,
        gw_graph_embedding: gw_graph,
        gw_feature_embedding: gw_feat,
        curvature_mean_original: original.mean,
        curvature_mean_reconstructed: rebuilt.mean,
        curvature_spearman,
        curvature_original: CurvatureStats {
            mean: original.mean,
            sd: original.sd,
            edges: original.edges.len(),
        },
        curvature_reconstructed: CurvatureStats {
            mean: rebuilt.mean,
            sd: rebuilt.sd,
            edges: rebuilt.edges.len(),
        },
        norm_degree_profile: profile,
        svgs,
    })
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}
