//! Measurements on embedding spaces.

pub mod curvature;
pub mod distance;
pub mod gw;
pub mod pca;
pub mod profile;

pub use curvature::{forman_curvature, reconstruct_graph, CurvatureSummary};
pub use distance::{
    diffusion_kernel, distance_spearman, graph_distance, graph_distance_with, pairwise_euclidean,
    spearman, DistanceMatrix, GraphDistance,
};
pub use gw::{gromov_wasserstein, GwConfig, GwResult};
pub use pca::{pca, pca_project, Pca};
pub use profile::{degree_norm_spearman, norm_degree_profile, DegreeBucket, ProfileRow};
