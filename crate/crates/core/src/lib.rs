//! Two parametrized families of spatial graph-convolution operators and the
//! tools to study what they do to node embeddings.
//!
//! * [`conv`] builds the symmetric family `D_b^-a (A + bI) D_b^-a` and its
//!   row-normalized counterpart as sparse operators.
//! * [`gcn`] is a two-layer GCN with hand-written gradients.
//! * [`geometry`] evaluates the per-node norm bound, the structural-equivalence
//!   distance bounds and checks them against measured embeddings.
//! * [`metrics`] holds the measurement battery: PCA, diffusion-kernel graph
//!   distance, Spearman correlation, Gromov-Wasserstein, Forman curvature.
//! * [`experiments`] wires everything into the reproducible protocols driven
//!   by the command-line tool.

pub mod conv;
pub mod error;
pub mod experiments;
pub mod gcn;
pub mod geometry;
pub mod graph;
pub mod metrics;
pub mod plot;
mod rng;

pub use conv::{ConvParams, Family, SparseOperator};
pub use error::{Error, Result};
pub use gcn::{GcnModel, Optimizer, TrainConfig, TrainResult};
pub use graph::{DatasetBundle, FeatureMatrix, Graph, SplitSpec, SyntheticConfig};
