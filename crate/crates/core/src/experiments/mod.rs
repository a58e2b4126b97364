//! Reproducible experiment protocols and their file outputs.
//!
//! Seeds: trial `t` of a run with base seed `s` trains its model with seed
//! `s ^ t`, draws its split with seed `s ^ (t + 1_000_000)` and, for
//! synthetic data, generates its graph with seed `s ^ (t + 2_000_000)`.
//! Every grid point of a trial therefore sees the same data and split.

mod bounds;
mod diagnostics;
mod structural;
mod sweep;

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub use bounds::{run_bounds, run_bounds_on, test_graph, BoundCell, BoundsConfig, BoundsReport, MonteCarloCell};
pub use diagnostics::{run_geometry, CurvatureStats, DiagnosticsReport, GeometryOptions};
pub use structural::{replica_template, run_structural, write_structural_csv};
pub use sweep::{
    degree_radius_correlation, run_sweep, run_synthetic, summarize, write_results_csv, GridSummary,
    Scenario, SweepConfig, SweepResult, TrialRecord,
};

pub const SPLIT_SEED_OFFSET: u64 = 1_000_000;
pub const DATA_SEED_OFFSET: u64 = 2_000_000;

/// `0.1, 0.2, ..., 1.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn default_beta_grid() -> Vec<f64> {
    vec![0.0, 1.0]
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::validation(format!("cannot serialise report: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_error(path))
}

/// Runs `f` over `items`, in parallel when the feature is on; results keep
/// the input order.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
