//! Browser bindings for the demo page in `www/`.
//!
//! Three operations, all on a freshly generated hub-periphery graph:
//! the PCA scatter of untrained embeddings, the degree/norm correlation
//! across alpha, and a norm-bound check.

use convgeom::experiments::degree_radius_correlation;
use convgeom::geometry::check_lemma31;
use convgeom::graph::generate_hub_periphery;
use convgeom::metrics::{degree_norm_spearman, pca_project};
use convgeom::plot::{render_lines, render_scatter, ColorBy, Series};
use convgeom::{conv, gcn, ConvParams, Family, Result, SyntheticConfig};
use wasm_bindgen::prelude::*;

const HIDDEN: usize = 32;

/// Smaller than the default benchmark so the page stays responsive.
pub fn demo_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        num_hubs: 3,
        hub_size: 12,
        periphery_size: 6,
        one_hot_dim: 3,
        seed,
        ..SyntheticConfig::default()
    }
}

fn family(row_normalized: bool) -> Family {
    if row_normalized {
        Family::RowNormalized
    } else {
        Family::Symmetric
    }
}

#[wasm_bindgen]
pub struct Embedding {
    svg: String,
    spearman: f64,
}

#[wasm_bindgen]
impl Embedding {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    /// Spearman correlation between degree and embedding norm.
    #[wasm_bindgen(getter)]
    pub fn spearman(&self) -> f64 {
        self.spearman
    }
}

pub fn embedding_scatter(alpha: f64, beta: f64, row_normalized: bool, seed: u64) -> Result<Embedding> {
    let params = ConvParams::new(alpha, beta, family(row_normalized));
    let bundle = generate_hub_periphery(&demo_config(seed))?;
    let op = conv::build(&bundle.graph, params)?;
    let model = gcn::init_model(bundle.features.ncols(), HIDDEN, bundle.num_classes, seed)?;
    let h = gcn::forward(&model, &op, bundle.features.view())?.embeddings;
    let coords = pca_project(h.view(), 2)?;
    let log_degree: Vec<f64> = bundle.graph.degrees().iter().map(|d| (1.0 + d).ln()).collect();
    let title = format!("untrained embeddings, {} alpha={alpha} beta={beta}", params.family);
    Ok(Embedding {
        svg: render_scatter(coords.view(), ColorBy::Scalar(&log_degree), &title)?,
        spearman: degree_norm_spearman(h.view(), bundle.graph.degrees())?,
    })
}

/// Line plot of Spearman(degree, norm) against alpha for both families.
pub fn degree_radius_curve(beta: f64, seed: u64) -> Result<String> {
    let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut series = Vec::new();
    for f in Family::BOTH {
        let mut points = Vec::new();
        for &a in &alphas {
            let r = degree_radius_correlation(&demo_config(seed), ConvParams::new(a, beta, f), HIDDEN, seed)?;
            points.push((a, r));
        }
        series.push(Series {
            label: f.to_string(),
            points,
        });
    }
    Ok(render_lines(
        &series,
        &format!("degree vs embedding norm, beta={beta}"),
        "alpha",
        "Spearman",
    ))
}

/// Norm-bound check with random non-negative features; returns a one-line
/// summary.
pub fn norm_bound_summary(alpha: f64, beta: f64, seed: u64) -> Result<String> {
    let bundle = generate_hub_periphery(&demo_config(seed))?;
    let z = bundle.features.mapv(f64::abs);
    let report = check_lemma31(&bundle.graph, alpha, beta, &z)?;
    let tightest = report
        .nodes
        .iter()
        .filter(|n| n.bound > 0.0)
        .map(|n| n.empirical_norm / n.bound)
        .fold(0.0, f64::max);
    Ok(format!(
        "{} nodes, {} violations, largest norm/bound ratio {:.3}",
        report.nodes.len(),
        report.num_violations(),
        tightest
    ))
}

fn js(e: convgeom::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = embeddingScatter)]
pub fn embedding_scatter_js(alpha: f64, beta: f64, row_normalized: bool, seed: u32) -> Result<Embedding, JsError> {
    embedding_scatter(alpha, beta, row_normalized, seed.into()).map_err(js)
}

#[wasm_bindgen(js_name = degreeRadiusCurve)]
pub fn degree_radius_curve_js(beta: f64, seed: u32) -> Result<String, JsError> {
    degree_radius_curve(beta, seed.into()).map_err(js)
}

#[wasm_bindgen(js_name = normBoundSummary)]
pub fn norm_bound_summary_js(alpha: f64, beta: f64, seed: u32) -> Result<String, JsError> {
    norm_bound_summary(alpha, beta, seed.into()).map_err(js)
}
