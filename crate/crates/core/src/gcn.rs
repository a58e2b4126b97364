//! Two-layer GCN with hand-derived gradients.
//!
//! ```text
//! pre    = S X W1 + b1
//! H      = S relu(pre)          (node embeddings)
//! logits = H W2 + b2
//! ```
//!
//! Training is full-batch softmax cross-entropy over the training mask.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::conv::{self, ConvParams, SparseOperator};
use crate::error::{Error, Result};
use crate::graph::{DatasetBundle, FeatureMatrix};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl GcnModel {
    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    pub fn zeros(p: usize, h: usize, c: usize) -> Self {
        GcnModel {
            w1: Array2::zeros((p, h)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((h, c)),
            b2: Array1::zeros(c),
        }
    }

    /// The four parameter blocks as flat slices, in a fixed order.
    pub fn blocks(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(p: usize, h: usize, c: usize, seed: u64) -> Result<GcnModel> {
    if p == 0 || h == 0 || c == 0 {
        return Err(Error::validation(format!(
            "model dimensions must be positive (p={p}, h={h}, c={c})"
        )));
    }
    let mut rng = rng::stream(seed, 0);
    let mut glorot = |rows: usize, cols: usize| {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
    };
    let w1 = glorot(p, h);
    let w2 = glorot(h, c);
    Ok(GcnModel {
        w1,
        b1: Array1::zeros(h),
        w2,
        b2: Array1::zeros(c),
    })
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Array2<f64>,
    pub embeddings: Array2<f64>,
}

/// Intermediate activations kept for the backward pass.
struct Cache {
    embeddings: Array2<f64>,
    logits: Array2<f64>,
}

fn check_shapes(model: &GcnModel, op: &SparseOperator, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != op.size() {
        return Err(Error::shape(
            format!("{} feature rows", op.size()),
            format!("{} rows", x.nrows()),
        ));
    }
    if x.ncols() != model.input_dim() {
        return Err(Error::shape(
            format!("{} feature columns", model.input_dim()),
            format!("{} columns", x.ncols()),
        ));
    }
    if model.b1.len() != model.hidden_dim()
        || model.w2.nrows() != model.hidden_dim()
        || model.b2.len() != model.num_classes()
    {
        return Err(Error::validation("inconsistent model parameter shapes"));
    }
    Ok(())
}

/// Forward pass from precomputed `S X`.
fn forward_propagated(model: &GcnModel, op: &SparseOperator, sx: &Array2<f64>) -> Result<Cache> {
    let pre = sx.dot(&model.w1) + &model.b1;
    let hidden = pre.mapv(|v| v.max(0.0));
    let embeddings = op.apply(hidden.view())?;
    let logits = embeddings.dot(&model.w2) + &model.b2;
    Ok(Cache {
        embeddings,
        logits,
    })
}

pub fn forward(model: &GcnModel, op: &SparseOperator, x: ArrayView2<'_, f64>) -> Result<Forward> {
    check_shapes(model, op, x)?;
    let sx = op.apply(x)?;
    let cache = forward_propagated(model, op, &sx)?;
    Ok(Forward {
        logits: cache.logits,
        embeddings: cache.embeddings,
    })
}

/// Row-wise log-softmax.
fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

fn check_mask(labels: &[usize], mask: &[usize], n: usize, c: usize) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::validation("loss mask is empty"));
    }
    if labels.len() != n {
        return Err(Error::shape(format!("{n} labels"), labels.len()));
    }
    for &u in mask {
        if u >= n {
            return Err(Error::validation(format!("mask node {u} out of range")));
        }
        if labels[u] >= c {
            return Err(Error::validation(format!(
                "label {} of node {u} out of range for {c} classes",
                labels[u]
            )));
        }
    }
    Ok(())
}

/// The part of the graph the masked loss depends on: the mask, its closed
/// neighbourhood, and the operator rows of the mask restricted to it.
struct Restricted<'a> {
    mask: &'a [usize],
    sx: Array2<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl<'a> Restricted<'a> {
    fn new(op: &SparseOperator, sx: &Array2<f64>, mask: &'a [usize]) -> Self {
        let mut local = vec![usize::MAX; op.size()];
        let mut support = Vec::new();
        let rows = mask
            .iter()
            .map(|&u| {
                op.row(u)
                    .map(|(v, s)| {
                        if local[v] == usize::MAX {
                            local[v] = support.len();
                            support.push(v);
                        }
                        (local[v], s)
                    })
                    .collect()
            })
            .collect();
        Restricted {
            mask,
            sx: sx.select(Axis(0), &support),
            rows,
        }
    }
}

fn loss_and_grads_restricted(model: &GcnModel, r: &Restricted<'_>, labels: &[usize]) -> (f64, GcnModel) {
    let m = r.mask.len();
    let h = model.hidden_dim();
    let c = model.num_classes();
    let scale = 1.0 / m as f64;

    let pre = r.sx.dot(&model.w1) + &model.b1;
    let hidden = pre.mapv(|v| v.max(0.0));
    let mut emb = Array2::zeros((m, h));
    for (i, row) in r.rows.iter().enumerate() {
        let mut out = emb.row_mut(i);
        for &(j, s) in row {
            out.scaled_add(s, &hidden.row(j));
        }
    }
    let logits = emb.dot(&model.w2) + &model.b2;
    let logp = log_softmax(&logits);

    let mut loss = 0.0;
    let mut d_logits = logp.mapv(|lp| lp.exp() * scale);
    for (i, &u) in r.mask.iter().enumerate() {
        loss -= logp[[i, labels[u]]];
        d_logits[[i, labels[u]]] -= scale;
    }
    loss *= scale;
    debug_assert_eq!(d_logits.ncols(), c);

    let w2 = emb.t().dot(&d_logits);
    let b2 = d_logits.sum_axis(Axis(0));
    let d_emb = d_logits.dot(&model.w2.t());
    let mut d_pre = Array2::zeros(pre.raw_dim());
    for (i, row) in r.rows.iter().enumerate() {
        for &(j, s) in row {
            d_pre.row_mut(j).scaled_add(s, &d_emb.row(i));
        }
    }
    Zip::from(&mut d_pre).and(&pre).for_each(|d, &p| {
        if p <= 0.0 {
            *d = 0.0
        }
    });
    let w1 = r.sx.t().dot(&d_pre);
    let b1 = d_pre.sum_axis(Axis(0));

    (loss, GcnModel { w1, b1, w2, b2 })
}

/// Mean masked cross-entropy and its exact gradient.
pub fn loss_and_grads(
    model: &GcnModel,
    op: &SparseOperator,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, GcnModel)> {
    check_shapes(model, op, x)?;
    check_mask(labels, mask, op.size(), model.num_classes())?;
    let sx = op.apply(x)?;
    Ok(loss_and_grads_restricted(model, &Restricted::new(op, &sx, mask), labels))
}

/// Fraction of `ids` whose argmax logit (lowest index on ties) is the label.
pub fn accuracy(logits: &Array2<f64>, labels: &[usize], ids: &[usize]) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::validation("accuracy over an empty id set"));
    }
    let mut correct = 0usize;
    for &u in ids {
        if u >= logits.nrows() || u >= labels.len() {
            return Err(Error::validation(format!("node {u} out of range")));
        }
        let row = logits.row(u);
        let mut best = 0;
        for (k, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = k;
            }
        }
        if best == labels[u] {
            correct += 1;
        }
    }
    Ok(correct as f64 / ids.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.02,
            epochs: 200,
            seed: 0,
            weight_decay: 0.0,
            hidden_dim: 32,
            optimizer: Optimizer::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::validation(format!("invalid learning rate {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::validation("weight_decay must be >= 0"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::validation("hidden_dim must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub final_model: GcnModel,
    pub test_accuracy: f64,
    pub train_loss_curve: Vec<f64>,
    /// `S relu(S X W1 + b1)` under the final parameters.
    pub embeddings: FeatureMatrix,
    pub logits: Array2<f64>,
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: GcnModel,
    v: GcnModel,
    t: i32,
}

fn step(
    model: &mut GcnModel,
    grads: &GcnModel,
    cfg: &TrainConfig,
    adam: &mut Option<Adam>,
) {
    let wd = cfg.weight_decay;
    match adam {
        None => {
            for (p, g) in model.blocks_mut().into_iter().zip(grads.blocks()) {
                for (p, g) in p.iter_mut().zip(g) {
                    *p -= cfg.lr * (g + wd * *p);
                }
            }
        }
        Some(state) => {
            state.t += 1;
            let bc1 = 1.0 - state.beta1.powi(state.t);
            let bc2 = 1.0 - state.beta2.powi(state.t);
            let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
            let params = model.blocks_mut();
            let ms = state.m.blocks_mut();
            let vs = state.v.blocks_mut();
            for (((p, g), m), v) in params.into_iter().zip(grads.blocks()).zip(ms).zip(vs) {
                for i in 0..p.len() {
                    let g = g[i] + wd * p[i];
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

/// Full-batch training on the bundle's split; returns test accuracy and
/// the final embeddings.
pub fn train(bundle: &DatasetBundle, params: ConvParams, cfg: &TrainConfig) -> Result<TrainResult> {
    let op = conv::build(&bundle.graph, params)?;
    train_with_operator(bundle, &op, cfg)
}

pub fn train_with_operator(
    bundle: &DatasetBundle,
    op: &SparseOperator,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    let split = bundle
        .split
        .as_ref()
        .ok_or_else(|| Error::validation("training requires a train/test split"))?;
    let x = bundle.features.view();
    let mut model = init_model(x.ncols(), cfg.hidden_dim, bundle.num_classes, cfg.seed)?;
    check_shapes(&model, op, x)?;
    check_mask(&bundle.labels, &split.train_ids, op.size(), bundle.num_classes)?;

    let sx = op.apply(x)?;
    let mut adam = match cfg.optimizer {
        Optimizer::Adam { beta1, beta2, eps } => {
            let (p, h, c) = (model.input_dim(), model.hidden_dim(), model.num_classes());
            Some(Adam {
                beta1,
                beta2,
                eps,
                m: GcnModel::zeros(p, h, c),
                v: GcnModel::zeros(p, h, c),
                t: 0,
            })
        }
        Optimizer::Sgd => None,
    };

    let restricted = Restricted::new(op, &sx, &split.train_ids);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (loss, grads) = loss_and_grads_restricted(&model, &restricted, &bundle.labels);
        curve.push(loss);
        step(&mut model, &grads, cfg, &mut adam);
    }

    let cache = forward_propagated(&model, op, &sx)?;
    let test_accuracy = if split.test_ids.is_empty() {
        f64::NAN
    } else {
        accuracy(&cache.logits, &bundle.labels, &split.test_ids)?
    };
    Ok(TrainResult {
        final_model: model,
        test_accuracy,
        train_loss_curve: curve,
        embeddings: cache.embeddings,
        logits: cache.logits,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::conv::build_symmetric;
    use crate::graph::Graph;

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_model(7, 5, 3, 11).unwrap();
        assert_eq!(a, init_model(7, 5, 3, 11).unwrap());
        assert_ne!(a, init_model(7, 5, 3, 12).unwrap());
        let bound = (6.0f64 / 12.0).sqrt();
        assert!(a.w1.iter().all(|w| w.abs() <= bound));
        assert!(a.b1.iter().all(|&b| b == 0.0));
        assert!(init_model(0, 5, 3, 1).is_err());
    }

    #[test]
    fn zero_first_layer_broadcasts_bias() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let op = build_symmetric(&g, 0.5, 1.0).unwrap();
        let mut m = init_model(2, 4, 3, 0).unwrap();
        m.w1.fill(0.0);
        m.b2 = Array1::from(vec![0.1, -0.2, 0.3]);
        let x = Array2::from_elem((3, 2), 1.7);
        let f = forward(&m, &op, x.view()).unwrap();
        for row in f.logits.rows() {
            assert_eq!(row, m.b2);
        }
    }

    #[test]
    fn uniform_logits_give_log_c() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let op = build_symmetric(&g, 0.5, 1.0).unwrap();
        let mut m = init_model(2, 4, 5, 0).unwrap();
        m.w2.fill(0.0);
        let x = Array2::from_elem((3, 2), 0.3);
        let (loss, _) = loss_and_grads(&m, &op, x.view(), &[0, 1, 4], &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(loss, 5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let op = build_symmetric(&g, 0.5, 1.0).unwrap();
        let m = init_model(1, 2, 2, 0).unwrap();
        let x = Array2::ones((2, 1));
        assert!(loss_and_grads(&m, &op, x.view(), &[0, 1], &[]).is_err());
    }

    #[test]
    fn accuracy_rules() {
        let logits = ndarray::array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        assert_eq!(accuracy(&logits, &[0, 1, 0], &[0, 1, 2]).unwrap(), 1.0);
        let flat = Array2::zeros((4, 3));
        assert_eq!(accuracy(&flat, &[0, 1, 0, 2], &[0, 1, 2, 3]).unwrap(), 0.5);
        assert!(accuracy(&flat, &[0, 1, 0, 2], &[]).is_err());
    }

    #[test]
    fn shape_mismatch() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let op = build_symmetric(&g, 0.5, 1.0).unwrap();
        let m = init_model(3, 2, 2, 0).unwrap();
        assert!(forward(&m, &op, Array2::ones((2, 2)).view()).is_err());
        assert!(forward(&m, &op, Array2::ones((3, 3)).view()).is_err());
    }
}
