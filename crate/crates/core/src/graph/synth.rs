//! Synthetic graphs: cliques fringed with preferential-attachment trees, and
//! structurally identical replica pairs.

use ndarray::{s, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DatasetBundle, FeatureMatrix, Graph};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const INTER_HUB_ATTEMPTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseMode {
    /// Constant entrywise variance.
    Uniform { variance: f64 },
    /// `sigma_u^2 = exp(3 (-1.5 + ln d_u))`: high-degree nodes are noisy.
    DegreeIncreasing,
    /// Same law applied to the degree at the mirrored rank, so low-degree
    /// nodes get the largest variances.
    DegreeFlipped,
}

impl NoiseMode {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseMode::Uniform { .. } => "uniform",
            NoiseMode::DegreeIncreasing => "degree_increasing",
            NoiseMode::DegreeFlipped => "degree_flipped",
        }
    }
}

/// Parameters of the hub-periphery generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_hubs: usize,
    pub hub_size: usize,
    pub periphery_size: usize,
    pub ba_m: usize,
    pub one_hot_dim: usize,
    pub dummy_dim: usize,
    pub noise_mode: NoiseMode,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_hubs: 4,
            hub_size: 20,
            periphery_size: 10,
            ba_m: 1,
            one_hot_dim: 4,
            dummy_dim: 16,
            noise_mode: NoiseMode::Uniform { variance: 4.0 },
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn with_noise(mut self, noise_mode: NoiseMode) -> Self {
        self.noise_mode = noise_mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_hubs * self.hub_size * (1 + self.periphery_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_hubs == 0 {
            return Err(Error::validation("num_hubs must be at least 1"));
        }
        if self.hub_size < 2 {
            return Err(Error::validation("hub_size must be at least 2"));
        }
        if self.ba_m == 0 {
            return Err(Error::validation("ba_m must be at least 1"));
        }
        if self.one_hot_dim != self.num_hubs {
            return Err(Error::validation(format!(
                "one_hot_dim ({}) must equal num_hubs ({})",
                self.one_hot_dim, self.num_hubs
            )));
        }
        if let NoiseMode::Uniform { variance } = self.noise_mode {
            if !(variance >= 0.0 && variance.is_finite()) {
                return Err(Error::validation(format!("invalid noise variance {variance}")));
            }
        }
        Ok(())
    }
}

/// Preferential-attachment tree (or graph, for `m > 1`) on `size` nodes.
/// Returns local edges; node 0 is the seed node.
fn barabasi_albert(size: usize, m: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if size < 2 {
        return edges;
    }
    // seed: complete graph on the first min(m + 1, size) nodes; for m = 1
    // this is node 0 with node 1 attached to it
    let seed = (m + 1).min(size);
    // every endpoint appears once per incident edge, so uniform draws from
    // it are degree-proportional
    let mut endpoints = Vec::new();
    for a in 0..seed {
        for b in (a + 1)..seed {
            edges.push((a, b));
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    for new in seed..size {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m.min(new) {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, new));
            endpoints.push(t);
            endpoints.push(new);
        }
    }
    edges
}

/// Cliques ("hubs") whose every member roots its own preferential-attachment
/// periphery. Periphery nodes inherit their hub's label.
///
/// Node numbering: hub `h` member `i` is `h * hub_size + i`; the periphery of
/// clique node `c` occupies `C + c * periphery_size ..` where `C` is the total
/// number of clique nodes.
pub fn generate_hub_periphery(config: &SyntheticConfig) -> Result<DatasetBundle> {
    config.validate()?;
    let cliques = config.num_hubs * config.hub_size;
    let n = config.num_nodes();

    let mut base_edges = Vec::new();
    let mut labels = vec![0usize; n];
    for h in 0..config.num_hubs {
        let start = h * config.hub_size;
        for i in 0..config.hub_size {
            labels[start + i] = h;
            for j in (i + 1)..config.hub_size {
                base_edges.push((start + i, start + j));
            }
        }
    }

    let mut rng = rng::stream(config.seed, 0);
    for c in 0..cliques {
        let base = cliques + c * config.periphery_size;
        for (a, b) in barabasi_albert(config.periphery_size, config.ba_m, &mut rng) {
            base_edges.push((base + a, base + b));
        }
        if config.periphery_size > 0 {
            base_edges.push((c, base));
        }
        for p in 0..config.periphery_size {
            labels[base + p] = labels[c];
        }
    }

    let graph = connect_hubs(config, &base_edges)?;
    let features = hub_features(config, &graph, &labels)?;
    DatasetBundle::new(
        format!("hub-periphery-{}", config.noise_mode.name()),
        graph,
        features,
        labels,
        config.num_hubs,
        None,
    )
}

/// One random link per hub towards another hub, retried on a fresh stream
/// until the graph is connected.
fn connect_hubs(config: &SyntheticConfig, base_edges: &[(usize, usize)]) -> Result<Graph> {
    let n = config.num_nodes();
    if config.num_hubs == 1 {
        return Graph::from_edges(n, base_edges);
    }
    for attempt in 0..INTER_HUB_ATTEMPTS {
        let mut rng = rng::stream(config.seed, 1 + attempt);
        let mut edges = base_edges.to_vec();
        for h in 0..config.num_hubs {
            let a = h * config.hub_size + rng.random_range(0..config.hub_size);
            let mut other = rng.random_range(0..config.num_hubs - 1);
            if other >= h {
                other += 1;
            }
            let b = other * config.hub_size + rng.random_range(0..config.hub_size);
            // from_edges drops the pair if it is already present
            edges.push((a, b));
        }
        let graph = Graph::from_edges(n, &edges)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::Generation(format!(
        "hubs still disconnected after {INTER_HUB_ATTEMPTS} attempts"
    )))
}

fn hub_features(config: &SyntheticConfig, graph: &Graph, labels: &[usize]) -> Result<FeatureMatrix> {
    let n = graph.num_nodes();
    let k = config.one_hot_dim;
    let p = k + config.dummy_dim;
    let mut rng = rng::stream(config.seed, 100);
    let mut x = Array2::zeros((n, p));
    for u in 0..n {
        x[[u, labels[u]]] = 1.0;
        for j in k..p {
            x[[u, j]] = StandardNormal.sample(&mut rng);
        }
    }
    let variances = noise_variances(graph, config.noise_mode);
    for (u, var) in variances.iter().enumerate() {
        let sd = var.sqrt();
        for j in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[[u, j]] += sd * e;
        }
    }
    Ok(x)
}

fn degree_noise(d: f64) -> f64 {
    (3.0 * (-1.5 + d.ln())).exp()
}

/// Per-node noise variance for a noise mode.
///
/// For `DegreeFlipped`, nodes are ranked 1..=n by ascending degree (ties by
/// index) and node `u` receives the variance of the degree found at
/// position `n - rank(u)` of the ascending degree list.
pub fn noise_variances(graph: &Graph, mode: NoiseMode) -> Vec<f64> {
    let n = graph.num_nodes();
    let deg = graph.degrees();
    match mode {
        NoiseMode::Uniform { variance } => vec![variance; n],
        NoiseMode::DegreeIncreasing => deg.iter().map(|&d| degree_noise(d)).collect(),
        NoiseMode::DegreeFlipped => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| deg[a].total_cmp(&deg[b]).then(a.cmp(&b)));
            let sorted: Vec<f64> = order.iter().map(|&u| deg[u]).collect();
            let mut out = vec![0.0; n];
            for (i, &u) in order.iter().enumerate() {
                let rank = i + 1;
                out[u] = degree_noise(sorted[n - rank]);
            }
            out
        }
    }
}

/// Two disjoint copies of a template with matched features.
#[derive(Debug, Clone)]
pub struct ReplicaPair {
    /// Both copies in one graph; copy 2 starts at `template_nodes`.
    pub graph: Graph,
    /// `phi[u]` is the copy-2 twin of copy-1 node `u`.
    pub phi: Vec<usize>,
    /// Stacked features of both copies (`2n x p`).
    pub features: FeatureMatrix,
    pub template_nodes: usize,
}

impl ReplicaPair {
    pub fn first_features(&self) -> ndarray::ArrayView2<'_, f64> {
        self.features.slice(s![..self.template_nodes, ..])
    }

    pub fn second_features(&self) -> ndarray::ArrayView2<'_, f64> {
        self.features.slice(s![self.template_nodes.., ..])
    }
}

/// Copy 1 gets standard normal features; copy 2 gets the same features plus
/// i.i.d. `N(0, sigma^2)` noise.
pub fn generate_structural_replicas(
    template: &Graph,
    seed: u64,
    sigma: f64,
    feature_dim: usize,
) -> Result<ReplicaPair> {
    if !template.is_connected() {
        return Err(Error::validation("replica template must be connected"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::validation(format!("invalid noise level {sigma}")));
    }
    let n = template.num_nodes();
    let graph = template.disjoint_union(template);
    let phi = (0..n).map(|u| u + n).collect();

    let mut rng = rng::stream(seed, 0);
    let mut features = Array2::zeros((2 * n, feature_dim));
    for u in 0..n {
        for j in 0..feature_dim {
            features[[u, j]] = StandardNormal.sample(&mut rng);
        }
    }
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    for u in 0..n {
        for j in 0..feature_dim {
            let e = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            features[[u + n, j]] = features[[u, j]] + e;
        }
    }
    Ok(ReplicaPair {
        graph,
        phi,
        features,
        template_nodes: n,
    })
}

/// Connected random graph: a uniform random recursive tree (node `i`
/// attaches to a uniformly chosen earlier node) plus every other pair
/// independently with probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bundle_shape() {
        let b = generate_hub_periphery(&SyntheticConfig::default()).unwrap();
        assert_eq!(b.num_nodes(), 880);
        assert_eq!(b.num_classes, 4);
        assert_eq!(b.features.ncols(), 20);
        assert!(b.graph.is_connected());
    }

    #[test]
    fn clique_nodes_have_degree_at_least_hub_size() {
        let cfg = SyntheticConfig::default();
        let b = generate_hub_periphery(&cfg).unwrap();
        for c in 0..cfg.num_hubs * cfg.hub_size {
            assert!(b.graph.degree(c) >= cfg.hub_size as f64, "node {c}");
        }
    }

    #[test]
    fn periphery_is_a_tree_with_low_degree() {
        let cfg = SyntheticConfig::default();
        let b = generate_hub_periphery(&cfg).unwrap();
        let cliques = cfg.num_hubs * cfg.hub_size;
        for c in 0..cliques {
            let base = cliques + c * cfg.periphery_size;
            let range = base..base + cfg.periphery_size;
            let internal = b
                .graph
                .edges()
                .filter(|(u, v, _)| range.contains(u) && range.contains(v))
                .count();
            assert_eq!(internal, cfg.periphery_size - 1);
            assert!(b.graph.has_edge(c, base));
            for p in range {
                assert_eq!(b.labels[p], b.labels[c]);
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = SyntheticConfig::default().with_seed(42);
        let a = generate_hub_periphery(&cfg).unwrap();
        let b = generate_hub_periphery(&cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);
        let c = generate_hub_periphery(&cfg.clone().with_seed(43)).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn degree_noise_at_unit_degree() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let v = noise_variances(&g, NoiseMode::DegreeIncreasing);
        assert!((v[0] - (-4.5f64).exp()).abs() < 1e-15);
        assert!((v[0] - 0.011109).abs() < 1e-6);
    }

    #[test]
    fn flipped_noise_mirrors_degree_ranks() {
        // path 0-1-2-3 plus leaf 4 on node 1: degrees [1, 3, 2, 1, 1]
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let inc = noise_variances(&g, NoiseMode::DegreeIncreasing);
        let flip = noise_variances(&g, NoiseMode::DegreeFlipped);
        // ascending order by (degree, index): 0, 3, 4, 2, 1
        // node 0 (rank 1) takes the largest degree, node 1 (rank 5) the smallest
        assert_eq!(flip[0], inc[1]);
        assert_eq!(flip[1], inc[0]);
        assert_eq!(flip[2], degree_noise(1.0));
        assert_eq!(flip[3], degree_noise(2.0));
        let mut a = inc.clone();
        let mut b = flip.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SyntheticConfig::default();
        cfg.hub_size = 1;
        assert!(generate_hub_periphery(&cfg).is_err());
        let mut cfg = SyntheticConfig::default();
        cfg.one_hot_dim = 3;
        assert!(generate_hub_periphery(&cfg).is_err());
    }

    #[test]
    fn replicas_without_noise_match() {
        let t = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let r = generate_structural_replicas(&t, 5, 0.0, 4).unwrap();
        assert_eq!(r.first_features(), r.second_features());
        for u in 0..3 {
            assert_eq!(r.graph.degree(u), r.graph.degree(r.phi[u]));
        }
    }

    #[test]
    fn replicas_are_reproducible() {
        let t = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = generate_structural_replicas(&t, 9, 1.0, 3).unwrap();
        let b = generate_structural_replicas(&t, 9, 1.0, 3).unwrap();
        assert_eq!(a.features, b.features);
        assert_ne!(a.first_features(), a.second_features());
    }
}
