use std::borrow::Cow;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_error, par_map, DATA_SEED_OFFSET, SPLIT_SEED_OFFSET};
use crate::conv::{self, ConvParams, Family};
use crate::error::{Error, Result};
use crate::gcn::{self, TrainConfig};
use crate::graph::{generate_hub_periphery, random_split, DatasetBundle, NoiseMode, SyntheticConfig};
use crate::metrics::degree_norm_spearman;

/// Noise scenario of the hub-periphery experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Uniform,
    DegreeIncreasing,
    DegreeFlipped,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::Uniform,
        Scenario::DegreeIncreasing,
        Scenario::DegreeFlipped,
    ];

    pub fn parse(s: &str) -> Option<Scenario> {
        match s {
            "uniform" => Some(Scenario::Uniform),
            "degree_increasing" => Some(Scenario::DegreeIncreasing),
            "degree_flipped" => Some(Scenario::DegreeFlipped),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        self.noise_mode().name()
    }

    pub fn noise_mode(self) -> NoiseMode {
        match self {
            Scenario::Uniform => NoiseMode::Uniform { variance: 4.0 },
            Scenario::DegreeIncreasing => NoiseMode::DegreeIncreasing,
            Scenario::DegreeFlipped => NoiseMode::DegreeFlipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub families: Vec<Family>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub train: TrainConfig,
    /// Size of a fresh random training set per trial; `None` uses the
    /// dataset's own split.
    pub train_count: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            families: Family::BOTH.to_vec(),
            alphas: super::default_alpha_grid(),
            betas: super::default_beta_grid(),
            trials: 30,
            seed: 0,
            train: TrainConfig::default(),
            train_count: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::validation("trials must be at least 1"));
        }
        if self.families.is_empty() || self.alphas.is_empty() || self.betas.is_empty() {
            return Err(Error::validation("family, alpha and beta grids must be non-empty"));
        }
        for &family in &self.families {
            for &alpha in &self.alphas {
                for &beta in &self.betas {
                    ConvParams::new(alpha, beta, family).validate()?;
                }
            }
        }
        self.train.validate()
    }

    fn grid(&self) -> Vec<ConvParams> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &alpha in &self.alphas {
                for &beta in &self.betas {
                    out.push(ConvParams::new(alpha, beta, family));
                }
            }
        }
        out
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    pub trial: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    /// Sample standard deviation (`n - 1`); 0 for a single trial.
    pub sd: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub dataset: String,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<GridSummary>,
}

impl SweepResult {
    pub fn cell(&self, family: Family, alpha: f64, beta: f64) -> Option<&GridSummary> {
        self.summary
            .iter()
            .find(|s| s.family == family.short_name() && s.alpha == alpha && s.beta == beta)
    }

    /// Mean accuracy per alpha for one family and beta, in grid order.
    pub fn alpha_curve(&self, family: Family, beta: f64) -> Vec<(f64, f64)> {
        self.summary
            .iter()
            .filter(|s| s.family == family.short_name() && s.beta == beta)
            .map(|s| (s.alpha, s.mean))
            .collect()
    }
}

fn family_rank(name: &str) -> usize {
    Family::BOTH
        .iter()
        .position(|f| f.short_name() == name)
        .unwrap_or(usize::MAX)
}

/// Groups records by grid point, ordered by family, alpha, beta.
pub fn summarize(records: &[TrialRecord]) -> Vec<GridSummary> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| {
        family_rank(&a.family)
            .cmp(&family_rank(&b.family))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.beta.total_cmp(&b.beta))
            .then(a.trial.cmp(&b.trial))
    });
    let mut out: Vec<GridSummary> = Vec::new();
    for r in sorted {
        match out.last_mut() {
            Some(s) if s.family == r.family && s.alpha == r.alpha && s.beta == r.beta => {
                s.accuracies.push(r.accuracy)
            }
            _ => out.push(GridSummary {
                family: r.family.clone(),
                alpha: r.alpha,
                beta: r.beta,
                mean: 0.0,
                sd: 0.0,
                accuracies: vec![r.accuracy],
            }),
        }
    }
    for s in &mut out {
        let n = s.accuracies.len() as f64;
        s.mean = s.accuracies.iter().sum::<f64>() / n;
        s.sd = if s.accuracies.len() > 1 {
            (s.accuracies.iter().map(|a| (a - s.mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
    }
    out
}

fn run_trials<'a, F>(name: &str, cfg: &SweepConfig, data: F) -> Result<SweepResult>
where
    F: Fn(u64) -> Result<Cow<'a, DatasetBundle>> + Sync + Send,
{
    cfg.validate()?;
    let grid = cfg.grid();
    let trials: Vec<u64> = (0..cfg.trials as u64).collect();
    let per_trial = par_map(&trials, |&t| -> Result<Vec<TrialRecord>> {
        let bundle = data(t)?;
        let mut bundle = bundle.into_owned();
        if let Some(count) = cfg.train_count {
            bundle.split = Some(random_split(
                bundle.num_nodes(),
                count,
                cfg.seed ^ (t + SPLIT_SEED_OFFSET),
            )?);
        } else if bundle.split.is_none() {
            return Err(Error::validation(format!(
                "dataset {} has no split; pass a training-set size",
                bundle.name
            )));
        }
        let train = TrainConfig {
            seed: cfg.seed ^ t,
            ..cfg.train.clone()
        };
        grid.iter()
            .map(|&params| {
                let op = conv::build(&bundle.graph, params)?;
                let result = gcn::train_with_operator(&bundle, &op, &train)?;
                Ok(TrialRecord {
                    family: params.family.short_name().to_string(),
                    alpha: params.alpha,
                    beta: params.beta,
                    trial: t as usize,
                    accuracy: result.test_accuracy,
                })
            })
            .collect()
    });
    let mut records = Vec::with_capacity(cfg.trials * grid.len());
    for r in per_trial {
        records.extend(r?);
    }
    records.sort_by(|a, b| {
        family_rank(&a.family)
            .cmp(&family_rank(&b.family))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.beta.total_cmp(&b.beta))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(SweepResult {
        dataset: name.to_string(),
        summary: summarize(&records),
        records,
    })
}

/// Trains one model per trial and grid point on a fixed dataset.
pub fn run_sweep(bundle: &DatasetBundle, cfg: &SweepConfig) -> Result<SweepResult> {
    run_trials(&bundle.name, cfg, |_| Ok(Cow::Borrowed(bundle)))
}

/// Hub-periphery experiment: a fresh graph and features per trial.
pub fn run_synthetic(scenario: Scenario, synth: &SyntheticConfig, cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.train_count.is_none() {
        return Err(Error::validation("the synthetic experiment needs a training-set size"));
    }
    let base = synth.clone().with_noise(scenario.noise_mode());
    run_trials(scenario.name(), cfg, |t| {
        let data = base.clone().with_seed(cfg.seed ^ (t + DATA_SEED_OFFSET));
        Ok(Cow::Owned(generate_hub_periphery(&data)?))
    })
}

/// Spearman correlation between degree and embedding norm for an untrained
/// two-layer GCN on a hub-periphery graph generated with `seed`.
pub fn degree_radius_correlation(
    synth: &SyntheticConfig,
    params: ConvParams,
    hidden_dim: usize,
    seed: u64,
) -> Result<f64> {
    let bundle = generate_hub_periphery(&synth.clone().with_seed(seed))?;
    let op = conv::build(&bundle.graph, params)?;
    let model = gcn::init_model(bundle.features.ncols(), hidden_dim, bundle.num_classes, seed)?;
    let h = gcn::forward(&model, &op, bundle.features.view())?.embeddings;
    degree_norm_spearman(h.view(), bundle.graph.degrees())
}

pub fn write_results_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(io_error(path))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::validation(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(family: &str, alpha: f64, trial: usize, accuracy: f64) -> TrialRecord {
        TrialRecord {
            family: family.into(),
            alpha,
            beta: 1.0,
            trial,
            accuracy,
        }
    }

    #[test]
    fn summary_statistics() {
        let recs = vec![
            record("row", 0.5, 0, 0.5),
            record("sym", 0.5, 1, 0.8),
            record("sym", 0.5, 0, 0.6),
            record("sym", 0.1, 0, 0.9),
        ];
        let s = summarize(&recs);
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].family.as_str(), s[0].alpha), ("sym", 0.1));
        assert_eq!(s[0].sd, 0.0);
        assert!((s[1].mean - 0.7).abs() < 1e-12);
        assert!((s[1].sd - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(s[2].family, "row");
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()), Some(s));
        }
        assert_eq!(Scenario::parse("nope"), None);
    }

    #[test]
    fn invalid_grid_is_rejected() {
        let cfg = SweepConfig {
            alphas: vec![1.5],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig {
            trials: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
