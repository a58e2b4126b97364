//! `convgeom`: experiment driver.
//!
//! Exit status: 0 on success, 1 on IO failure, 2 on invalid input, 3 when a
//! bound check finds a violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convgeom::experiments::{
    self, replica_template, run_bounds, run_bounds_on, run_geometry, run_structural, run_sweep,
    run_synthetic, write_json, write_results_csv, write_structural_csv, BoundsConfig,
    GeometryOptions, Scenario, SweepConfig, SweepResult,
};
use convgeom::geometry::StructuralConfig;
use convgeom::graph::{generate_hub_periphery, load_dataset, random_split};
use convgeom::metrics::GraphDistance;
use convgeom::plot::{emit_svg_lines, Series};
use convgeom::{ConvParams, DatasetBundle, Error, Family, SyntheticConfig, TrainConfig};
use serde_json::json;

/// Training-set size of the hub-periphery experiment when none is given.
const SYNTHETIC_TRAIN_COUNT: usize = 88;

#[derive(Parser, Debug)]
#[command(name = "convgeom", version, about = "Graph-convolution geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Accuracy sweep over the alpha/beta grid on a dataset directory.
    Sweep(SweepArgs),
    /// Hub-periphery noise experiment.
    Synthetic(SyntheticArgs),
    /// Distances between structurally equivalent nodes of two replicas.
    Structural(StructuralArgs),
    /// Geometry diagnostics of one trained model.
    Geometry(GeometryArgs),
    /// Checks the norm and perturbation bounds; exits 3 on a violation.
    Bounds(BoundsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FamilyArg {
    Sym,
    Row,
    Both,
}

impl FamilyArg {
    fn families(self) -> Vec<Family> {
        match self {
            FamilyArg::Sym => vec![Family::Symmetric],
            FamilyArg::Row => vec![Family::RowNormalized],
            FamilyArg::Both => Family::BOTH.to_vec(),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DistanceArg {
    OneMinusKernel,
    KernelInduced,
}

#[derive(Args, Debug, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.02)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            seed,
            weight_decay: self.weight_decay,
            hidden_dim: self.hidden,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
    family: FamilyArg,
    /// Comma-separated alpha values; default 0.1,0.2,...,1.0.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Comma-separated beta values; default 0,1.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fresh random training set of this size per trial.
    #[arg(long)]
    train_count: Option<usize>,
    #[command(flatten)]
    train: TrainArgs,
}

impl GridArgs {
    fn config(&self, default_train_count: Option<usize>) -> SweepConfig {
        SweepConfig {
            families: self.family.families(),
            alphas: or_default(&self.alpha, experiments::default_alpha_grid),
            betas: or_default(&self.beta, experiments::default_beta_grid),
            trials: self.trials,
            seed: self.seed,
            train: self.train.config(self.seed),
            train_count: self.train_count.or(default_train_count),
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct SyntheticArgs {
    /// uniform, degree_increasing, degree_flipped or all.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct StructuralArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
    family: FamilyArg,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature noise scale; 0 makes twins identical.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Sym)]
    family: FamilyArg,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    train_count: Option<usize>,
    /// Diffusion-kernel width.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = DistanceArg::OneMinusKernel)]
    graph_distance: DistanceArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Check this dataset's graph instead of random graphs.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    graphs: usize,
    #[arg(long, default_value_t = 30)]
    max_nodes: usize,
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    #[arg(long, default_value_t = 3)]
    mc_templates: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Multiplies every bound before comparison (harness self-test).
    #[arg(long, default_value_t = 1.0, hide = true)]
    bound_scale: f64,
}

fn or_default(values: &[f64], default: fn() -> Vec<f64>) -> Vec<f64> {
    if values.is_empty() {
        default()
    } else {
        values.to_vec()
    }
}

enum Failure {
    Error(Error),
    BoundViolation(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Synthetic(a) => synthetic(a),
        Command::Structural(a) => structural(a),
        Command::Geometry(a) => geometry(a),
        Command::Bounds(a) => bounds(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::BoundViolation(n)) => {
            eprintln!("error: {n} bound violation(s)");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn parse_scenario(name: &str) -> Result<Scenario, Error> {
    Scenario::parse(name).ok_or_else(|| {
        Error::Validation(format!(
            "unknown scenario {name:?}; expected uniform, degree_increasing or degree_flipped"
        ))
    })
}

/// results.csv, summary.json and one accuracy-versus-alpha plot per beta.
fn write_sweep_outputs(result: &SweepResult, cfg: &SweepConfig, dir: &Path) -> Result<(), Error> {
    create_dir(dir)?;
    write_results_csv(&result.records, &dir.join("results.csv"))?;
    let mut svgs = Vec::new();
    for &beta in &cfg.betas {
        let series: Vec<Series> = cfg
            .families
            .iter()
            .map(|&f| Series {
                label: f.to_string(),
                points: result.alpha_curve(f, beta),
            })
            .collect();
        let name = format!("accuracy_beta{beta}.svg");
        emit_svg_lines(
            &series,
            &format!("{}: test accuracy, beta={beta}", result.dataset),
            "alpha",
            "mean accuracy",
            &dir.join(&name),
        )?;
        svgs.push(name);
    }
    let summary = json!({
        "dataset": result.dataset,
        "config": cfg,
        "cells": result.summary,
        "svgs": svgs,
    });
    write_json(&summary, &dir.join("summary.json"))
}

fn sweep(a: SweepArgs) -> CliResult {
    let bundle = load_dataset(&a.dataset)?;
    let cfg = a.grid.config(None);
    let result = run_sweep(&bundle, &cfg)?;
    write_sweep_outputs(&result, &cfg, &a.grid.out)?;
    print_cells(&result);
    Ok(())
}

fn synthetic(a: SyntheticArgs) -> CliResult {
    let cfg = a.grid.config(Some(SYNTHETIC_TRAIN_COUNT));
    let scenarios = if a.scenario == "all" {
        Scenario::ALL.to_vec()
    } else {
        vec![parse_scenario(&a.scenario)?]
    };
    cfg.validate()?;
    for &scenario in &scenarios {
        let result = run_synthetic(scenario, &SyntheticConfig::default(), &cfg)?;
        let dir = if scenarios.len() == 1 {
            a.grid.out.clone()
        } else {
            a.grid.out.join(scenario.name())
        };
        write_sweep_outputs(&result, &cfg, &dir)?;
        print_cells(&result);
    }
    Ok(())
}

fn print_cells(result: &SweepResult) {
    for s in &result.summary {
        println!(
            "{} {} alpha={} beta={}: {:.4} +- {:.4}",
            result.dataset, s.family, s.alpha, s.beta, s.mean, s.sd
        );
    }
}

fn structural(a: StructuralArgs) -> CliResult {
    let cfg = StructuralConfig {
        sigma: a.sigma,
        trials: a.trials,
        seed: a.seed,
        hidden_dim: a.hidden,
        ..StructuralConfig::default()
    };
    let alphas = or_default(&a.alpha, experiments::default_alpha_grid);
    let families = a.family.families();
    let template = replica_template()?;
    let stats = run_structural(&template, &families, &alphas, a.beta, &cfg)?;
    create_dir(&a.out)?;
    write_structural_csv(&stats, &a.out.join("results.csv"))?;

    let top_bucket = stats
        .iter()
        .flat_map(|s| s.classes.iter().map(|c| c.bucket))
        .max_by_key(|b| b.lo);
    let series: Vec<Series> = families
        .iter()
        .map(|&f| Series {
            label: f.to_string(),
            points: stats
                .iter()
                .filter(|s| s.family == f)
                .filter_map(|s| {
                    let c = s.classes.iter().find(|c| Some(c.bucket) == top_bucket)?;
                    Some((s.alpha, c.mean_distance))
                })
                .collect(),
        })
        .collect();
    let svg = "high_degree_distance.svg";
    emit_svg_lines(
        &series,
        "mean twin distance, highest degree class",
        "alpha",
        "mean distance",
        &a.out.join(svg),
    )?;
    let violations: usize = stats.iter().map(|s| s.bound_violations).sum();
    write_json(
        &json!({ "config": cfg, "stats": stats, "bound_violations": violations, "svgs": [svg] }),
        &a.out.join("summary.json"),
    )?;
    for s in &stats {
        println!(
            "{} alpha={} beta={}: mean distance {:.4e}, max {:.4e}, bound violations {}",
            s.family, s.alpha, s.beta, s.mean_distance, s.max_distance, s.bound_violations
        );
    }
    Ok(())
}

fn geometry(a: GeometryArgs) -> CliResult {
    let family = match a.family {
        FamilyArg::Sym => Family::Symmetric,
        FamilyArg::Row => Family::RowNormalized,
        FamilyArg::Both => {
            return Err(Error::Validation("geometry takes a single family".into()).into())
        }
    };
    let params = ConvParams::new(a.alpha, a.beta, family);
    params.validate()?;
    let mut bundle: DatasetBundle = match (&a.dataset, &a.scenario) {
        (Some(dir), _) => load_dataset(dir)?,
        (None, Some(name)) => {
            let synth = SyntheticConfig::default()
                .with_noise(parse_scenario(name)?.noise_mode())
                .with_seed(a.seed);
            generate_hub_periphery(&synth)?
        }
        (None, None) => unreachable!("clap requires one of --dataset and --scenario"),
    };
    let train_count = match (a.train_count, &bundle.split, &a.scenario) {
        (Some(n), _, _) => Some(n),
        (None, None, Some(_)) => Some(SYNTHETIC_TRAIN_COUNT),
        (None, None, None) => {
            return Err(Error::Validation(format!(
                "dataset {} has no split; pass --train-count",
                bundle.name
            ))
            .into())
        }
        (None, Some(_), _) => None,
    };
    if let Some(n) = train_count {
        bundle.split = Some(random_split(
            bundle.num_nodes(),
            n,
            a.seed ^ experiments::SPLIT_SEED_OFFSET,
        )?);
    }
    create_dir(&a.out)?;
    let opts = GeometryOptions {
        eps: a.eps,
        distance: match a.graph_distance {
            DistanceArg::OneMinusKernel => GraphDistance::OneMinusKernel,
            DistanceArg::KernelInduced => GraphDistance::KernelInduced,
        },
        out_dir: Some(a.out.clone()),
        ..GeometryOptions::default()
    };
    let report = run_geometry(&bundle, params, &a.train.config(a.seed), &opts)?;
    write_json(&report, &a.out.join("summary.json"))?;
    println!(
        "{} {} alpha={} beta={}: test accuracy {:.4}",
        report.dataset, family, a.alpha, a.beta, report.test_accuracy
    );
    Ok(())
}

fn bounds(a: BoundsArgs) -> CliResult {
    let defaults = BoundsConfig::default();
    let cfg = BoundsConfig {
        alphas: if a.alpha.is_empty() { defaults.alphas } else { a.alpha },
        betas: if a.beta.is_empty() { defaults.betas } else { a.beta },
        num_graphs: a.graphs,
        max_nodes: a.max_nodes,
        seed: a.seed,
        mc_templates: a.mc_templates,
        mc_draws: a.draws,
        delta: a.delta,
        bound_scale: a.bound_scale,
        ..defaults
    };
    let report = match &a.dataset {
        Some(dir) => run_bounds_on(&[load_dataset(dir)?.graph], &cfg)?,
        None => run_bounds(&cfg)?,
    };
    create_dir(&a.out)?;
    write_json(&report, &a.out.join("summary.json"))?;
    for c in &report.norm_bound {
        println!(
            "norm bound alpha={} beta={}: {} nodes, {} violations, worst slack {:.3e}",
            c.alpha, c.beta, c.nodes_checked, c.violations, c.worst_slack
        );
    }
    for c in &report.monte_carlo {
        println!(
            "perturbation {} alpha={} beta={}: {} nodes, mean violations {}, quantile violations {}",
            c.family, c.alpha, c.beta, c.nodes_checked, c.mean_violations, c.quantile_violations
        );
    }
    if report.total_violations > 0 {
        return Err(Failure::BoundViolation(report.total_violations));
    }
    Ok(())
}
