use convgeom::experiments::{
    replica_template, run_bounds, run_geometry, run_structural, run_synthetic, summarize,
    write_json, write_results_csv, BoundsConfig, GeometryOptions, Scenario, SweepConfig,
};
use convgeom::geometry::StructuralConfig;
use convgeom::graph::{generate_hub_periphery, random_split};
use convgeom::metrics::GwConfig;
use convgeom::{ConvParams, Family, SyntheticConfig, TrainConfig};

fn small_synth() -> SyntheticConfig {
    SyntheticConfig {
        num_hubs: 2,
        hub_size: 5,
        periphery_size: 4,
        one_hot_dim: 2,
        dummy_dim: 4,
        ..SyntheticConfig::default()
    }
}

fn small_sweep() -> SweepConfig {
    SweepConfig {
        alphas: vec![0.2, 0.6, 1.0],
        betas: vec![0.0, 1.0],
        trials: 3,
        seed: 5,
        train: TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        },
        train_count: Some(10),
        ..SweepConfig::default()
    }
}

#[test]
fn synthetic_sweep_csv_shape_and_determinism() {
    let cfg = small_sweep();
    let a = run_synthetic(Scenario::DegreeIncreasing, &small_synth(), &cfg).unwrap();
    let b = run_synthetic(Scenario::DegreeIncreasing, &small_synth(), &cfg).unwrap();
    assert_eq!(a.records.len(), 2 * 3 * 2 * 3);
    assert_eq!(a.summary.len(), 2 * 3 * 2);

    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_results_csv(&a.records, &pa).unwrap();
    write_results_csv(&b.records, &pb).unwrap();
    let text = std::fs::read_to_string(&pa).unwrap();
    assert_eq!(text, std::fs::read_to_string(&pb).unwrap());
    assert!(text.starts_with("family,alpha,beta,trial,accuracy\n"));
    assert_eq!(text.lines().count(), 1 + a.records.len());

    // summaries are recomputable from the rows
    let mut rdr = csv::Reader::from_path(&pa).unwrap();
    let rows: Vec<convgeom::experiments::TrialRecord> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(summarize(&rows), a.summary);
    for s in &a.summary {
        assert!((0.0..=1.0).contains(&s.mean));
        assert_eq!(s.accuracies.len(), 3);
    }
    write_json(&a.summary, &dir.path().join("summary.json")).unwrap();
}

#[test]
fn grid_points_share_data_within_a_trial() {
    // a grid point seen alone gives the same accuracy as inside the full grid
    let cfg = small_sweep();
    let full = run_synthetic(Scenario::Uniform, &small_synth(), &cfg).unwrap();
    let single = SweepConfig {
        families: vec![Family::RowNormalized],
        alphas: vec![0.6],
        betas: vec![1.0],
        ..cfg
    };
    let one = run_synthetic(Scenario::Uniform, &small_synth(), &single).unwrap();
    let cell = full.cell(Family::RowNormalized, 0.6, 1.0).unwrap();
    assert_eq!(cell.accuracies, one.summary[0].accuracies);
}

#[test]
fn synthetic_needs_a_training_size() {
    let cfg = SweepConfig {
        train_count: None,
        ..small_sweep()
    };
    assert!(run_synthetic(Scenario::Uniform, &small_synth(), &cfg).is_err());
}

#[test]
fn bounds_hold_and_corrupted_bounds_fail() {
    let cfg = BoundsConfig {
        num_graphs: 10,
        mc_templates: 2,
        mc_draws: 500,
        ..BoundsConfig::default()
    };
    let ok = run_bounds(&cfg).unwrap();
    assert_eq!(ok.total_violations, 0);
    assert_eq!(ok.norm_bound.len(), 5 * 3);
    assert!(ok.norm_bound.iter().all(|c| c.worst_slack >= 0.0));
    let bad = run_bounds(&BoundsConfig {
        bound_scale: 0.5,
        ..cfg
    })
    .unwrap();
    assert!(bad.total_violations > 0);
}

#[test]
fn structural_without_noise_gives_identical_twins() {
    let template = replica_template().unwrap();
    assert_eq!(template.num_nodes(), 160);
    let cfg = StructuralConfig {
        sigma: 0.0,
        trials: 3,
        ..StructuralConfig::default()
    };
    let stats = run_structural(&template, &Family::BOTH, &[0.3, 0.9], 1.0, &cfg).unwrap();
    assert_eq!(stats.len(), 4);
    for s in stats {
        assert!(s.max_distance <= 1e-12);
        assert_eq!(s.bound_violations, 0);
    }
}

#[test]
fn structural_high_degree_distance_varies_with_alpha() {
    let template = replica_template().unwrap();
    let cfg = StructuralConfig {
        trials: 10,
        ..StructuralConfig::default()
    };
    let stats = run_structural(&template, &[Family::Symmetric], &[0.1, 0.5, 0.9], 1.0, &cfg).unwrap();
    let top: Vec<f64> = stats
        .iter()
        .map(|s| s.classes.iter().max_by_key(|c| c.bucket).unwrap().mean_distance)
        .collect();
    assert!(top[0] > top[1] && top[1] > top[2], "{top:?}");
}

#[test]
fn geometry_report_has_every_diagnostic() {
    let mut bundle = generate_hub_periphery(&small_synth()).unwrap();
    bundle.split = Some(random_split(bundle.num_nodes(), 15, 0).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let opts = GeometryOptions {
        out_dir: Some(dir.path().to_path_buf()),
        gw: GwConfig {
            subsample: Some(40),
            ..GwConfig::default()
        },
        ..GeometryOptions::default()
    };
    let train = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let report = run_geometry(&bundle, ConvParams::gcn(), &train, &opts).unwrap();
    assert_eq!(report.svgs.len(), 2);
    for svg in &report.svgs {
        let text = std::fs::read_to_string(svg).unwrap();
        assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    }
    let json = serde_json::to_value(&report).unwrap();
    for key in [
        "degree_norm_spearman",
        "spearman_graph_embedding",
        "spearman_feature_embedding",
        "gw_graph_embedding",
        "gw_feature_embedding",
        "curvature_mean_original",
        "curvature_mean_reconstructed",
        "curvature_spearman",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report.curvature_original.edges, bundle.graph.num_edges());
    assert_eq!(report.curvature_reconstructed.edges, bundle.graph.num_edges());
}
