use std::fs;

use convgeom::graph::{generate_hub_periphery, load_dataset, random_split, write_dataset};
use convgeom::{DatasetBundle, Graph, SyntheticConfig};
use ndarray::array;

fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        num_hubs: 2,
        hub_size: 4,
        periphery_size: 3,
        one_hot_dim: 2,
        dummy_dim: 3,
        ..SyntheticConfig::default()
    }
}

#[test]
fn synthetic_bundle_round_trips() {
    let mut bundle = generate_hub_periphery(&small_config()).unwrap();
    bundle.split = Some(random_split(bundle.num_nodes(), 7, 3).unwrap());
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&bundle, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, bundle);
}

#[test]
fn weighted_edges_round_trip() {
    let graph = Graph::from_weighted_edges(3, &[(0, 1, 0.5), (1, 2, 2.25)]).unwrap();
    let bundle = DatasetBundle::new(
        "weighted",
        graph,
        array![[1.0, 0.1], [0.0, -3.5], [1e-300, 7.0]],
        vec![0, 1, 1],
        2,
        None,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&bundle, dir.path()).unwrap();
    assert!(!dir.path().join("splits.json").exists());
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.graph.weight(1, 2), Some(2.25));
    assert_eq!(back, bundle);
}

#[test]
fn hand_written_directory_is_symmetrized() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("manifest.json"),
        r#"{"name": "toy", "num_nodes": 3, "num_features": 1, "num_classes": 2}"#,
    )
    .unwrap();
    fs::write(p.join("edges.tsv"), "# comment\n0\t1\n1\t0\n2\t1\n").unwrap();
    fs::write(p.join("features.csv"), "1.0\n2.0\n3.0\n").unwrap();
    fs::write(p.join("labels.tsv"), "0\t0\n1\t1\n2\t1\n").unwrap();
    let b = load_dataset(p).unwrap();
    assert_eq!(b.graph.num_edges(), 2);
    assert_eq!(b.graph.degrees(), &[1.0, 2.0, 1.0]);
    assert!(b.split.is_none());
}

#[test]
fn missing_labels_is_an_error() {
    let bundle = generate_hub_periphery(&small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&bundle, dir.path()).unwrap();
    fs::remove_file(dir.path().join("labels.tsv")).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("labels.tsv"), "{err}");
}

#[test]
fn malformed_feature_row_reports_the_line() {
    let bundle = generate_hub_periphery(&small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&bundle, dir.path()).unwrap();
    let path = dir.path().join("features.csv");
    let mut text = fs::read_to_string(&path).unwrap();
    text = text.replacen(',', ",x", 1);
    fs::write(&path, text).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("features.csv:1"), "{err}");
}
