//! Directory interchange format.
//!
//! ```text
//! manifest.json   {"name", "num_nodes", "num_features", "num_classes"}
//! edges.tsv       u<TAB>v[<TAB>w]   one undirected edge per line, 0-indexed
//! features.csv    dense reals, one row per node, no header
//! labels.tsv      node_id<TAB>class_id
//! splits.json     {"train": [...], "test": [...]}   (optional)
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Graph, SplitSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(io_err(path))
}

fn reader(path: &Path, delimiter: u8) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?))
}

fn field<T: std::str::FromStr>(
    path: &Path,
    record: &csv::StringRecord,
    i: usize,
) -> Result<T> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    let raw = record
        .get(i)
        .ok_or_else(|| parse_err(path, line, format!("missing column {}", i + 1)))?;
    raw.parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {raw:?}")))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(path, line, e.to_string())
}

/// Loads a dataset directory, symmetrizing and deduplicating the edge list.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<DatasetBundle> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_reader(open(&manifest_path)?)
        .map_err(|e| parse_err(&manifest_path, e.line(), e.to_string()))?;
    let n = manifest.num_nodes;

    let edges = read_edges(&dir.join("edges.tsv"))?;
    let graph = Graph::from_weighted_edges(n, &edges)?;

    let features = read_features(&dir.join("features.csv"), n, manifest.num_features)?;
    let labels = read_labels(&dir.join("labels.tsv"), n)?;

    let split_path = dir.join("splits.json");
    let split = if split_path.exists() {
        let split: SplitSpec = serde_json::from_reader(open(&split_path)?)
            .map_err(|e| parse_err(&split_path, e.line(), e.to_string()))?;
        Some(split)
    } else {
        None
    };

    DatasetBundle::new(
        manifest.name,
        graph,
        features,
        labels,
        manifest.num_classes,
        split,
    )
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges = Vec::new();
    for record in reader(path, b'\t')?.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let u = field(path, &record, 0)?;
        let v = field(path, &record, 1)?;
        let w = if record.len() > 2 {
            field(path, &record, 2)?
        } else {
            1.0
        };
        edges.push((u, v, w));
    }
    Ok(edges)
}

fn read_features(path: &Path, n: usize, p: usize) -> Result<Array2<f64>> {
    let mut values = Vec::with_capacity(n * p);
    let mut rows = 0;
    for record in reader(path, b',')?.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != p {
            let line = record.position().map_or(0, |pos| pos.line() as usize);
            return Err(Error::validation(format!(
                "{}:{line}: expected {p} features, found {}",
                path.display(),
                record.len()
            )));
        }
        for i in 0..p {
            values.push(field::<f64>(path, &record, i)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::validation(format!(
            "{}: manifest declares {n} nodes but file has {rows} feature rows",
            path.display()
        )));
    }
    Ok(Array2::from_shape_vec((n, p), values).expect("shape checked"))
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let mut labels = vec![None; n];
    for record in reader(path, b'\t')?.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let node: usize = field(path, &record, 0)?;
        let class: usize = field(path, &record, 1)?;
        if node >= n {
            return Err(Error::validation(format!(
                "{}: label for node {node} out of range for {n} nodes",
                path.display()
            )));
        }
        labels[node] = Some(class);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(u, l)| {
            l.ok_or_else(|| {
                Error::validation(format!("{}: node {u} has no label", path.display()))
            })
        })
        .collect()
}

/// Writes a bundle in the interchange format, creating `dir` if needed.
pub fn write_dataset(bundle: &DatasetBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let manifest = Manifest {
        name: bundle.name.clone(),
        num_nodes: bundle.num_nodes(),
        num_features: bundle.features.ncols(),
        num_classes: bundle.num_classes,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;

    let weighted = !bundle.graph.is_unweighted();
    write_lines(&dir.join("edges.tsv"), |out| {
        for (u, v, w) in bundle.graph.edges() {
            if weighted {
                writeln!(out, "{u}\t{v}\t{w}")?;
            } else {
                writeln!(out, "{u}\t{v}")?;
            }
        }
        Ok(())
    })?;

    write_lines(&dir.join("features.csv"), |out| {
        for row in bundle.features.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    })?;

    write_lines(&dir.join("labels.tsv"), |out| {
        for (u, c) in bundle.labels.iter().enumerate() {
            writeln!(out, "{u}\t{c}")?;
        }
        Ok(())
    })?;

    if let Some(split) = &bundle.split {
        let path = dir.join("splits.json");
        let text = serde_json::to_string(split).expect("split serializes");
        std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    }
    Ok(())
}

fn write_lines(
    path: &PathBuf,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(dir: &Path) {
        std::fs::write(
            dir.join("manifest.json"),
            r#"{"name":"toy","num_nodes":2,"num_features":2,"num_classes":2}"#,
        )
        .unwrap();
        std::fs::write(dir.join("edges.tsv"), "0\t1\n").unwrap();
        std::fs::write(dir.join("features.csv"), "1.0,0.0\n0.0,1.0\n").unwrap();
        std::fs::write(dir.join("labels.tsv"), "0\t0\n1\t1\n").unwrap();
    }

    #[test]
    fn loads_toy_directory() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        let b = load_dataset(tmp.path()).unwrap();
        assert_eq!(b.graph.num_nodes(), 2);
        assert_eq!(b.graph.degrees(), &[1.0, 1.0]);
        assert_eq!(b.labels, vec![0, 1]);
        assert!(b.split.is_none());
    }

    #[test]
    fn missing_labels_names_the_file() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        std::fs::remove_file(tmp.path().join("labels.tsv")).unwrap();
        let err = load_dataset(tmp.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("labels.tsv"));
    }

    #[test]
    fn label_out_of_range() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        std::fs::write(tmp.path().join("labels.tsv"), "0\t0\n1\t5\n").unwrap();
        assert!(matches!(
            load_dataset(tmp.path()).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn manifest_count_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        std::fs::write(tmp.path().join("features.csv"), "1.0,0.0\n").unwrap();
        assert!(matches!(
            load_dataset(tmp.path()).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn splits_are_read() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        std::fs::write(tmp.path().join("splits.json"), r#"{"train":[0],"test":[1]}"#).unwrap();
        let b = load_dataset(tmp.path()).unwrap();
        let s = b.split.unwrap();
        assert_eq!(s.train_ids, vec![0]);
        assert_eq!(s.test_ids, vec![1]);
    }
}
