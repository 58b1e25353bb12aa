//! On-disk formats: FGNF/CSV feature matrices, label text files, split JSON,
//! TSV edge lists, and FGCK checkpoints.
//!
//! FGNF layout: magic `FGNF`, little-endian `u32` rows, `u32` cols, then
//! rows·cols little-endian `f32` values row-major (widened to `f64` on load).
//!
//! FGCK layout: magic `FGCK`, little-endian `u32` version, `u32` header
//! length, the JSON header `{"config", "seed", "epochs", "tensors": [{"name",
//! "rows", "cols"}]}`, then every tensor as little-endian `f64` row-major in
//! header order.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::DenseMatrix;
use crate::Matrix;

pub const FEATURE_MAGIC: &[u8; 4] = b"FGNF";
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FGCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Train/validation/test node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Checks range, disjointness and full coverage of `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, part) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &u in part {
                if u >= n {
                    return Err(Error::Validation(format!("{name} index {u} outside 0..{n}")));
                }
                if seen[u] {
                    return Err(Error::Validation(format!("node {u} appears in more than one split")));
                }
                seen[u] = true;
            }
        }
        if let Some(u) = seen.iter().position(|&s| !s) {
            return Err(Error::Validation(format!("node {u} belongs to no split")));
        }
        Ok(())
    }
}

/// One dataset: features, labels, splits and an optional prebuilt graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub splits: Splits,
    pub edges: Option<Vec<(usize, usize)>>,
}

impl DatasetBundle {
    pub fn new(features: Matrix, labels: Vec<usize>, splits: Splits, edges: Option<Vec<(usize, usize)>>) -> Result<Self> {
        let b = Self { features, labels, splits, edges };
        b.validate()?;
        Ok(b)
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.dim() == 0 {
            return Err(Error::Validation("dataset has no nodes or no feature columns".into()));
        }
        if self.labels.len() != n {
            return Err(Error::Validation(format!("{} labels for {n} nodes", self.labels.len())));
        }
        if !self.features.all_finite() {
            return Err(Error::Validation("features contain non-finite values".into()));
        }
        self.splits.validate(n)?;
        if let Some(edges) = &self.edges {
            for &(u, v) in edges {
                if u >= n || v >= n {
                    return Err(Error::Validation(format!("edge ({u}, {v}) outside 0..{n}")));
                }
                if u == v {
                    return Err(Error::Validation(format!("self-loop at node {u}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    /// Detect from the leading magic bytes.
    Auto,
    Fgnf,
    Csv,
}

pub fn encode_features_fgnf(features: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * features.data().len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(features.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(features.cols() as u32).to_le_bytes());
    for &v in features.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_features_fgnf(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < 12 || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::Format("missing FGNF header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != rows * cols * 4 {
        return Err(Error::Format(format!(
            "FGNF body is {} bytes, header declares {rows} x {cols} floats",
            body.len()
        )));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    DenseMatrix::new(rows, cols, data)
}

pub fn decode_features_csv(text: &str) -> Result<Matrix> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{tok:?}: {e}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("feature CSV has no rows".into()));
    }
    DenseMatrix::from_rows(&rows).map_err(|_| Error::Format("feature CSV rows differ in length".into()))
}

pub fn encode_features_csv(features: &Matrix) -> String {
    let mut out = String::new();
    for u in 0..features.rows() {
        let row: Vec<String> = features.row(u).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_features(path: &Path, format: FeatureFormat) -> Result<Matrix> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() {
        return Err(Error::Format(format!("{} is empty", path.display())));
    }
    let m = match format {
        FeatureFormat::Fgnf => decode_features_fgnf(&bytes)?,
        FeatureFormat::Auto if bytes.starts_with(FEATURE_MAGIC) => decode_features_fgnf(&bytes)?,
        FeatureFormat::Csv | FeatureFormat::Auto => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Format("feature file is neither FGNF nor UTF-8 CSV".into()))?;
            decode_features_csv(&text)?
        }
    };
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Format(format!("{} holds an empty matrix", path.display())));
    }
    Ok(m)
}

pub fn write_features(path: &Path, features: &Matrix, format: FeatureFormat) -> Result<()> {
    match format {
        FeatureFormat::Csv => fs::write(path, encode_features_csv(features))?,
        _ => fs::write(path, encode_features_fgnf(features))?,
    }
    Ok(())
}

pub fn decode_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|e| Error::Parse { line: i + 1, msg: format!("label {l:?}: {e}") })
        })
        .collect()
}

pub fn encode_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    decode_labels(&fs::read_to_string(path)?)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn read_splits(path: &Path) -> Result<Splits> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_splits(path: &Path, splits: &Splits) -> Result<()> {
    fs::write(path, serde_json::to_string(splits)? + "\n")?;
    Ok(())
}

/// Parses `u<TAB>v` lines of 0-based node ids. Self-loops are rejected.
pub fn decode_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let mut next = |what: &str| -> Result<usize> {
            let tok = parts.next().ok_or_else(|| Error::Parse { line: i + 1, msg: format!("missing {what}") })?;
            tok.trim().parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("{what} {tok:?} is not a node id") })
        };
        let u = next("source")?;
        let v = next("target")?;
        if parts.next().is_some() {
            return Err(Error::Parse { line: i + 1, msg: "expected exactly two columns".into() });
        }
        if u == v {
            return Err(Error::Parse { line: i + 1, msg: format!("self-loop at node {u}") });
        }
        edges.push((u, v));
    }
    Ok(edges)
}

pub fn encode_edge_list(edges: &[(usize, usize)]) -> String {
    edges.iter().map(|(u, v)| format!("{u}\t{v}\n")).collect()
}

pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    decode_edge_list(&fs::read_to_string(path)?)
}

pub fn write_edge_list(path: &Path, edges: &[(usize, usize)]) -> Result<()> {
    fs::write(path, encode_edge_list(edges))?;
    Ok(())
}

/// File locations of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
    pub edges: Option<PathBuf>,
}

impl DatasetPaths {
    /// Standard names inside `dir`: `features.fgnf` (or `features.csv`),
    /// `labels.txt`, `splits.json`, and `edges.tsv` when present.
    pub fn in_dir(dir: &Path) -> Self {
        let fgnf = dir.join("features.fgnf");
        let csv = dir.join("features.csv");
        let features = if !fgnf.exists() && csv.exists() { csv } else { fgnf };
        let edges = dir.join("edges.tsv");
        Self {
            features,
            labels: dir.join("labels.txt"),
            splits: dir.join("splits.json"),
            edges: edges.exists().then_some(edges),
        }
    }
}

pub fn read_dataset(paths: &DatasetPaths, format: FeatureFormat) -> Result<DatasetBundle> {
    let features = read_features(&paths.features, format)?;
    let labels = read_labels(&paths.labels)?;
    let splits = read_splits(&paths.splits)?;
    let edges = paths.edges.as_deref().map(read_edge_list).transpose()?;
    DatasetBundle::new(features, labels, splits, edges)
}

/// Writes the bundle under the standard names in `dir` (FGNF features).
pub fn write_dataset(dir: &Path, bundle: &DatasetBundle) -> Result<DatasetPaths> {
    fs::create_dir_all(dir)?;
    let paths = DatasetPaths {
        features: dir.join("features.fgnf"),
        labels: dir.join("labels.txt"),
        splits: dir.join("splits.json"),
        edges: bundle.edges.as_ref().map(|_| dir.join("edges.tsv")),
    };
    write_features(&paths.features, &bundle.features, FeatureFormat::Fgnf)?;
    write_labels(&paths.labels, &bundle.labels)?;
    write_splits(&paths.splits, &bundle.splits)?;
    if let (Some(p), Some(e)) = (&paths.edges, &bundle.edges) {
        write_edge_list(p, e)?;
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub value: Matrix,
}

/// Serialized model state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config: serde_json::Value,
    pub seed: u64,
    pub epochs: usize,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: serde_json::Value,
    seed: u64,
    epochs: usize,
    tensors: Vec<TensorHeader>,
}

pub fn encode_checkpoint(c: &Checkpoint) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        config: c.config.clone(),
        seed: c.seed,
        epochs: c.epochs,
        tensors: c
            .tensors
            .iter()
            .map(|t| TensorHeader { name: t.name.clone(), rows: t.value.rows(), cols: t.value.cols() })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + json.len() + c.tensors.iter().map(|t| 8 * t.value.data().len()).sum::<usize>());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&c.version.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in &c.tensors {
        for v in t.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Format("missing FGCK header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version { found: version, expected: CHECKPOINT_VERSION });
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let json = bytes.get(12..12 + header_len).ok_or_else(|| Error::Format("truncated checkpoint header".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(json).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let mut pos = 12 + header_len;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for th in header.tensors {
        let len = th.rows * th.cols * 8;
        let body = bytes
            .get(pos..pos + len)
            .ok_or_else(|| Error::Format(format!("checkpoint truncated inside tensor {}", th.name)))?;
        pos += len;
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        tensors.push(NamedTensor { name: th.name, value: DenseMatrix::new(th.rows, th.cols, data)? });
    }
    if pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after checkpoint", bytes.len() - pos)));
    }
    Ok(Checkpoint { version, config: header.config, seed: header.seed, epochs: header.epochs, tensors })
}

pub fn write_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(c)?)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}

/// Sorted, deduplicated union of the three split lists.
pub fn all_split_nodes(s: &Splits) -> BTreeSet<usize> {
    s.train.iter().chain(&s.val).chain(&s.test).copied().collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::numkit::Rng;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let mut fgnf = Vec::new();
        fgnf.extend_from_slice(b"FGNF");
        fgnf.extend_from_slice(&4u32.to_le_bytes());
        fgnf.extend_from_slice(&2u32.to_le_bytes());
        for v in [1.0f32, 0.0, 0.5, 0.5, -1.0, 2.0, 0.25, -0.75] {
            fgnf.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(dir.path().join("features.fgnf"), fgnf).unwrap();
        fs::write(dir.path().join("labels.txt"), "0\n1\n1\n0\n").unwrap();
        fs::write(dir.path().join("splits.json"), r#"{"train": [0, 1], "val": [2], "test": [3]}"#).unwrap();
        dir
    }

    #[test]
    fn reads_hand_written_fixture() {
        let dir = fixture_dir();
        let b = read_dataset(&DatasetPaths::in_dir(dir.path()), FeatureFormat::Auto).unwrap();
        assert_eq!((b.n(), b.dim()), (4, 2));
        assert_eq!(b.labels, vec![0, 1, 1, 0]);
        assert_eq!(b.features.row(2), &[-1.0, 2.0]);
        assert_eq!(b.splits.test, vec![3]);
        assert_eq!(b.edges, None);
        assert_eq!(b.num_classes(), 2);
    }

    #[test]
    fn overlapping_splits_rejected() {
        let dir = fixture_dir();
        fs::write(dir.path().join("splits.json"), r#"{"train": [0, 1], "val": [0], "test": [2, 3]}"#).unwrap();
        let err = read_dataset(&DatasetPaths::in_dir(dir.path()), FeatureFormat::Auto).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn out_of_range_index_rejected() {
        let dir = fixture_dir();
        fs::write(dir.path().join("splits.json"), r#"{"train": [0, 1], "val": [2], "test": [4, 3]}"#).unwrap();
        assert!(matches!(read_dataset(&DatasetPaths::in_dir(dir.path()), FeatureFormat::Auto), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_feature_file_is_format_error() {
        let dir = fixture_dir();
        fs::write(dir.path().join("features.fgnf"), b"").unwrap();
        assert!(matches!(read_dataset(&DatasetPaths::in_dir(dir.path()), FeatureFormat::Auto), Err(Error::Format(_))));
        assert!(matches!(decode_features_fgnf(b"FGNX\0\0\0\0\0\0\0\0"), Err(Error::Format(_))));
    }

    #[test]
    fn csv_fallback() {
        let m = decode_features_csv("1,2\n3.5,-4\n").unwrap();
        assert_eq!(m.row(1), &[3.5, -4.0]);
        assert!(matches!(decode_features_csv("1,x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn edge_list_cases() {
        assert_eq!(decode_edge_list("0\t1\n1\t2").unwrap(), vec![(0, 1), (1, 2)]);
        assert!(matches!(decode_edge_list("0\t0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(decode_edge_list("0\t1\n2\tx\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn edge_list_file_round_trip() {
        let mut rng = Rng::new(1);
        let edges: Vec<(usize, usize)> = (0..1000)
            .map(|_| {
                let u = rng.below(500);
                (u, (u + 1 + rng.below(499)) % 500)
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.tsv");
        write_edge_list(&p, &edges).unwrap();
        assert_eq!(read_edge_list(&p).unwrap(), edges);
    }

    fn sample_checkpoint() -> Checkpoint {
        let mut rng = Rng::new(3);
        let t = |name: &str, r: usize, c: usize, rng: &mut Rng| NamedTensor {
            name: name.into(),
            value: DenseMatrix::new(r, c, (0..r * c).map(|_| rng.normal() * 1e3).collect()).unwrap(),
        };
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: serde_json::json!({"lr": 0.01, "variant": "fuzzy", "nested": {"k": 10}}),
            seed: 42,
            epochs: 200,
            tensors: vec![t("a", 3, 4, &mut rng), t("b", 1, 7, &mut rng), t("empty", 0, 3, &mut rng)],
        }
    }

    #[test]
    fn checkpoint_round_trip_and_stable_bytes() {
        let c = sample_checkpoint();
        let bytes = encode_checkpoint(&c).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn checkpoint_errors() {
        let bytes = encode_checkpoint(&sample_checkpoint()).unwrap();
        assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(decode_checkpoint(&bytes[..10]), Err(Error::Format(_))));
        let mut wrong = bytes.clone();
        wrong[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&wrong), Err(Error::Version { found: 7, expected: 1 })));
    }

    proptest! {
        #[test]
        fn fgnf_round_trips_f32_values(rows in 1usize..8, cols in 1usize..6, seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let data = (0..rows * cols).map(|_| rng.normal() as f32 as f64).collect();
            let m = DenseMatrix::new(rows, cols, data).unwrap();
            prop_assert_eq!(decode_features_fgnf(&encode_features_fgnf(&m)).unwrap(), m.clone());
            prop_assert_eq!(decode_features_csv(&encode_features_csv(&m)).unwrap(), m);
        }

        #[test]
        fn labels_round_trip(labels in proptest::collection::vec(0usize..20, 0..50)) {
            prop_assert_eq!(decode_labels(&encode_labels(&labels)).unwrap(), labels);
        }
    }
}
