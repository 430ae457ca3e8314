//! Labeled feature-vector datasets: file ingestion, synthetic generation, and
//! stratified splitting.
//!
//! The on-disk feature file is CSV (UTF-8):
//!
//! ```text
//! # dim=<d> classes=<k>
//! # split=train
//! <class_id>,<f0>,<f1>,...,<f d-1>
//! ...
//! # split=test
//! ...
//! ```
//!
//! Train and test sections may live in one file (a second `# split=` marker)
//! or in two files loaded with [`load_dataset_pair`]. An optional sidecar maps
//! class ids to names, one `class_id,name` row per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-dimension embedding vector. All entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "feature vector must have at least one dimension".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "feature vector contains non-finite value {v}"
            )));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Squared Euclidean distance between two equal-length slices.
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub(crate) fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub class_id: usize,
    pub feature: FeatureVector,
}

/// A labeled feature-vector dataset with a train/test split. The learner's
/// only view of "images".
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    dim: usize,
    class_count: usize,
    train: Vec<LabeledExample>,
    test: Vec<LabeledExample>,
    class_names: Option<Vec<String>>,
}

impl FeatureDataset {
    /// Builds a dataset, checking that all examples share `dim`, that ids are
    /// in range, and that every class has at least one training example.
    pub fn new(
        dim: usize,
        class_count: usize,
        train: Vec<LabeledExample>,
        test: Vec<LabeledExample>,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if dim == 0 || class_count == 0 {
            return Err(Error::InvalidArgument(
                "dim and class_count must be positive".into(),
            ));
        }
        for ex in train.iter().chain(&test) {
            if ex.feature.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: ex.feature.dim(),
                });
            }
            if ex.class_id >= class_count {
                return Err(Error::InvalidArgument(format!(
                    "class_id {} out of range (classes={})",
                    ex.class_id, class_count
                )));
            }
        }
        let mut seen = vec![false; class_count];
        for ex in &train {
            seen[ex.class_id] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyClass(missing));
        }
        if let Some(names) = &class_names {
            if names.len() != class_count {
                return Err(Error::InvalidArgument(format!(
                    "{} class names for {} classes",
                    names.len(),
                    class_count
                )));
            }
        }
        Ok(Self {
            dim,
            class_count,
            train,
            test,
            class_names,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn train(&self) -> &[LabeledExample] {
        &self.train
    }

    pub fn test(&self) -> &[LabeledExample] {
        &self.test
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.class_count {
            return Err(Error::InvalidArgument(format!(
                "{} class names for {} classes",
                names.len(),
                self.class_count
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    /// Train-set indices per class, in file order.
    pub fn train_indices_by_class(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, ex) in self.train.iter().enumerate() {
            map.entry(ex.class_id).or_default().push(i);
        }
        map
    }
}

/// Parameters for the synthetic feature generator, a stand-in for
/// CNN-extracted embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub class_count: usize,
    pub dim: usize,
    pub clusters_per_class: usize,
    pub examples_per_class: usize,
    pub intra_cluster_stddev: f64,
    pub inter_class_separation: f64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.class_count == 0
            || self.dim == 0
            || self.clusters_per_class == 0
            || self.examples_per_class == 0
        {
            return Err(Error::InvalidConfig(
                "synthetic config requires positive counts".into(),
            ));
        }
        if !(self.intra_cluster_stddev > 0.0) || !(self.inter_class_separation > 0.0) {
            return Err(Error::InvalidConfig(
                "stddev and separation must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            class_count: 40,
            dim: 32,
            clusters_per_class: 3,
            examples_per_class: 60,
            intra_cluster_stddev: 1.0,
            inter_class_separation: 40.0,
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Generates a labeled dataset of Gaussian blobs with a 90:10 stratified
/// split.
///
/// Per-class anchor points are rejection-sampled at pairwise distance of at
/// least twice the separation; each class's cluster centers sit inside a ball
/// of radius separation/4 around its anchor, so any two centers of different
/// classes are at least `inter_class_separation` apart. Examples are assigned
/// to that class's centers round-robin.
pub fn gen_synthetic(cfg: &SynthConfig, seed: u64) -> Result<FeatureDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sep = cfg.inter_class_separation;
    let dim = cfg.dim;

    let mut side = 4.0 * sep * (cfg.class_count as f64).powf(1.0 / dim as f64);
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(cfg.class_count);
    let mut rejections = 0usize;
    while anchors.len() < cfg.class_count {
        let cand: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-side / 2.0..side / 2.0))
            .collect();
        let ok = anchors
            .iter()
            .all(|a| euclidean_distance(a, &cand) >= 2.0 * sep);
        if ok {
            anchors.push(cand);
        } else {
            rejections += 1;
            if rejections % 64 == 0 {
                side *= 2.0;
            }
        }
    }

    // Uniform sample inside a ball of the given radius.
    let ball_offset = |rng: &mut ChaCha8Rng, radius: f64| -> Vec<f64> {
        let dir = gaussian_vec(rng, dim);
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        dir.into_iter().map(|v| v / norm * r).collect()
    };

    let mut centers: Vec<Vec<Vec<f64>>> = Vec::with_capacity(cfg.class_count);
    for anchor in &anchors {
        let mut class_centers = Vec::with_capacity(cfg.clusters_per_class);
        for _ in 0..cfg.clusters_per_class {
            let off = ball_offset(&mut rng, sep / 4.0);
            class_centers.push(anchor.iter().zip(&off).map(|(a, o)| a + o).collect());
        }
        centers.push(class_centers);
    }

    let mut examples = Vec::with_capacity(cfg.class_count * cfg.examples_per_class);
    for (class_id, class_centers) in centers.iter().enumerate() {
        for i in 0..cfg.examples_per_class {
            let center = &class_centers[i % class_centers.len()];
            let noise = gaussian_vec(&mut rng, dim);
            let values = center
                .iter()
                .zip(&noise)
                .map(|(c, z)| c + z * cfg.intra_cluster_stddev)
                .collect();
            examples.push(LabeledExample {
                class_id,
                feature: FeatureVector::new(values)?,
            });
        }
    }

    let split_seed = rng.random::<u64>();
    let (train, test) = split_stratified(&examples, 0.1, split_seed)?;
    FeatureDataset::new(dim, cfg.class_count, train, test, None)
}

/// Per-class stratified split. `round(test_fraction * class_size)` examples go
/// to test, clamped to leave at least one example on each side; selection is a
/// seeded shuffle. Outputs preserve the input order.
pub fn split_stratified(
    examples: &[LabeledExample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        by_class.entry(ex.class_id).or_default().push(i);
    }
    if by_class.is_empty() {
        return Err(Error::InvalidArgument("empty example list".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; examples.len()];
    for (class_id, mut indices) in by_class {
        if indices.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "class {class_id} has fewer than 2 examples"
            )));
        }
        let n = indices.len();
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        indices.shuffle(&mut rng);
        for &i in indices.iter().take(n_test) {
            is_test[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        if is_test[i] {
            test.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok((train, test))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

struct Sections {
    dim: usize,
    classes: usize,
    train: Vec<LabeledExample>,
    test: Vec<LabeledExample>,
}

fn parse_feature_file(path: &Path) -> Result<Sections> {
    let content = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = content.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header.trim();
    let mut dim = None;
    let mut classes = None;
    let stripped = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "expected header `# dim=<d> classes=<k>`"))?;
    for tok in stripped.split_whitespace() {
        if let Some(v) = tok.strip_prefix("dim=") {
            dim = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("classes=") {
            classes = v.parse::<usize>().ok();
        } else {
            return Err(parse_err(path, 1, format!("unexpected header token `{tok}`")));
        }
    }
    let (dim, classes) = match (dim, classes) {
        (Some(d), Some(k)) if d > 0 && k > 0 => (d, k),
        _ => return Err(parse_err(path, 1, "expected header `# dim=<d> classes=<k>`")),
    };

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut current: Option<bool> = None; // true = train section
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            match rest.trim() {
                "split=train" => current = Some(true),
                "split=test" => current = Some(false),
                other => {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("expected `# split=train|test`, got `# {other}`"),
                    ))
                }
            }
            continue;
        }
        let in_train = current
            .ok_or_else(|| parse_err(path, line_no, "data row before any `# split=` marker"))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} columns, got {}", dim + 1, fields.len()),
            ));
        }
        let class_id: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("invalid class_id `{}`", fields[0])))?;
        if class_id >= classes {
            return Err(parse_err(
                path,
                line_no,
                format!("class_id {class_id} out of range (classes={classes})"),
            ));
        }
        let mut values = Vec::with_capacity(dim);
        for f in &fields[1..] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("non-numeric value `{f}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line_no, format!("non-finite value `{f}`")));
            }
            values.push(v);
        }
        let ex = LabeledExample {
            class_id,
            feature: FeatureVector::new(values)?,
        };
        if in_train {
            train.push(ex);
        } else {
            test.push(ex);
        }
    }
    Ok(Sections {
        dim,
        classes,
        train,
        test,
    })
}

/// Loads a feature file containing a train section and, optionally, a test
/// section. Examples appear in file order.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<FeatureDataset> {
    let s = parse_feature_file(path.as_ref())?;
    FeatureDataset::new(s.dim, s.classes, s.train, s.test, None)
}

/// Loads a dataset whose train and test sections live in two files. Both
/// headers must agree on `dim` and `classes`.
pub fn load_dataset_pair(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
) -> Result<FeatureDataset> {
    let a = parse_feature_file(train_path.as_ref())?;
    let b = parse_feature_file(test_path.as_ref())?;
    if a.dim != b.dim || a.classes != b.classes {
        return Err(Error::InvalidArgument(format!(
            "header mismatch between files: dim {} vs {}, classes {} vs {}",
            a.dim, b.dim, a.classes, b.classes
        )));
    }
    let mut train = a.train;
    let mut test = a.test;
    train.extend(b.train);
    test.extend(b.test);
    FeatureDataset::new(a.dim, a.classes, train, test, None)
}

/// Serializes a dataset in the canonical feature-file format. Loading a file
/// produced here and writing it again is byte-identical.
pub fn write_dataset(dataset: &FeatureDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# dim={} classes={}",
        dataset.dim(),
        dataset.class_count()
    );
    let _ = writeln!(out, "# split=train");
    for ex in dataset.train() {
        push_row(&mut out, ex);
    }
    if !dataset.test().is_empty() {
        let _ = writeln!(out, "# split=test");
        for ex in dataset.test() {
            push_row(&mut out, ex);
        }
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

fn push_row(out: &mut String, ex: &LabeledExample) {
    let _ = write!(out, "{}", ex.class_id);
    for v in ex.feature.as_slice() {
        let _ = write!(out, ",{v}");
    }
    out.push('\n');
}

/// Reads the optional `class_id,name` sidecar. Every class must be named
/// exactly once.
pub fn load_class_names(path: impl AsRef<Path>, class_count: usize) -> Result<Vec<String>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut names: Vec<Option<String>> = vec![None; class_count];
    for (idx, raw) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_str, name) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, line_no, "expected `class_id,name`"))?;
        let id: usize = id_str
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("invalid class_id `{id_str}`")))?;
        if id >= class_count {
            return Err(parse_err(
                path,
                line_no,
                format!("class_id {id} out of range (classes={class_count})"),
            ));
        }
        if names[id].is_some() {
            return Err(parse_err(path, line_no, format!("duplicate name for class {id}")));
        }
        names[id] = Some(name.trim().to_string());
    }
    names
        .into_iter()
        .enumerate()
        .map(|(id, n)| n.ok_or(Error::EmptyClass(id)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| match e {
            Error::EmptyClass(id) => Error::InvalidArgument(format!("class {id} has no name")),
            other => other,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(class_id: usize, values: &[f64]) -> LabeledExample {
        LabeledExample {
            class_id,
            feature: FeatureVector::new(values.to_vec()).unwrap(),
        }
    }

    #[test]
    fn load_echoes_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(
            &path,
            "# dim=2 classes=2\n# split=train\n0,1.0,2.0\n1,3.0,4.0\n",
        )
        .unwrap();
        let ds = load_dataset(&path).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.train().len(), 2);
        assert_eq!(ds.train()[0], ex(0, &[1.0, 2.0]));
        assert_eq!(ds.train()[1], ex(1, &[3.0, 4.0]));
        assert!(ds.test().is_empty());
    }

    #[test]
    fn empty_train_section_reports_missing_class() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "# dim=2 classes=1\n# split=train\n").unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert_eq!(err.to_string(), "class 0 has no training examples");
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# dim=2 classes=2\n# split=train\n0,1.0\n").unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
        assert!(err.contains("columns"), "{err}");

        std::fs::write(&path, "# dim=2 classes=2\n# split=train\n0,1.0,zzz\n").unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("non-numeric"), "{err}");

        std::fs::write(&path, "# dim=2 classes=2\n# split=train\n7,1.0,2.0\n").unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("class_id 7 out of range"), "{err}");

        let err = load_dataset(dir.path().join("missing.csv"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("missing.csv"), "{err}");
    }

    #[test]
    fn generated_file_round_trips_byte_identical() {
        let cfg = SynthConfig {
            class_count: 100,
            dim: 512,
            clusters_per_class: 1,
            examples_per_class: 4,
            intra_cluster_stddev: 0.5,
            inter_class_separation: 10.0,
        };
        let ds = gen_synthetic(&cfg, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        write_dataset(&ds, &p1).unwrap();
        let reloaded = load_dataset(&p1).unwrap();
        assert_eq!(reloaded, ds);
        write_dataset(&reloaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn two_file_loading_matches_single_file() {
        let cfg = SynthConfig {
            class_count: 3,
            dim: 4,
            clusters_per_class: 1,
            examples_per_class: 10,
            intra_cluster_stddev: 0.1,
            inter_class_separation: 5.0,
        };
        let ds = gen_synthetic(&cfg, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let train_only =
            FeatureDataset::new(4, 3, ds.train().to_vec(), Vec::new(), None).unwrap();
        let test_holder =
            FeatureDataset::new(4, 3, ds.train().to_vec(), ds.test().to_vec(), None).unwrap();
        let p_train = dir.path().join("train.csv");
        let p_both = dir.path().join("both.csv");
        write_dataset(&train_only, &p_train).unwrap();
        write_dataset(&test_holder, &p_both).unwrap();
        // Second file contributes only its test section here.
        let test_only = {
            let mut s = String::from("# dim=4 classes=3\n# split=test\n");
            for ex in ds.test() {
                push_row(&mut s, ex);
            }
            let p = dir.path().join("test.csv");
            std::fs::write(&p, s).unwrap();
            p
        };
        // A lone test file fails the every-class-in-train invariant...
        assert!(load_dataset(&test_only).is_err());
        // ...but pairing it with the train file works and matches.
        let paired = load_dataset_pair(&p_train, &test_only).unwrap();
        assert_eq!(paired, ds);
    }

    #[test]
    fn synthetic_classes_separate_under_nearest_centroid() {
        let cfg = SynthConfig {
            class_count: 2,
            dim: 2,
            clusters_per_class: 1,
            examples_per_class: 10,
            intra_cluster_stddev: 0.01,
            inter_class_separation: 100.0,
        };
        for seed in [0u64, 1, 17, 99] {
            let ds = gen_synthetic(&cfg, seed).unwrap();
            // Brute-force nearest-centroid rule over per-class training means.
            let mut sums = vec![vec![0.0; 2]; 2];
            let mut counts = vec![0usize; 2];
            for ex in ds.train() {
                for (s, v) in sums[ex.class_id].iter_mut().zip(ex.feature.as_slice()) {
                    *s += v;
                }
                counts[ex.class_id] += 1;
            }
            let means: Vec<Vec<f64>> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| s.iter().map(|v| v / c as f64).collect())
                .collect();
            for ex in ds.train() {
                let d0 = euclidean_distance(ex.feature.as_slice(), &means[0]);
                let d1 = euclidean_distance(ex.feature.as_slice(), &means[1]);
                let predicted = if d0 <= d1 { 0 } else { 1 };
                assert_eq!(predicted, ex.class_id, "seed {seed}");
            }
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let cfg = SynthConfig::default();
        let a = gen_synthetic(&cfg, 42).unwrap();
        let b = gen_synthetic(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(&cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_inter_class_center_separation_holds() {
        let cfg = SynthConfig {
            class_count: 6,
            dim: 3,
            clusters_per_class: 4,
            examples_per_class: 8,
            intra_cluster_stddev: 1e-12,
            inter_class_separation: 7.0,
        };
        let ds = gen_synthetic(&cfg, 5).unwrap();
        // With a degenerate stddev every example sits on its cluster center.
        for a in ds.train().iter().chain(ds.test()) {
            for b in ds.train().iter().chain(ds.test()) {
                if a.class_id != b.class_id {
                    let d = euclidean_distance(a.feature.as_slice(), b.feature.as_slice());
                    assert!(d >= cfg.inter_class_separation, "{d}");
                }
            }
        }
    }

    #[test]
    fn degenerate_stddev_collapses_single_cluster_class() {
        let cfg = SynthConfig {
            class_count: 2,
            dim: 8,
            clusters_per_class: 1,
            examples_per_class: 12,
            intra_cluster_stddev: 1e-12,
            inter_class_separation: 10.0,
        };
        let ds = gen_synthetic(&cfg, 11).unwrap();
        for class in 0..2 {
            let members: Vec<_> = ds
                .train()
                .iter()
                .chain(ds.test())
                .filter(|e| e.class_id == class)
                .collect();
            let first = members[0].feature.as_slice();
            for m in &members {
                for (a, b) in m.feature.as_slice().iter().zip(first) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn split_matches_the_ninety_ten_protocol() {
        let examples: Vec<_> = (0..100).map(|_| ex(0, &[0.0])).collect();
        let (train, test) = split_stratified(&examples, 0.1, 1).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(test.len(), 10);
    }

    #[test]
    fn split_minimal_case() {
        let examples = vec![ex(0, &[0.0]), ex(0, &[1.0]), ex(1, &[2.0]), ex(1, &[3.0])];
        let (train, test) = split_stratified(&examples, 0.5, 9).unwrap();
        for class in 0..2 {
            assert_eq!(train.iter().filter(|e| e.class_id == class).count(), 1);
            assert_eq!(test.iter().filter(|e| e.class_id == class).count(), 1);
        }
    }

    #[test]
    fn split_per_class_counts_match_formula() {
        // Sizes 20, 37, 55 at fraction 0.1 -> test counts 2, 4, 6.
        let sizes = [20usize, 37, 55];
        let mut examples = Vec::new();
        for (class, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                examples.push(ex(class, &[i as f64]));
            }
        }
        let (train, test) = split_stratified(&examples, 0.1, 4).unwrap();
        for (class, &n) in sizes.iter().enumerate() {
            let expected = std::cmp::max(1, (0.1 * n as f64).round() as usize);
            let got = test.iter().filter(|e| e.class_id == class).count();
            assert_eq!(got, expected, "class {class}");
            assert_eq!(
                train.iter().filter(|e| e.class_id == class).count(),
                n - expected
            );
        }
        assert_eq!(train.len() + test.len(), examples.len());
    }

    #[test]
    fn split_is_a_partition_and_stratified() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for trial in 0..30 {
            let classes = rng.random_range(1..6usize);
            let mut examples = Vec::new();
            let mut tag = 0.0;
            for c in 0..classes {
                let n = rng.random_range(2..40usize);
                for _ in 0..n {
                    examples.push(ex(c, &[tag]));
                    tag += 1.0;
                }
            }
            let frac = rng.random_range(0.05..0.6);
            let (train, test) = split_stratified(&examples, frac, trial).unwrap();
            assert_eq!(train.len() + test.len(), examples.len());
            // Disjoint by construction: every example carries a unique tag.
            let mut tags: Vec<u64> = train
                .iter()
                .chain(&test)
                .map(|e| e.feature.as_slice()[0] as u64)
                .collect();
            tags.sort_unstable();
            tags.dedup();
            assert_eq!(tags.len(), examples.len());
            for c in 0..classes {
                let n = examples.iter().filter(|e| e.class_id == c).count() as f64;
                let t = test.iter().filter(|e| e.class_id == c).count() as f64;
                assert!((t / n - frac).abs() <= 1.0 / n + 1e-12, "class {c}");
            }
        }
    }

    #[test]
    fn split_rejects_tiny_classes() {
        let examples = vec![ex(0, &[0.0]), ex(0, &[1.0]), ex(1, &[2.0])];
        let err = split_stratified(&examples, 0.5, 0).unwrap_err().to_string();
        assert!(err.contains("class 1"), "{err}");
    }

    #[test]
    fn class_name_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("names.csv");
        std::fs::write(&path, "0,beaver\n1,rocket\n").unwrap();
        let names = load_class_names(&path, 2).unwrap();
        assert_eq!(names, vec!["beaver".to_string(), "rocket".to_string()]);
        std::fs::write(&path, "0,beaver\n").unwrap();
        assert!(load_class_names(&path, 2).is_err());
    }
}
