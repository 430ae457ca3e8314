//! One-vs-rest linear classifier trained with L2-regularized hinge loss.
//!
//! Used for test-time prediction, for identifying distal objects in
//! predicted-label mode, and as the batch baseline's model. Training is
//! stochastic subgradient descent with the step size `lr / (1 + l2*lr*t)` and
//! a seeded per-epoch shuffle, so a (data, config) pair always yields the same
//! weights. Features are consumed at raw scale; no normalization happens here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster_memory::ClusterSpace;
use crate::error::{Error, Result};
use crate::feature_store::{FeatureVector, LabeledExample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.01,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) {
            return Err(Error::InvalidConfig(
                "train config requires epochs > 0, learning_rate > 0, l2 >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Which parts of cluster memory feed the rehearsal training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryTrainSet {
    Centroids,
    Pseudo,
    Both,
}

impl std::str::FromStr for MemoryTrainSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroids" => Ok(Self::Centroids),
            "pseudo" => Ok(Self::Pseudo),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown memory train set `{other}` (expected centroids|pseudo|both)"
            ))),
        }
    }
}

/// Row-per-class linear model; each row is `dim` weights plus a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    class_ids: Vec<usize>,
    weights: Vec<Vec<f64>>,
    dim: usize,
}

impl LinearClassifier {
    /// A zero-weight single-row model that always predicts `class_id`; the
    /// learner's state before any training has happened.
    pub fn constant(class_id: usize, dim: usize) -> Self {
        Self {
            class_ids: vec![class_id],
            weights: vec![vec![0.0; dim + 1]],
            dim,
        }
    }

    pub fn from_parts(class_ids: Vec<usize>, weights: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if class_ids.is_empty() || class_ids.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "one weight row per class required".into(),
            ));
        }
        for row in &weights {
            if row.len() != dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: dim + 1,
                    got: row.len(),
                });
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidArgument("non-finite weight".into()));
            }
        }
        Ok(Self {
            class_ids,
            weights,
            dim,
        })
    }

    pub fn class_ids(&self) -> &[usize] {
        &self.class_ids
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn score_row(row: &[f64], x: &[f64]) -> f64 {
        let (w, b) = row.split_at(row.len() - 1);
        w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b[0]
    }

    /// Per-class decision scores `w.x + b`, in row order.
    pub fn scores(&self, feature: &FeatureVector) -> Result<Vec<f64>> {
        if feature.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: feature.dim(),
            });
        }
        let x = feature.as_slice();
        Ok(self
            .weights
            .iter()
            .map(|row| Self::score_row(row, x))
            .collect())
    }

    /// Argmax over class scores; ties break toward the lowest class id.
    pub fn predict(&self, feature: &FeatureVector) -> Result<usize> {
        let scores = self.scores(feature)?;
        let mut best = 0usize;
        for (i, s) in scores.iter().enumerate().skip(1) {
            let better = *s > scores[best]
                || (*s == scores[best] && self.class_ids[i] < self.class_ids[best]);
            if better {
                best = i;
            }
        }
        Ok(self.class_ids[best])
    }

    /// Accuracy over the test examples whose class belongs to the
    /// environment, including classes this model never trained on.
    pub fn evaluate(&self, test: &[LabeledExample], env_classes: &BTreeSet<usize>) -> Result<f64> {
        let mut total = 0usize;
        let mut correct = 0usize;
        for ex in test {
            if !env_classes.contains(&ex.class_id) {
                continue;
            }
            total += 1;
            if self.predict(&ex.feature)? == ex.class_id {
                correct += 1;
            }
        }
        if total == 0 {
            return Err(Error::InvalidArgument(
                "empty test set for the given environment classes".into(),
            ));
        }
        Ok(correct as f64 / total as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDoc {
            version: MODEL_DOC_VERSION,
            dim: self.dim,
            class_ids: self.class_ids.clone(),
            weights: self.weights.clone(),
        })
        .expect("classifier serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(json).map_err(|e| Error::Json {
            path: "<string>".into(),
            source: e,
        })?;
        if doc.version != MODEL_DOC_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported classifier version {}",
                doc.version
            )));
        }
        Self::from_parts(doc.class_ids, doc.weights, doc.dim)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&json)
    }
}

const MODEL_DOC_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    dim: usize,
    class_ids: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

/// Fits one-vs-rest hinge rows by seeded-shuffle stochastic subgradient
/// descent. The bias column is left out of the L2 penalty.
pub fn train(examples: &[LabeledExample], cfg: &TrainConfig) -> Result<LinearClassifier> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    let dim = examples[0].feature.dim();
    let classes: BTreeSet<usize> = examples.iter().map(|e| e.class_id).collect();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(
            "training requires at least 2 classes".into(),
        ));
    }
    for ex in examples {
        if ex.feature.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: ex.feature.dim(),
            });
        }
    }
    let class_ids: Vec<usize> = classes.into_iter().collect();
    let row_of: BTreeMap<usize, usize> = class_ids
        .iter()
        .enumerate()
        .map(|(row, &c)| (c, row))
        .collect();
    let mut weights = vec![vec![0.0f64; dim + 1]; class_ids.len()];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut t = 0u64;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = cfg.learning_rate / (1.0 + cfg.l2 * cfg.learning_rate * t as f64);
            let x = examples[i].feature.as_slice();
            let label_row = row_of[&examples[i].class_id];
            for (row_idx, row) in weights.iter_mut().enumerate() {
                let y = if row_idx == label_row { 1.0 } else { -1.0 };
                let margin = y * LinearClassifier::score_row(row, x);
                let shrink = 1.0 - eta * cfg.l2;
                for w in row[..dim].iter_mut() {
                    *w *= shrink;
                }
                if margin < 1.0 {
                    for (w, xi) in row[..dim].iter_mut().zip(x) {
                        *w += eta * y * xi;
                    }
                    row[dim] += eta * y;
                }
            }
        }
    }
    LinearClassifier::from_parts(class_ids, weights, dim)
}

/// Full regularized hinge objective, summed over the one-vs-rest rows. Used
/// by the convergence checks.
pub fn hinge_objective(examples: &[LabeledExample], clf: &LinearClassifier, l2: f64) -> f64 {
    let n = examples.len() as f64;
    clf.class_ids()
        .iter()
        .zip(clf.weights())
        .map(|(&class_id, row)| {
            let (w, _) = row.split_at(row.len() - 1);
            let reg = 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
            let hinge: f64 = examples
                .iter()
                .map(|ex| {
                    let y = if ex.class_id == class_id { 1.0 } else { -1.0 };
                    (1.0 - y * LinearClassifier::score_row(row, ex.feature.as_slice())).max(0.0)
                })
                .sum();
            reg + hinge / n
        })
        .sum()
}

/// Assembles the incremental learner's rehearsal training set: per known
/// class, its centroids and/or `n_p` pseudo-exemplars, plus the raw vectors
/// harvested this increment. Its size is bounded by the cluster count and
/// `n_p`, independent of how many raw vectors were ever absorbed.
pub fn build_training_set(
    space: &ClusterSpace,
    fresh: &[LabeledExample],
    n_p: usize,
    seed: u64,
    mode: MemoryTrainSet,
) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for memory in space.classes() {
        let class_id = memory.class_id();
        if mode != MemoryTrainSet::Pseudo {
            for cluster in memory.clusters() {
                out.push(LabeledExample {
                    class_id,
                    feature: FeatureVector::new(cluster.centroid().to_vec())?,
                });
            }
        }
        if mode != MemoryTrainSet::Centroids {
            let class_seed = seed ^ (class_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            out.extend(space.generate_pseudo_exemplars(class_id, n_p, class_seed)?);
        }
    }
    out.extend_from_slice(fresh);
    Ok(out)
}
