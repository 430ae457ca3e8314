//! The learner's long-term memory: per-class incremental clustering with
//! streaming centroid, weight, variance, and covariance statistics, plus
//! Gaussian pseudo-exemplar generation for rehearsal.
//!
//! A vector is folded into the closest cluster of its class when that cluster's
//! centroid lies within the distance threshold `D`; otherwise it seeds a new
//! cluster. Raw vectors are discarded after absorption — only the running
//! statistics remain. Per-dimension variance follows Welford's update
//!
//! ```text
//! (n-1) s_n^2 - (n-2) s_{n-1}^2 = (x_n - mean_n)(x_n - mean_{n-1})
//! ```
//!
//! and the centroid follows the weighted mean `n*mean_n = x_n + (n-1)*mean_{n-1}`.
//! The cluster's scalar variance, used by the class-selection policies, is the
//! dimension average of the per-dimension sample variances.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_store::{FeatureVector, LabeledExample};

/// Weighted-mean centroid update: `(x + (n-1)*centroid) / n`, where `n` is the
/// cluster weight after absorbing `x`. Needs no stored history.
pub fn update_centroid(centroid: &[f64], n: u64, x: &[f64]) -> Result<Vec<f64>> {
    if centroid.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: centroid.len(),
            got: x.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "centroid update requires n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    Ok(centroid
        .iter()
        .zip(x)
        .map(|(m, v)| (v + (nf - 1.0) * m) / nf)
        .collect())
}

/// One scalar Welford step: returns `s_n^2` given the previous sample variance
/// and the means before and after absorbing `x`.
pub fn update_variance(s_prev: f64, n: u64, x: f64, mean_n: f64, mean_prev: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "variance update requires n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    Ok(((nf - 2.0) * s_prev + (x - mean_n) * (x - mean_prev)) / (nf - 1.0))
}

/// One cluster: a running mean plus Welford accumulators. `per_dim_m2[d]`
/// holds the sum of squared deviations in dimension `d`, i.e. `(n-1)` times
/// the per-dimension sample variance. The covariance accumulator is the full
/// co-moment matrix unless the space runs in diagonal mode, in which case the
/// diagonal information lives in `per_dim_m2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    centroid: Vec<f64>,
    weight: u64,
    per_dim_m2: Vec<f64>,
    /// Row-major dim*dim co-moment matrix; `None` in diagonal mode.
    cov: Option<Vec<f64>>,
}

impl Cluster {
    fn seeded_at(x: &[f64], diagonal: bool) -> Self {
        let dim = x.len();
        Self {
            centroid: x.to_vec(),
            weight: 1,
            per_dim_m2: vec![0.0; dim],
            cov: (!diagonal).then(|| vec![0.0; dim * dim]),
        }
    }

    /// Rebuilds a cluster from stored statistics (deserialization, tests).
    pub fn from_parts(
        centroid: Vec<f64>,
        weight: u64,
        per_dim_m2: Vec<f64>,
        cov: Option<Vec<f64>>,
    ) -> Result<Self> {
        let dim = centroid.len();
        if dim == 0 || weight == 0 {
            return Err(Error::InvalidArgument(
                "cluster needs a nonempty centroid and weight >= 1".into(),
            ));
        }
        if per_dim_m2.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: per_dim_m2.len(),
            });
        }
        if let Some(c) = &cov {
            if c.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim * dim,
                    got: c.len(),
                });
            }
        }
        Ok(Self {
            centroid,
            weight,
            per_dim_m2,
            cov,
        })
    }

    fn absorb(&mut self, x: &[f64]) -> Result<()> {
        let n = self.weight + 1;
        let new_centroid = update_centroid(&self.centroid, n, x)?;
        let scale = (n as f64 - 1.0) / n as f64;
        for d in 0..x.len() {
            // Welford increment: m2 += (x - mean_new)(x - mean_old).
            self.per_dim_m2[d] += (x[d] - new_centroid[d]) * (x[d] - self.centroid[d]);
        }
        if let Some(cov) = &mut self.cov {
            // Rank-1 co-moment update, written so the matrix stays exactly
            // symmetric in floating point.
            let dim = x.len();
            let delta: Vec<f64> = x.iter().zip(&self.centroid).map(|(v, m)| v - m).collect();
            for i in 0..dim {
                let di = scale * delta[i];
                for j in 0..dim {
                    cov[i * dim + j] += di * delta[j];
                }
            }
        }
        self.centroid = new_centroid;
        self.weight = n;
        Ok(())
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn per_dim_m2(&self) -> &[f64] {
        &self.per_dim_m2
    }

    /// Dimension-averaged sample variance; 0 when the cluster holds a single
    /// vector.
    pub fn scalar_variance(&self) -> f64 {
        if self.weight < 2 {
            return 0.0;
        }
        let denom = (self.weight - 1) as f64;
        self.per_dim_m2.iter().map(|m2| m2 / denom).sum::<f64>() / self.per_dim_m2.len() as f64
    }

    /// Sample covariance matrix (co-moment / (n-1)); zero for weight-1
    /// clusters. Diagonal mode yields a diagonal matrix from `per_dim_m2`.
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        let dim = self.centroid.len();
        if self.weight < 2 {
            return DMatrix::zeros(dim, dim);
        }
        let denom = (self.weight - 1) as f64;
        match &self.cov {
            Some(c) => DMatrix::from_row_slice(dim, dim, c) / denom,
            None => DMatrix::from_diagonal(&DVector::from_iterator(
                dim,
                self.per_dim_m2.iter().map(|m2| m2 / denom),
            )),
        }
    }
}

/// All clusters of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMemory {
    class_id: usize,
    clusters: Vec<Cluster>,
}

impl ClassMemory {
    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Total examples ever absorbed for this class.
    pub fn class_weight(&self) -> u64 {
        self.clusters.iter().map(|c| c.weight).sum()
    }
}

/// Summary statistics of one class, the inputs to class selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class_id: usize,
    pub class_weight: u64,
    pub avg_cluster_weight: f64,
    pub avg_cluster_variance: f64,
}

/// What one absorption pass did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbsorbReport {
    pub new_clusters: usize,
    pub updated: usize,
    /// Per-vector routing, in input order.
    pub events: Vec<AbsorbEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbEvent {
    pub class_id: usize,
    pub cluster_index: usize,
    pub created: bool,
}

/// The cluster space: per-class cluster collections behind a shared distance
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpace {
    distance_threshold: f64,
    dim: usize,
    diagonal_covariance: bool,
    classes: BTreeMap<usize, ClassMemory>,
}

impl ClusterSpace {
    /// `diagonal_covariance` restricts the covariance accumulator to the
    /// diagonal, trading pseudo-exemplar fidelity for O(dim) updates.
    pub fn new(distance_threshold: f64, dim: usize, diagonal_covariance: bool) -> Result<Self> {
        if !(distance_threshold > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "distance threshold must be positive, got {distance_threshold}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        Ok(Self {
            distance_threshold,
            dim,
            diagonal_covariance,
            classes: BTreeMap::new(),
        })
    }

    pub fn distance_threshold(&self) -> f64 {
        self.distance_threshold
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal_covariance(&self) -> bool {
        self.diagonal_covariance
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassMemory> {
        self.classes.values()
    }

    pub fn class_ids(&self) -> Vec<usize> {
        self.classes.keys().copied().collect()
    }

    pub fn contains_class(&self, class_id: usize) -> bool {
        self.classes.contains_key(&class_id)
    }

    pub fn class_memory(&self, class_id: usize) -> Option<&ClassMemory> {
        self.classes.get(&class_id)
    }

    /// Total vectors ever absorbed, over all classes.
    pub fn total_weight(&self) -> u64 {
        self.classes.values().map(|m| m.class_weight()).sum()
    }

    /// Total clusters over all classes.
    pub fn centroid_count(&self) -> usize {
        self.classes.values().map(|m| m.clusters.len()).sum()
    }

    /// Folds a batch of vectors into one class, in batch order. Each vector
    /// joins the closest cluster of its class when the centroid distance is
    /// within the threshold (ties to the lowest cluster index) and seeds a new
    /// cluster otherwise.
    pub fn absorb(&mut self, class_id: usize, batch: &[FeatureVector]) -> Result<AbsorbReport> {
        let mut report = AbsorbReport::default();
        for fv in batch {
            if fv.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: fv.dim(),
                });
            }
            let x = fv.as_slice();
            let diagonal = self.diagonal_covariance;
            let memory = self.classes.entry(class_id).or_insert_with(|| ClassMemory {
                class_id,
                clusters: Vec::new(),
            });
            let nearest = memory
                .clusters
                .iter()
                .enumerate()
                .map(|(i, c)| (i, crate::feature_store::euclidean_distance(c.centroid(), x)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            match nearest {
                Some((idx, dist)) if dist <= self.distance_threshold => {
                    memory.clusters[idx].absorb(x)?;
                    report.updated += 1;
                    report.events.push(AbsorbEvent {
                        class_id,
                        cluster_index: idx,
                        created: false,
                    });
                }
                _ => {
                    memory.clusters.push(Cluster::seeded_at(x, diagonal));
                    report.new_clusters += 1;
                    report.events.push(AbsorbEvent {
                        class_id,
                        cluster_index: memory.clusters.len() - 1,
                        created: true,
                    });
                }
            }
        }
        Ok(report)
    }

    /// Absorbs a mixed-class batch, preserving the batch order.
    pub fn absorb_labeled(&mut self, batch: &[LabeledExample]) -> Result<AbsorbReport> {
        let mut report = AbsorbReport::default();
        for ex in batch {
            let r = self.absorb(ex.class_id, std::slice::from_ref(&ex.feature))?;
            report.new_clusters += r.new_clusters;
            report.updated += r.updated;
            report.events.extend(r.events);
        }
        Ok(report)
    }

    pub fn class_stats(&self, class_id: usize) -> Result<ClassStats> {
        let memory = self
            .classes
            .get(&class_id)
            .ok_or(Error::UnknownClass(class_id))?;
        let class_weight = memory.class_weight();
        let k = memory.clusters.len() as f64;
        Ok(ClassStats {
            class_id,
            class_weight,
            avg_cluster_weight: class_weight as f64 / k,
            avg_cluster_variance: memory
                .clusters
                .iter()
                .map(|c| c.scalar_variance())
                .sum::<f64>()
                / k,
        })
    }

    /// Stats for an arbitrary candidate set; classes this space has never
    /// absorbed report zero weight and zero variance.
    pub fn candidate_stats(&self, candidates: impl IntoIterator<Item = usize>) -> Vec<ClassStats> {
        candidates
            .into_iter()
            .map(|class_id| {
                self.class_stats(class_id).unwrap_or(ClassStats {
                    class_id,
                    class_weight: 0,
                    avg_cluster_weight: 0.0,
                    avg_cluster_variance: 0.0,
                })
            })
            .collect()
    }

    /// Draws exactly `n_p` pseudo-exemplars for a class. The budget is split
    /// across clusters proportionally to weight (largest-remainder rounding);
    /// each cluster samples a Gaussian centered on its centroid with its
    /// sample covariance, and weight-1 clusters emit centroid copies.
    pub fn generate_pseudo_exemplars(
        &self,
        class_id: usize,
        n_p: usize,
        seed: u64,
    ) -> Result<Vec<LabeledExample>> {
        if n_p == 0 {
            return Err(Error::InvalidArgument(
                "pseudo-exemplar count must be positive".into(),
            ));
        }
        let memory = self
            .classes
            .get(&class_id)
            .ok_or(Error::UnknownClass(class_id))?;
        let counts = largest_remainder_allocation(
            n_p,
            &memory.clusters.iter().map(|c| c.weight).collect::<Vec<_>>(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n_p);
        for (cluster, count) in memory.clusters.iter().zip(counts) {
            if count == 0 {
                continue;
            }
            if cluster.weight < 2 {
                for _ in 0..count {
                    out.push(LabeledExample {
                        class_id,
                        feature: FeatureVector::new(cluster.centroid.clone())?,
                    });
                }
                continue;
            }
            let samples: Vec<Vec<f64>> = match &cluster.cov {
                None => {
                    let denom = (cluster.weight - 1) as f64;
                    let stddev: Vec<f64> = cluster
                        .per_dim_m2
                        .iter()
                        .map(|m2| (m2 / denom).max(0.0).sqrt())
                        .collect();
                    (0..count)
                        .map(|_| {
                            cluster
                                .centroid
                                .iter()
                                .zip(&stddev)
                                .map(|(m, s)| {
                                    let z: f64 = StandardNormal.sample(&mut rng);
                                    m + s * z
                                })
                                .collect()
                        })
                        .collect()
                }
                Some(_) => {
                    // Sample through the eigendecomposition so rank-deficient
                    // covariances are handled without a strict Cholesky.
                    let eig = cluster.sample_covariance().symmetric_eigen();
                    let scales: Vec<f64> =
                        eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
                    (0..count)
                        .map(|_| {
                            let z = DVector::from_iterator(
                                self.dim,
                                (0..self.dim).map(|_| {
                                    let v: f64 = StandardNormal.sample(&mut rng);
                                    v
                                }),
                            );
                            let scaled = DVector::from_iterator(
                                self.dim,
                                z.iter().zip(&scales).map(|(z, s)| z * s),
                            );
                            let offset = &eig.eigenvectors * scaled;
                            cluster
                                .centroid
                                .iter()
                                .zip(offset.iter())
                                .map(|(m, o)| m + o)
                                .collect()
                        })
                        .collect()
                }
            };
            for values in samples {
                out.push(LabeledExample {
                    class_id,
                    feature: FeatureVector::new(values)?,
                });
            }
        }
        debug_assert_eq!(out.len(), n_p);
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpaceDoc::from(self)).expect("cluster space serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: SpaceDoc = serde_json::from_str(json).map_err(|e| Error::Json {
            path: "<string>".into(),
            source: e,
        })?;
        doc.try_into()
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
        Self::from_json(&json).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }
}

/// Splits `total` across buckets proportionally to `weights` using the
/// largest-remainder method; ties go to the lower index.
fn largest_remainder_allocation(total: usize, weights: &[u64]) -> Vec<usize> {
    let sum: u64 = weights.iter().sum();
    if sum == 0 || weights.is_empty() {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights
        .iter()
        .map(|w| total as f64 * *w as f64 / sum as f64)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Versioned checkpoint document for [`ClusterSpace`].
#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    version: u32,
    distance_threshold: f64,
    dim: usize,
    diagonal_covariance: bool,
    classes: Vec<ClassDoc>,
}

#[derive(Serialize, Deserialize)]
struct ClassDoc {
    class_id: usize,
    clusters: Vec<ClusterDoc>,
}

#[derive(Serialize, Deserialize)]
struct ClusterDoc {
    centroid: Vec<f64>,
    weight: u64,
    per_dim_m2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariance: Option<Vec<f64>>,
}

const SPACE_DOC_VERSION: u32 = 1;

impl From<&ClusterSpace> for SpaceDoc {
    fn from(space: &ClusterSpace) -> Self {
        SpaceDoc {
            version: SPACE_DOC_VERSION,
            distance_threshold: space.distance_threshold,
            dim: space.dim,
            diagonal_covariance: space.diagonal_covariance,
            classes: space
                .classes
                .values()
                .map(|m| ClassDoc {
                    class_id: m.class_id,
                    clusters: m
                        .clusters
                        .iter()
                        .map(|c| ClusterDoc {
                            centroid: c.centroid.clone(),
                            weight: c.weight,
                            per_dim_m2: c.per_dim_m2.clone(),
                            covariance: c.cov.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<SpaceDoc> for ClusterSpace {
    type Error = Error;

    fn try_from(doc: SpaceDoc) -> Result<Self> {
        if doc.version != SPACE_DOC_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported cluster-space version {}",
                doc.version
            )));
        }
        let mut space =
            ClusterSpace::new(doc.distance_threshold, doc.dim, doc.diagonal_covariance)?;
        for class_doc in doc.classes {
            let mut clusters = Vec::with_capacity(class_doc.clusters.len());
            for c in class_doc.clusters {
                if c.centroid.len() != doc.dim {
                    return Err(Error::DimensionMismatch {
                        expected: doc.dim,
                        got: c.centroid.len(),
                    });
                }
                if doc.diagonal_covariance != c.covariance.is_none() {
                    return Err(Error::InvalidArgument(
                        "covariance presence disagrees with diagonal_covariance flag".into(),
                    ));
                }
                clusters.push(Cluster::from_parts(
                    c.centroid,
                    c.weight,
                    c.per_dim_m2,
                    c.covariance,
                )?);
            }
            space.classes.insert(
                class_doc.class_id,
                ClassMemory {
                    class_id: class_doc.class_id,
                    clusters,
                },
            );
        }
        Ok(space)
    }
}
