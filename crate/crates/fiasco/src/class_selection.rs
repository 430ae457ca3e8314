//! Active class selection: rank candidate classes by a policy and convert
//! rank positions into attractive/repulsive navigation forces.
//!
//! The statistic-based policies read cluster statistics only; the uniform
//! baseline shuffles; the redistricting baseline needs the batch learner's
//! stored raw features and measures how much each class's predictions change
//! under cross-validation when recent samples are added.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster_memory::ClassStats;
use crate::error::{Error, Result};
use crate::feature_store::LabeledExample;
use crate::linear_classifier::{train, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcsPolicy {
    /// Prefer classes with fewer absorbed examples overall.
    LowClassWeight,
    /// Prefer classes whose clusters are individually light (outliers).
    LowClusterWeight,
    /// Prefer classes whose clusters are tight.
    LowClusterVariance,
    /// Prefer classes whose clusters are spread out.
    HighClusterVariance,
    /// Seeded random order.
    Uniform,
    /// Cross-validation volatility; see [`redistrict_rank`].
    Redistrict,
}

impl std::str::FromStr for AcsPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low-class-weight" => Ok(Self::LowClassWeight),
            "low-cluster-weight" => Ok(Self::LowClusterWeight),
            "low-cluster-var" => Ok(Self::LowClusterVariance),
            "high-cluster-var" => Ok(Self::HighClusterVariance),
            "uniform" => Ok(Self::Uniform),
            "redistrict" => Ok(Self::Redistrict),
            other => Err(Error::InvalidArgument(format!(
                "unknown ACS policy `{other}` (expected low-class-weight|low-cluster-weight|\
                 low-cluster-var|high-cluster-var|uniform|redistrict)"
            ))),
        }
    }
}

impl std::fmt::Display for AcsPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::LowClassWeight => "low-class-weight",
            Self::LowClusterWeight => "low-cluster-weight",
            Self::LowClusterVariance => "low-cluster-var",
            Self::HighClusterVariance => "high-cluster-var",
            Self::Uniform => "uniform",
            Self::Redistrict => "redistrict",
        };
        f.write_str(s)
    }
}

/// A preference order over candidate classes, most-preferred first, with the
/// per-class score the order was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRanking {
    pub ordered: Vec<usize>,
    pub scores: BTreeMap<usize, f64>,
}

impl ClassRanking {
    /// Sub-ranking over `keep`, preserving rank order.
    pub fn restricted_to(&self, keep: &std::collections::BTreeSet<usize>) -> ClassRanking {
        ClassRanking {
            ordered: self
                .ordered
                .iter()
                .copied()
                .filter(|c| keep.contains(c))
                .collect(),
            scores: self
                .scores
                .iter()
                .filter(|(c, _)| keep.contains(c))
                .map(|(c, s)| (*c, *s))
                .collect(),
        }
    }
}

/// Per-quartile force magnitudes; negative attracts, positive repels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct QuartileSplit {
    name: SplitName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SplitName {
    AttractRepulse,
    AttractIgnore,
    Mod1,
    Mod2,
    Mod3,
    AttractOnly,
}

impl QuartileSplit {
    pub const ATTRACT_REPULSE: Self = Self { name: SplitName::AttractRepulse };
    pub const ATTRACT_IGNORE: Self = Self { name: SplitName::AttractIgnore };
    pub const MOD1: Self = Self { name: SplitName::Mod1 };
    pub const MOD2: Self = Self { name: SplitName::Mod2 };
    pub const MOD3: Self = Self { name: SplitName::Mod3 };
    pub const ATTRACT_ONLY: Self = Self { name: SplitName::AttractOnly };

    pub fn forces(&self) -> [f64; 4] {
        match self.name {
            SplitName::AttractRepulse => [-20.0, -10.0, 10.0, 20.0],
            SplitName::AttractIgnore => [-20.0, -10.0, 0.0, 0.0],
            SplitName::Mod1 => [-20.0, -10.0, 5.0, 5.0],
            SplitName::Mod2 => [-20.0, -10.0, -5.0, -5.0],
            SplitName::Mod3 => [-20.0, -10.0, -10.0, -10.0],
            SplitName::AttractOnly => [-20.0, -20.0, -20.0, -20.0],
        }
    }
}

impl Default for QuartileSplit {
    fn default() -> Self {
        Self::MOD1
    }
}

impl std::str::FromStr for QuartileSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attract-repulse" => Ok(Self::ATTRACT_REPULSE),
            "attract-ignore" => Ok(Self::ATTRACT_IGNORE),
            "mod1" => Ok(Self::MOD1),
            "mod2" => Ok(Self::MOD2),
            "mod3" => Ok(Self::MOD3),
            "attract-only" => Ok(Self::ATTRACT_ONLY),
            other => Err(Error::InvalidArgument(format!(
                "unknown force split `{other}` (expected mod1|mod2|mod3|attract-repulse|\
                 attract-ignore|attract-only)"
            ))),
        }
    }
}

impl std::fmt::Display for QuartileSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self.name {
            SplitName::AttractRepulse => "attract-repulse",
            SplitName::AttractIgnore => "attract-ignore",
            SplitName::Mod1 => "mod1",
            SplitName::Mod2 => "mod2",
            SplitName::Mod3 => "mod3",
            SplitName::AttractOnly => "attract-only",
        };
        f.write_str(s)
    }
}

impl TryFrom<String> for QuartileSplit {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<QuartileSplit> for String {
    fn from(split: QuartileSplit) -> String {
        split.to_string()
    }
}

/// Per-class force values for the potential field.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceAssignment {
    pub forces: BTreeMap<usize, f64>,
}

/// Orders candidates per the policy. Ties break by ascending class id.
/// Classes with zero absorbed examples sort first under every statistic-based
/// policy, including high-cluster-variance where their zero variance would
/// otherwise put them last.
pub fn rank_classes(stats: &[ClassStats], policy: AcsPolicy, seed: u64) -> Result<ClassRanking> {
    if stats.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    if policy == AcsPolicy::Redistrict {
        return Err(Error::InvalidArgument(
            "redistrict ranking needs stored raw features; use redistrict_rank".into(),
        ));
    }
    let mut entries: Vec<&ClassStats> = stats.iter().collect();
    let mut scores = BTreeMap::new();
    match policy {
        AcsPolicy::Uniform => {
            entries.sort_by_key(|s| s.class_id);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            entries.shuffle(&mut rng);
            for (pos, s) in entries.iter().enumerate() {
                scores.insert(s.class_id, pos as f64);
            }
        }
        AcsPolicy::LowClassWeight => {
            entries.sort_by(|a, b| {
                (a.class_weight, a.class_id).cmp(&(b.class_weight, b.class_id))
            });
            for s in &entries {
                scores.insert(s.class_id, s.class_weight as f64);
            }
        }
        AcsPolicy::LowClusterWeight => {
            entries.sort_by(|a, b| {
                a.avg_cluster_weight
                    .total_cmp(&b.avg_cluster_weight)
                    .then(a.class_id.cmp(&b.class_id))
            });
            for s in &entries {
                scores.insert(s.class_id, s.avg_cluster_weight);
            }
        }
        AcsPolicy::LowClusterVariance => {
            entries.sort_by(|a, b| {
                a.avg_cluster_variance
                    .total_cmp(&b.avg_cluster_variance)
                    .then(a.class_id.cmp(&b.class_id))
            });
            for s in &entries {
                scores.insert(s.class_id, s.avg_cluster_variance);
            }
        }
        AcsPolicy::HighClusterVariance => {
            let key = |s: &ClassStats| {
                if s.class_weight == 0 {
                    f64::INFINITY
                } else {
                    s.avg_cluster_variance
                }
            };
            entries.sort_by(|a, b| key(b).total_cmp(&key(a)).then(a.class_id.cmp(&b.class_id)));
            for s in &entries {
                scores.insert(s.class_id, key(s));
            }
        }
        AcsPolicy::Redistrict => unreachable!(),
    }
    Ok(ClassRanking {
        ordered: entries.iter().map(|s| s.class_id).collect(),
        scores,
    })
}

/// Ranks classes by prediction volatility: a seeded k-fold split of the
/// stored raw features, and per fold, the fraction of held-out examples of
/// each class whose prediction flips when `recent` is added to the training
/// side, averaged over the folds that contain the class. Classes with fewer
/// than `folds` stored examples get volatility 0. Most volatile first; ties
/// by ascending class id.
pub fn redistrict_rank(
    stored: &[LabeledExample],
    recent: &[LabeledExample],
    folds: usize,
    seed: u64,
    train_cfg: &TrainConfig,
) -> Result<ClassRanking> {
    if stored.is_empty() {
        return Err(Error::InvalidArgument(
            "redistricting requires a nonempty stored set".into(),
        ));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("fold count must be at least 2".into()));
    }

    let mut class_totals: BTreeMap<usize, usize> = BTreeMap::new();
    for ex in stored {
        *class_totals.entry(ex.class_id).or_default() += 1;
    }
    let mut candidates: Vec<usize> = class_totals.keys().copied().collect();
    for ex in recent {
        if !class_totals.contains_key(&ex.class_id) {
            candidates.push(ex.class_id);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..stored.len()).collect();
    order.shuffle(&mut rng);

    // fold id per stored index; contiguous chunks of the shuffled order
    let mut fold_of = vec![0usize; stored.len()];
    let chunk = stored.len().div_ceil(folds);
    for (pos, &idx) in order.iter().enumerate() {
        fold_of[idx] = pos / chunk;
    }

    let mut flip_fraction_sums: BTreeMap<usize, f64> = BTreeMap::new();
    let mut fold_appearances: BTreeMap<usize, usize> = BTreeMap::new();
    for fold in 0..folds {
        let rest: Vec<LabeledExample> = stored
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] != fold)
            .map(|(_, e)| e.clone())
            .collect();
        let held: Vec<&LabeledExample> = stored
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] == fold)
            .map(|(_, e)| e)
            .collect();
        if held.is_empty() {
            continue;
        }
        let mut augmented = rest.clone();
        augmented.extend_from_slice(recent);
        // A fold whose training side degenerates (single class) yields no
        // signal and is skipped.
        let (base, aug) = match (train(&rest, train_cfg), train(&augmented, train_cfg)) {
            (Ok(b), Ok(a)) => (b, a),
            _ => continue,
        };
        let mut class_flips: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for ex in held {
            let entry = class_flips.entry(ex.class_id).or_default();
            entry.1 += 1;
            if base.predict(&ex.feature)? != aug.predict(&ex.feature)? {
                entry.0 += 1;
            }
        }
        for (class_id, (flips, count)) in class_flips {
            *flip_fraction_sums.entry(class_id).or_default() += flips as f64 / count as f64;
            *fold_appearances.entry(class_id).or_default() += 1;
        }
    }

    let mut scores = BTreeMap::new();
    for &class_id in &candidates {
        let eligible = class_totals.get(&class_id).copied().unwrap_or(0) >= folds;
        let appearances = fold_appearances.get(&class_id).copied().unwrap_or(0);
        let volatility = if eligible && appearances > 0 {
            flip_fraction_sums[&class_id] / appearances as f64
        } else {
            0.0
        };
        scores.insert(class_id, volatility);
    }
    let mut ordered = candidates;
    ordered.sort_by(|a, b| scores[b].total_cmp(&scores[a]).then(a.cmp(b)));
    Ok(ClassRanking { ordered, scores })
}

/// Maps rank positions to quartile forces. Quartile sizes use ceiling
/// division, so earlier quartiles may hold one more class than later ones and
/// the first quartile is never empty.
pub fn assign_forces(ranking: &ClassRanking, split: &QuartileSplit) -> ForceAssignment {
    let k = ranking.ordered.len();
    let base = k / 4;
    let rem = k % 4;
    let magnitudes = split.forces();
    let mut forces = BTreeMap::new();
    let mut pos = 0usize;
    for (q, magnitude) in magnitudes.iter().enumerate() {
        let size = base + usize::from(q < rem);
        for _ in 0..size {
            forces.insert(ranking.ordered[pos], *magnitude);
            pos += 1;
        }
    }
    ForceAssignment { forces }
}
