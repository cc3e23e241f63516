//! Optimization-free adversarial augmentation.
//!
//! For every class, seed points are corrupted with Gaussian noise to form a
//! batch of candidates. A fresh linear SVM is trained to tell the class data
//! (plus already accepted neighbors of the same kind) from the candidates,
//! and exactly one candidate per batch is accepted:
//!
//! * positive neighbors maximize `P_D(x) - gamma * max(0, r1 - min_{X+} d(x, .))`,
//!   i.e. they look real and keep a minimum spread;
//! * negative neighbors minimize
//!   `P_D(x) + gamma * max(0, r2 - min_{X-} d(x, .)) + gamma * max(0, min_{X} d(x, .) - r3)`,
//!   i.e. they look fake while staying within `r3` of the class.
//!
//! `d` is the cosine distance and the radii derive from the smallest
//! pairwise distance `rho` among the original class samples.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_subset, parse_feature_header, parse_features, FeatureVector, LabeledDataset};
use crate::discriminator::{train_svm, LinearSvm, SvmTrainConfig};
use crate::error::{CoinError, Result};
use crate::linalg::{dot, norm};
use crate::rng::{derive_seed, seeded_rng, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Candidates drawn per batch (T).
    pub candidates_per_batch: usize,
    /// Penalty weight of the distance hinges.
    pub gamma: f64,
    /// Standard deviation of the seed corruption, in standardized units.
    pub noise_sigma: f64,
    /// Positive neighbors generated per class.
    pub n_pos: usize,
    /// Negative neighbors generated per class.
    pub n_neg: usize,
    pub seed: u64,
    pub svm: SvmTrainConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            candidates_per_batch: 200,
            gamma: 1e-2,
            noise_sigma: 0.1,
            n_pos: 5,
            n_neg: 20,
            seed: 0,
            svm: SvmTrainConfig::default(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidates_per_batch < 2 {
            return Err(CoinError::InvalidParameter("candidates_per_batch must be >= 2".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(CoinError::InvalidParameter("gamma must be finite and >= 0".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(CoinError::InvalidParameter(
                "noise_sigma must be finite and >= 0".into(),
            ));
        }
        self.svm.validate()
    }
}

/// Diversity and proximity radii of one class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub rho: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl Radii {
    pub fn from_rho(rho: f64) -> Self {
        Self {
            rho,
            r1: rho,
            r2: rho,
            r3: 3.0 * rho,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NeighborKind {
    #[serde(rename = "orig")]
    Original,
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl NeighborKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NeighborKind::Original => "orig",
            NeighborKind::Positive => "pos",
            NeighborKind::Negative => "neg",
        }
    }
}

impl fmt::Display for NeighborKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NeighborKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "orig" => Ok(NeighborKind::Original),
            "pos" => Ok(NeighborKind::Positive),
            "neg" => Ok(NeighborKind::Negative),
            other => Err(format!("unknown kind {other:?}")),
        }
    }
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CoinError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(CoinError::ZeroVector);
    }
    Ok((1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0))
}

/// Smallest cosine distance from `x` to any member of `set`; `None` for an
/// empty set.
pub fn nearest_cosine<'a>(x: &[f64], set: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for y in set {
        let d = cosine_distance(x, y)?;
        best = Some(best.map_or(d, |b| b.min(d)));
    }
    Ok(best)
}

fn min_pairwise(points: &[FeatureVector], skip_zero: bool) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = cosine_distance(&points[i], &points[j])?;
            if skip_zero && d <= 0.0 {
                continue;
            }
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    Ok(best)
}

/// Radii from the minimum cosine distance over distinct pairs of the class.
/// A zero minimum (parallel or duplicate points) is reported as
/// [`CoinError::DegenerateRho`].
pub fn compute_radii(class_points: &[FeatureVector]) -> Result<Radii> {
    if class_points.len() < 2 {
        return Err(CoinError::InsufficientSamples {
            needed: 2,
            got: class_points.len(),
        });
    }
    let rho = min_pairwise(class_points, false)?.expect("at least one pair");
    if rho <= 0.0 {
        return Err(CoinError::DegenerateRho);
    }
    Ok(Radii::from_rho(rho))
}

/// Like [`compute_radii`], but a zero minimum falls back to the smallest
/// strictly positive pairwise distance. The flag reports the fallback.
pub fn resolve_radii(class_points: &[FeatureVector]) -> Result<(Radii, bool)> {
    match compute_radii(class_points) {
        Ok(r) => Ok((r, false)),
        Err(CoinError::DegenerateRho) => {
            let rho = min_pairwise(class_points, true)?.ok_or(CoinError::DegenerateRho)?;
            Ok((Radii::from_rho(rho), true))
        }
        Err(e) => Err(e),
    }
}

/// `x + eps` with `eps ~ N(0, sigma^2 I)`.
pub fn corrupt_seed(x: &[f64], noise_sigma: f64, rng: &mut Rng) -> FeatureVector {
    x.iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v + noise_sigma * z
        })
        .collect()
}

/// Positive-neighbor objective from its ingredients. `nearest_positive` is
/// `None` while no positive neighbor exists yet.
pub fn positive_objective(p_real: f64, nearest_positive: Option<f64>, radii: &Radii, gamma: f64) -> f64 {
    let spread = nearest_positive.map_or(0.0, |d| (radii.r1 - d).max(0.0));
    p_real - gamma * spread
}

/// Negative-neighbor objective (to be minimized) from its ingredients.
pub fn negative_objective(
    p_real: f64,
    nearest_negative: Option<f64>,
    nearest_original: f64,
    radii: &Radii,
    gamma: f64,
) -> f64 {
    let spread = nearest_negative.map_or(0.0, |d| (radii.r2 - d).max(0.0));
    let proximity = (nearest_original - radii.r3).max(0.0);
    p_real + gamma * spread + gamma * proximity
}

pub fn score_positive_candidate(
    x: &[f64],
    discriminator: &LinearSvm,
    existing_positives: &[FeatureVector],
    radii: &Radii,
    gamma: f64,
) -> Result<f64> {
    let p = discriminator.real_probability(x)?;
    let nearest = nearest_cosine(x, existing_positives)?;
    Ok(positive_objective(p, nearest, radii, gamma))
}

pub fn score_negative_candidate(
    x: &[f64],
    discriminator: &LinearSvm,
    originals: &[FeatureVector],
    existing_negatives: &[FeatureVector],
    radii: &Radii,
    gamma: f64,
) -> Result<f64> {
    let p = discriminator.real_probability(x)?;
    let nearest_neg = nearest_cosine(x, existing_negatives)?;
    let nearest_orig = nearest_cosine(x, originals)?.ok_or(CoinError::EmptyClass("originals"))?;
    Ok(negative_objective(p, nearest_neg, nearest_orig, radii, gamma))
}

/// One accepted neighbor with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedNeighbor {
    pub values: FeatureVector,
    /// Position of the corrupted seed inside the class originals.
    pub seed_index: usize,
    pub batch: usize,
}

/// Everything needed to re-score a batch offline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchLog {
    pub class: usize,
    pub kind: NeighborKind,
    pub batch: usize,
    pub candidates: Vec<FeatureVector>,
    pub seed_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub accepted: usize,
    pub discriminator: LinearSvm,
    /// Number of same-kind neighbors accepted before this batch; they are the
    /// first `existing` entries of the final neighbor list.
    pub existing: usize,
    pub radii: Radii,
}

#[derive(Clone, Debug)]
pub struct NeighborRun {
    pub neighbors: Vec<GeneratedNeighbor>,
    pub logs: Vec<BatchLog>,
    pub radii: Radii,
    pub rho_fallback: bool,
}

fn kind_stream(class: usize, kind: NeighborKind) -> u64 {
    (class as u64) << 8 | kind as u64
}

/// Index of the best score, lowest index on ties.
fn arg_best(scores: &[f64], maximize: bool) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        let better = if maximize { s > scores[best] } else { s < scores[best] };
        if better {
            best = i;
        }
    }
    best
}

fn generate_neighbors(
    class_points: &[FeatureVector],
    class: usize,
    kind: NeighborKind,
    count: usize,
    config: &AugmentConfig,
) -> Result<NeighborRun> {
    config.validate()?;
    let (radii, rho_fallback) = resolve_radii(class_points)?;
    let mut rng = seeded_rng(derive_seed(config.seed, kind_stream(class, kind)));
    let mut neighbors: Vec<GeneratedNeighbor> = Vec::with_capacity(count);
    let mut accepted_values: Vec<FeatureVector> = Vec::with_capacity(count);
    let mut logs = Vec::with_capacity(count);
    let t = config.candidates_per_batch;

    for batch in 0..count {
        let seed_indices: Vec<usize> = (0..t).map(|_| rng.random_range(0..class_points.len())).collect();
        let candidates: Vec<FeatureVector> = seed_indices
            .iter()
            .map(|&s| corrupt_seed(&class_points[s], config.noise_sigma, &mut rng))
            .collect();

        let real: Vec<FeatureVector> = class_points.iter().chain(&accepted_values).cloned().collect();
        let svm_config = SvmTrainConfig {
            seed: derive_seed(config.svm.seed, kind_stream(class, kind) << 32 | batch as u64),
            ..config.svm.clone()
        };
        let svm = train_svm(&real, &candidates, &svm_config)?;

        let scores = candidates
            .iter()
            .map(|x| match kind {
                NeighborKind::Positive => score_positive_candidate(x, &svm, &accepted_values, &radii, config.gamma),
                _ => score_negative_candidate(x, &svm, class_points, &accepted_values, &radii, config.gamma),
            })
            .collect::<Result<Vec<f64>>>()?;
        let accepted = arg_best(&scores, kind == NeighborKind::Positive);

        neighbors.push(GeneratedNeighbor {
            values: candidates[accepted].clone(),
            seed_index: seed_indices[accepted],
            batch,
        });
        accepted_values.push(candidates[accepted].clone());
        logs.push(BatchLog {
            class,
            kind,
            batch,
            candidates,
            seed_indices,
            scores,
            accepted,
            discriminator: svm,
            existing: batch,
            radii,
        });
    }

    Ok(NeighborRun {
        neighbors,
        logs,
        radii,
        rho_fallback,
    })
}

/// Positive neighbors of one class, one accepted candidate per batch.
pub fn generate_positive_neighbors(
    class_points: &[FeatureVector],
    class: usize,
    config: &AugmentConfig,
) -> Result<NeighborRun> {
    generate_neighbors(class_points, class, NeighborKind::Positive, config.n_pos, config)
}

/// Negative neighbors of one class, one accepted candidate per batch.
pub fn generate_negative_neighbors(
    class_points: &[FeatureVector],
    class: usize,
    config: &AugmentConfig,
) -> Result<NeighborRun> {
    generate_neighbors(class_points, class, NeighborKind::Negative, config.n_neg, config)
}

/// A node of the expanded dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedPoint {
    pub values: FeatureVector,
    pub class: usize,
    pub kind: NeighborKind,
    /// Seed position inside the class originals; `None` for originals.
    pub seed_index: Option<usize>,
    pub batch: Option<usize>,
}

/// Originals plus generated neighbors, stored class by class as
/// originals, positives, negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDataset {
    dim: usize,
    n_classes: usize,
    points: Vec<AugmentedPoint>,
}

impl AugmentedDataset {
    pub fn from_points(points: Vec<AugmentedPoint>) -> Result<Self> {
        let dim = points.first().map(|p| p.values.len()).ok_or(CoinError::EmptyInput)?;
        let mut n_classes = 0;
        for p in &points {
            if p.values.len() != dim {
                return Err(CoinError::DimensionMismatch {
                    expected: dim,
                    got: p.values.len(),
                });
            }
            if p.values.iter().any(|v| !v.is_finite()) {
                return Err(CoinError::InvalidParameter("non-finite augmented value".into()));
            }
            if p.kind != NeighborKind::Original && (p.seed_index.is_none() || p.batch.is_none()) {
                return Err(CoinError::InvalidParameter("generated point without provenance".into()));
            }
            n_classes = n_classes.max(p.class + 1);
        }
        Ok(Self { dim, n_classes, points })
    }

    /// The original dataset with no generated neighbors.
    pub fn from_originals(dataset: &LabeledDataset) -> Result<Self> {
        let mut points = Vec::with_capacity(dataset.len());
        for c in 0..dataset.n_classes() {
            for (s, _) in dataset.samples().iter().zip(dataset.labels()).filter(|(_, &l)| l == c) {
                points.push(AugmentedPoint {
                    values: s.clone(),
                    class: c,
                    kind: NeighborKind::Original,
                    seed_index: None,
                    batch: None,
                });
            }
        }
        Self::from_points(points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[AugmentedPoint] {
        &self.points
    }

    pub fn of(&self, class: usize, kind: NeighborKind) -> impl Iterator<Item = &AugmentedPoint> + '_ {
        self.points.iter().filter(move |p| p.class == class && p.kind == kind)
    }

    pub fn count(&self, class: usize, kind: NeighborKind) -> usize {
        self.of(class, kind).count()
    }
}

/// Output of [`expand_dataset_logged`].
#[derive(Clone, Debug)]
pub struct Expansion {
    pub dataset: AugmentedDataset,
    pub logs: Vec<BatchLog>,
    pub radii: Vec<Radii>,
    pub rho_fallback: Vec<bool>,
}

pub fn expand_dataset(train: &LabeledDataset, config: &AugmentConfig) -> Result<AugmentedDataset> {
    expand_dataset_logged(train, config).map(|e| e.dataset)
}

/// Generates both neighbor kinds for every class and assembles the expanded
/// dataset together with the per-batch selection logs.
pub fn expand_dataset_logged(train: &LabeledDataset, config: &AugmentConfig) -> Result<Expansion> {
    config.validate()?;
    let mut points = Vec::new();
    let mut logs = Vec::new();
    let mut radii = Vec::new();
    let mut rho_fallback = Vec::new();
    for c in 0..train.n_classes() {
        let subset = class_subset(train, c)?;
        let originals: Vec<FeatureVector> = subset.samples(train).cloned().collect();
        if originals.len() < 2 {
            return Err(CoinError::InsufficientSamples {
                needed: 2,
                got: originals.len(),
            });
        }
        let pos = generate_positive_neighbors(&originals, c, config)?;
        let neg = generate_negative_neighbors(&originals, c, config)?;
        radii.push(pos.radii);
        rho_fallback.push(pos.rho_fallback);

        points.extend(originals.into_iter().map(|values| AugmentedPoint {
            values,
            class: c,
            kind: NeighborKind::Original,
            seed_index: None,
            batch: None,
        }));
        for (kind, run) in [(NeighborKind::Positive, pos), (NeighborKind::Negative, neg)] {
            points.extend(run.neighbors.into_iter().map(|g| AugmentedPoint {
                values: g.values,
                class: c,
                kind,
                seed_index: Some(g.seed_index),
                batch: Some(g.batch),
            }));
            logs.extend(run.logs);
        }
    }
    Ok(Expansion {
        dataset: AugmentedDataset::from_points(points)?,
        logs,
        radii,
        rho_fallback,
    })
}

/// Writes `f0,...,f{d-1},class,kind,seed_index,batch`; provenance fields are
/// empty for originals.
pub fn save_augmented(dataset: &AugmentedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = String::new();
    for k in 0..dataset.dim() {
        body.push_str(&format!("f{k},"));
    }
    body.push_str("class,kind,seed_index,batch\n");
    for p in dataset.points() {
        for v in &p.values {
            body.push_str(&format!("{v},"));
        }
        let opt = |o: Option<usize>| o.map(|v| v.to_string()).unwrap_or_default();
        body.push_str(&format!(
            "{},{},{},{}\n",
            p.class,
            p.kind,
            opt(p.seed_index),
            opt(p.batch)
        ));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CoinError::io(path, e))
}

pub fn load_augmented(path: impl AsRef<Path>) -> Result<AugmentedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CoinError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CoinError::malformed(path, 1, e.to_string()))?
        .clone();
    let dim = parse_feature_header(&header, "class").map_err(|m| CoinError::malformed(path, 1, m))?;
    let tail: Vec<&str> = header.iter().skip(dim).collect();
    if tail != ["class", "kind", "seed_index", "batch"] {
        return Err(CoinError::malformed(
            path,
            1,
            format!("unexpected trailing columns {tail:?}"),
        ));
    }

    let mut points = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| CoinError::malformed(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |m: String| CoinError::malformed(path, line, m);
        if record.len() != dim + 4 {
            return Err(bad(format!("expected {} fields, found {}", dim + 4, record.len())));
        }
        let values = parse_features(&record, dim).map_err(bad)?;
        let class = record[dim]
            .parse()
            .map_err(|_| bad(format!("field `class`: invalid class id {:?}", &record[dim])))?;
        let kind: NeighborKind = record[dim + 1].parse().map_err(|m| bad(format!("field `kind`: {m}")))?;
        let opt = |k: usize, name: &str| -> Result<Option<usize>> {
            let raw = record[k].trim();
            if raw.is_empty() {
                Ok(None)
            } else {
                raw.parse()
                    .map(Some)
                    .map_err(|_| CoinError::malformed(path, line, format!("field `{name}`: invalid index {raw:?}")))
            }
        };
        points.push(AugmentedPoint {
            values,
            class,
            kind,
            seed_index: opt(dim + 2, "seed_index")?,
            batch: opt(dim + 3, "batch")?,
        });
    }
    AugmentedDataset::from_points(points).map_err(|e| CoinError::malformed(path, 0, e.to_string()))
}
