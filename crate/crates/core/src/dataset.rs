//! Labeled vector datasets: synthetic generation, stratified splitting,
//! standardization and CSV persistence.
//!
//! The synthetic benchmark is a pair of interleaved half-circle arcs. Class 0
//! is the upper unit half circle centred at the origin, class 1 is the lower
//! unit half circle centred at `(1, 0.5)`, so the two arcs hook into each
//! other and no single axis-aligned threshold separates them.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CoinError, Result};
use crate::rng::seeded_rng;

/// A point in feature space.
pub type FeatureVector = Vec<f64>;

/// Samples with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    name: String,
    dim: usize,
    samples: Vec<FeatureVector>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    /// Validates lengths, a shared dimension and finite entries.
    pub fn new(name: impl Into<String>, samples: Vec<FeatureVector>, labels: Vec<usize>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(CoinError::LengthMismatch {
                left: samples.len(),
                right: labels.len(),
            });
        }
        let dim = samples.first().map(Vec::len).ok_or(CoinError::EmptyInput)?;
        if dim == 0 {
            return Err(CoinError::InvalidParameter("feature dimension must be >= 1".into()));
        }
        for s in &samples {
            if s.len() != dim {
                return Err(CoinError::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(CoinError::InvalidParameter("non-finite feature value".into()));
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            samples,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[FeatureVector] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `max(label) + 1`.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Checks that every class in `0..n_classes` has at least one member.
    pub fn check_classes(&self, n_classes: usize) -> Result<()> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= n_classes) {
            return Err(CoinError::UnknownClass(bad));
        }
        let counts = self.class_counts();
        for c in 0..n_classes {
            if counts.get(c).copied().unwrap_or(0) == 0 {
                return Err(CoinError::UnknownClass(c));
            }
        }
        Ok(())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Sub-dataset made of the given positions, in the given order.
    pub fn select(&self, indices: &[usize], name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            dim: self.dim,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn map_samples(&self, f: impl Fn(&[f64]) -> FeatureVector) -> Self {
        Self {
            name: self.name.clone(),
            dim: self.dim,
            samples: self.samples.iter().map(|s| f(s)).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Members of one class, as positions into the parent dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSubset {
    pub class: usize,
    pub indices: Vec<usize>,
}

impl ClassSubset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn samples<'a>(&'a self, parent: &'a LabeledDataset) -> impl Iterator<Item = &'a FeatureVector> + 'a {
        self.indices.iter().map(move |&i| &parent.samples[i])
    }
}

/// Parameters of the interleaved half-circle generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoonsParams {
    pub n_per_class: usize,
    pub noise_sigma: f64,
    #[serde(default)]
    pub rotation: f64,
    pub seed: u64,
}

impl Default for MoonsParams {
    fn default() -> Self {
        Self {
            n_per_class: 150,
            noise_sigma: 0.25,
            rotation: 0.0,
            seed: 0,
        }
    }
}

/// Two interleaved half-circle arcs with isotropic Gaussian noise.
///
/// Arc parameters are evenly spaced on `[0, pi]`. Samples are ordered class 0
/// first, then class 1.
pub fn generate_entangled_manifolds(params: &MoonsParams) -> Result<LabeledDataset> {
    if params.n_per_class == 0 {
        return Err(CoinError::InvalidParameter("n_per_class must be >= 1".into()));
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return Err(CoinError::InvalidParameter(
            "noise_sigma must be finite and >= 0".into(),
        ));
    }
    if !params.rotation.is_finite() {
        return Err(CoinError::InvalidParameter("rotation must be finite".into()));
    }
    let n = params.n_per_class;
    let step = if n > 1 { PI / (n - 1) as f64 } else { 0.0 };
    let (sin_r, cos_r) = params.rotation.sin_cos();
    let noise = Normal::new(0.0, params.noise_sigma).expect("sigma validated");
    let mut rng = seeded_rng(params.seed);

    let mut samples = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    for class in 0..2usize {
        for k in 0..n {
            let t = k as f64 * step;
            let (x, y) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            let (mut x, mut y) = (cos_r * x - sin_r * y, sin_r * x + cos_r * y);
            if params.noise_sigma > 0.0 {
                x += noise.sample(&mut rng);
                y += noise.sample(&mut rng);
            }
            samples.push(vec![x, y]);
            labels.push(class);
        }
    }
    LabeledDataset::new("moons", samples, labels)
}

/// Stratified train/test partition, with positions into the input.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Stratified split. Each class contributes `round(test_fraction * n_c)` test
/// samples, clamped so that both parts keep at least one sample of the class.
/// Index order of the input is preserved inside each part.
pub fn split(dataset: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CoinError::InvalidParameter("test_fraction must lie in (0, 1)".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for c in 0..dataset.n_classes() {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == c).collect();
        let n_c = members.len();
        if n_c < 2 {
            return Err(CoinError::InvalidParameter(format!(
                "class {c} has {n_c} samples; stratified split needs at least 2"
            )));
        }
        members.shuffle(&mut rng);
        let n_test = ((test_fraction * n_c as f64).round() as usize).clamp(1, n_c - 1);
        test_indices.extend_from_slice(&members[..n_test]);
        train_indices.extend_from_slice(&members[n_test..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok(Split {
        train: dataset.select(&train_indices, format!("{}-train", dataset.name)),
        test: dataset.select(&test_indices, format!("{}-test", dataset.name)),
        train_indices,
        test_indices,
    })
}

/// Positions of class `c`, in dataset order.
pub fn class_subset(dataset: &LabeledDataset, c: usize) -> Result<ClassSubset> {
    let indices: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == c).collect();
    if indices.is_empty() {
        return Err(CoinError::UnknownClass(c));
    }
    Ok(ClassSubset { class: c, indices })
}

/// Per-coordinate affine standardization fitted on a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation per coordinate. Constant
    /// coordinates get a unit scale.
    pub fn fit(dataset: &LabeledDataset) -> Self {
        let n = dataset.len() as f64;
        let d = dataset.dim();
        let mut mean = vec![0.0; d];
        for s in dataset.samples() {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for s in dataset.samples() {
            for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn transform_point(&self, x: &[f64]) -> FeatureVector {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, dataset: &LabeledDataset) -> Result<LabeledDataset> {
        if dataset.dim() != self.mean.len() {
            return Err(CoinError::DimensionMismatch {
                expected: self.mean.len(),
                got: dataset.dim(),
            });
        }
        Ok(dataset.map_samples(|x| self.transform_point(x)))
    }
}

/// Writes `f0,...,f{d-1},label` with shortest round-trip float formatting.
pub fn save_dataset(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header: Vec<String> = (0..dataset.dim())
        .map(|k| format!("f{k}"))
        .chain(std::iter::once("label".to_string()))
        .collect();
    let mut body = header.join(",");
    body.push('\n');
    for (s, l) in dataset.samples().iter().zip(dataset.labels()) {
        for v in s {
            body.push_str(&format!("{v},"));
        }
        body.push_str(&format!("{l}\n"));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CoinError::io(path, e))
}

/// Reads a file written by [`save_dataset`]. The dataset name is the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CoinError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CoinError::malformed(path, 1, e.to_string()))?
        .clone();
    let dim = parse_feature_header(&header, "label").map_err(|m| CoinError::malformed(path, 1, m))?;

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CoinError::malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 1 {
            return Err(CoinError::malformed(
                path,
                line,
                format!("expected {} fields, found {}", dim + 1, record.len()),
            ));
        }
        let values = parse_features(&record, dim).map_err(|m| CoinError::malformed(path, line, m))?;
        let label: usize = record[dim].trim().parse().map_err(|_| {
            CoinError::malformed(
                path,
                line,
                format!("field `label`: invalid class id {:?}", &record[dim]),
            )
        })?;
        samples.push(values);
        labels.push(label);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    LabeledDataset::new(name, samples, labels).map_err(|e| CoinError::malformed(path, 0, e.to_string()))
}

/// Counts the leading `f0..f{d-1}` columns and checks that `first_extra`
/// follows them.
pub(crate) fn parse_feature_header(
    header: &csv::StringRecord,
    first_extra: &str,
) -> std::result::Result<usize, String> {
    let dim = header
        .iter()
        .enumerate()
        .take_while(|(k, name)| *name == format!("f{k}"))
        .count();
    if dim == 0 {
        return Err("header must start with feature columns f0,f1,...".into());
    }
    match header.get(dim) {
        Some(name) if name == first_extra => Ok(dim),
        other => Err(format!(
            "expected column `{first_extra}` after f{}, found {:?}",
            dim - 1,
            other
        )),
    }
}

pub(crate) fn parse_features(record: &csv::StringRecord, dim: usize) -> std::result::Result<FeatureVector, String> {
    (0..dim)
        .map(|k| {
            let raw = &record[k];
            match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("field f{k}: not a finite number: {raw:?}")),
            }
        })
        .collect()
}
