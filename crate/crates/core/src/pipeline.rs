//! End-to-end configuration and in-memory stage runners.
//!
//! Stage seeds are derived from the single top-level `seed` by
//! [`PipelineConfig::resolve`], so one number reproduces a whole run and the
//! resolved configuration lists every seed actually used.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::augment::{expand_dataset_logged, AugmentConfig, AugmentedDataset, Expansion, NeighborKind};
use crate::dataset::{generate_entangled_manifolds, load_dataset, split, LabeledDataset, MoonsParams, Standardizer};
use crate::error::{CoinError, Result};
use crate::eval::{accuracy, auc, margin_stats, MetricsReport};
use crate::graph::{build_signed_graph, SignedGraph};
use crate::model::{predict, train, EmbeddingNetwork, EpochRecord, TrainConfig, TrainedModel};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Interleaved half circles; the seed is overwritten on resolve.
    Generate(MoonsParams),
    /// A CSV dataset file.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub standardize: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Generate(MoonsParams::default()),
            test_fraction: 1.0 / 3.0,
            split_seed: 0,
            standardize: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub n_pos: usize,
    pub n_neg: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { n_pos: 1, n_neg: 4 }
    }
}

/// Grid of the hyperparameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n_pos: Vec<usize>,
    pub n_neg: Vec<usize>,
    pub lambda: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_pos: vec![0, 1, 3, 5],
            n_neg: vec![0, 1, 4, 8],
            lambda: vec![0.0, 0.1, 1.0, 10.0],
            seeds: vec![0, 1, 2],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub augment: AugmentConfig,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
}

const STREAM_DATA: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_AUGMENT: u64 = 3;
const STREAM_SVM: u64 = 4;
const STREAM_TRAIN: u64 = 5;

impl PipelineConfig {
    /// Copy with every stage seed derived from `seed`.
    pub fn resolve(&self) -> Self {
        let mut out = self.clone();
        if let DataSource::Generate(ref mut p) = out.data.source {
            p.seed = derive_seed(self.seed, STREAM_DATA);
        }
        out.data.split_seed = derive_seed(self.seed, STREAM_SPLIT);
        out.augment.seed = derive_seed(self.seed, STREAM_AUGMENT);
        out.augment.svm.seed = derive_seed(self.seed, STREAM_SVM);
        out.train.seed = derive_seed(self.seed, STREAM_TRAIN);
        out
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }.resolve()
    }

    /// No augmentation, no graph, no regularization.
    pub fn baseline(&self) -> Self {
        let mut out = self.clone();
        out.augment.n_pos = 0;
        out.augment.n_neg = 0;
        out.graph = GraphConfig { n_pos: 0, n_neg: 0 };
        out.train.lambda = 0.0;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.data.test_fraction > 0.0 && self.data.test_fraction < 1.0) {
            return Err(CoinError::InvalidParameter(
                "data.test_fraction must lie in (0, 1)".into(),
            ));
        }
        if let DataSource::Generate(p) = &self.data.source {
            if p.n_per_class == 0 || p.noise_sigma.is_nan() || p.noise_sigma < 0.0 {
                return Err(CoinError::InvalidParameter(
                    "data.source.generate needs n_per_class >= 1 and noise_sigma >= 0".into(),
                ));
            }
        }
        self.augment.validate()?;
        self.train.validate()
    }
}

/// Raw and standardized splits.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub full: LabeledDataset,
    pub train_raw: LabeledDataset,
    pub test_raw: LabeledDataset,
    pub standardizer: Standardizer,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn load_source(config: &PipelineConfig) -> Result<LabeledDataset> {
    match &config.data.source {
        DataSource::Generate(p) => generate_entangled_manifolds(p),
        DataSource::File(path) => load_dataset(path),
    }
}

/// Identity scaling for runs without standardization.
pub fn identity_standardizer(dim: usize) -> Standardizer {
    Standardizer {
        mean: vec![0.0; dim],
        std: vec![1.0; dim],
    }
}

/// Splits a dataset and standardizes both parts with statistics of the
/// training part.
pub fn prepare_split(full: LabeledDataset, config: &PipelineConfig) -> Result<PreparedData> {
    full.check_classes(full.n_classes().max(2))?;
    let parts = split(&full, config.data.test_fraction, config.data.split_seed)?;
    let standardizer = if config.data.standardize {
        Standardizer::fit(&parts.train)
    } else {
        identity_standardizer(full.dim())
    };
    let train = standardizer.transform(&parts.train)?;
    let test = standardizer.transform(&parts.test)?;
    Ok(PreparedData {
        full,
        train_raw: parts.train,
        test_raw: parts.test,
        standardizer,
        train,
        test,
    })
}

pub fn prepare_data(config: &PipelineConfig) -> Result<PreparedData> {
    prepare_split(load_source(config)?, config)
}

/// Expanded training set. With both neighbor counts at zero the originals
/// are returned as-is.
pub fn augment_stage(train: &LabeledDataset, config: &PipelineConfig) -> Result<Expansion> {
    if config.augment.n_pos == 0 && config.augment.n_neg == 0 {
        return Ok(Expansion {
            dataset: AugmentedDataset::from_originals(train)?,
            logs: Vec::new(),
            radii: Vec::new(),
            rho_fallback: Vec::new(),
        });
    }
    expand_dataset_logged(train, &config.augment)
}

pub fn graph_stage(aug: &AugmentedDataset, config: &PipelineConfig) -> Result<SignedGraph> {
    build_signed_graph(aug, config.graph.n_pos, config.graph.n_neg)
}

pub fn train_stage(aug: &AugmentedDataset, graph: &SignedGraph, config: &PipelineConfig) -> Result<TrainedModel> {
    let n_classes = aug.n_classes().max(2);
    let net = EmbeddingNetwork::new(aug.dim(), &config.train.hidden_layers, n_classes, config.train.seed)?;
    train(net, aug, graph, &config.train)
}

/// Predictions, class-1 probabilities and latents of a standardized test set.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub predictions: Vec<usize>,
    pub scores: Vec<f64>,
    pub latents: Vec<Vec<f64>>,
}

pub fn evaluate(net: &EmbeddingNetwork, test: &LabeledDataset, config: &PipelineConfig) -> Result<Evaluation> {
    let mut predictions = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    let mut latents = Vec::with_capacity(test.len());
    for x in test.samples() {
        let (class, probs) = predict(net, x)?;
        let (h, _) = net.forward(x)?;
        predictions.push(class);
        scores.push(probs.get(1).copied().unwrap_or(0.0));
        latents.push(h);
    }
    let margins = margin_stats(&latents, test.labels())?;
    let report = MetricsReport {
        accuracy: accuracy(&predictions, test.labels())?,
        auc: auc(&scores, test.labels())?,
        intra_mean: margins.intra_mean,
        inter_mean: margins.inter_mean,
        margin_ratio: margins.margin_ratio,
        margin_degenerate: margins.degenerate,
        n_test: test.len(),
        config: serde_json::to_value(config).expect("config serializes"),
    };
    Ok(Evaluation {
        report,
        predictions,
        scores,
        latents,
    })
}

/// Outcome of one in-memory run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub history: Vec<EpochRecord>,
    pub augmented_len: usize,
    pub edge_count: usize,
}

/// Every stage in memory; `config` must already be resolved.
pub fn run_experiment(config: &PipelineConfig) -> Result<RunOutcome> {
    config.validate()?;
    let data = prepare_data(config)?;
    let expansion = augment_stage(&data.train, config)?;
    let graph = graph_stage(&expansion.dataset, config)?;
    let model = train_stage(&expansion.dataset, &graph, config)?;
    let eval = evaluate(&model.network, &data.test, config)?;
    Ok(RunOutcome {
        report: eval.report,
        history: model.history,
        augmented_len: expansion.dataset.len(),
        edge_count: graph.edges().len(),
    })
}

/// Labels and kind tags for the projection export of an expanded dataset.
pub fn kind_tags(aug: &AugmentedDataset) -> Vec<&'static str> {
    aug.points()
        .iter()
        .map(|p| match p.kind {
            NeighborKind::Original => "orig",
            NeighborKind::Positive => "pos",
            NeighborKind::Negative => "neg",
        })
        .collect()
}
