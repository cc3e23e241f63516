//! One function per pipeline stage. Each reads its inputs from the run
//! directory and writes its outputs back, so `run_all` is exactly the staged
//! commands in sequence.

use std::path::{Path, PathBuf};

use coin_core::augment::{load_augmented, save_augmented, AugmentConfig, BatchLog, Radii};
use coin_core::dataset::{load_dataset, save_dataset, LabeledDataset, Standardizer};
use coin_core::eval::{pca_project, save_projection, MetricsReport};
use coin_core::graph::{load_graph, save_graph};
use coin_core::model::{save_history, Checkpoint};
use coin_core::persist::{read_json, write_json};
use coin_core::pipeline::{
    augment_stage, evaluate, graph_stage, kind_tags, load_source, prepare_split, train_stage, DataSource,
    PipelineConfig,
};
use serde::Serialize;

use crate::error::CliError;
use crate::files::*;

fn input(out: &Path, name: &str) -> Result<PathBuf, CliError> {
    let path = out.join(name);
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingInput(path))
    }
}

#[derive(Serialize)]
struct DatasetInfo<'a> {
    source: &'a DataSource,
    seed: u64,
    split_seed: u64,
    test_fraction: f64,
    standardize: bool,
    dim: usize,
    class_counts: Vec<usize>,
    train_counts: Vec<usize>,
    test_counts: Vec<usize>,
}

pub fn gen_data(config: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let full = load_source(config)?;
    let data = prepare_split(full, config)?;
    save_dataset(&data.full, out.join(DATASET))?;
    save_dataset(&data.train_raw, out.join(TRAIN))?;
    save_dataset(&data.test_raw, out.join(TEST))?;
    write_json(out.join(STANDARDIZER), &data.standardizer)?;
    let info = DatasetInfo {
        source: &config.data.source,
        seed: config.seed,
        split_seed: config.data.split_seed,
        test_fraction: config.data.test_fraction,
        standardize: config.data.standardize,
        dim: data.full.dim(),
        class_counts: data.full.class_counts(),
        train_counts: data.train_raw.class_counts(),
        test_counts: data.test_raw.class_counts(),
    };
    write_json(out.join(DATASET_INFO), &info)?;
    Ok(())
}

fn standardized(out: &Path, name: &str) -> Result<(LabeledDataset, Standardizer), CliError> {
    let raw = load_dataset(input(out, name)?)?;
    let standardizer: Standardizer = read_json(input(out, STANDARDIZER)?)?;
    Ok((standardizer.transform(&raw)?, standardizer))
}

#[derive(Serialize)]
struct AugmentInfo<'a> {
    seed: u64,
    augment: &'a AugmentConfig,
    radii: &'a [Radii],
    rho_fallback: &'a [bool],
}

pub fn augment(config: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let (train, _) = standardized(out, TRAIN)?;
    let expansion = augment_stage(&train, config)?;
    save_augmented(&expansion.dataset, out.join(AUGMENTED))?;
    let info = AugmentInfo {
        seed: config.seed,
        augment: &config.augment,
        radii: &expansion.radii,
        rho_fallback: &expansion.rho_fallback,
    };
    write_json(out.join(AUGMENT_INFO), &info)?;
    write_json::<Vec<BatchLog>>(out.join(AUGMENT_LOG), &expansion.logs)?;
    Ok(())
}

pub fn graph(config: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let aug = load_augmented(input(out, AUGMENTED)?)?;
    save_graph(&graph_stage(&aug, config)?, out.join(GRAPH))?;
    Ok(())
}

pub fn train(config: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let aug = load_augmented(input(out, AUGMENTED)?)?;
    let graph = load_graph(input(out, GRAPH)?)?;
    let standardizer: Standardizer = read_json(input(out, STANDARDIZER)?)?;
    let model = train_stage(&aug, &graph, config)?;
    Checkpoint::from_network(&model.network, Some(standardizer)).save(out.join(CHECKPOINT))?;
    save_history(&model.history, out.join(HISTORY))?;
    Ok(())
}

pub fn eval(config: &PipelineConfig, out: &Path) -> Result<MetricsReport, CliError> {
    let checkpoint = Checkpoint::load(input(out, CHECKPOINT)?)?;
    let net = checkpoint.to_network()?;
    let raw = load_dataset(input(out, TEST)?)?;
    let test = match &checkpoint.standardizer {
        Some(s) => s.transform(&raw)?,
        None => raw,
    };
    let evaluation = evaluate(&net, &test, config)?;
    write_json(out.join(METRICS), &evaluation.report)?;

    // expanded training points and test points share one projection
    let aug = load_augmented(input(out, AUGMENTED)?)?;
    let mut latents = Vec::with_capacity(aug.len() + test.len());
    for p in aug.points() {
        latents.push(net.forward(&p.values)?.0);
    }
    latents.extend(evaluation.latents.iter().cloned());
    let mut labels: Vec<usize> = aug.points().iter().map(|p| p.class).collect();
    labels.extend_from_slice(test.labels());
    let mut kinds = kind_tags(&aug);
    kinds.extend(std::iter::repeat_n("test", test.len()));
    let k = net.latent_dim().min(2);
    let projection = pca_project(&latents, k)?;
    save_projection(&projection.coords, &labels, &kinds, out.join(PROJECTION))?;
    Ok(evaluation.report)
}

pub fn run_all(config: &PipelineConfig, out: &Path) -> Result<MetricsReport, CliError> {
    gen_data(config, out)?;
    augment(config, out)?;
    graph(config, out)?;
    train(config, out)?;
    eval(config, out)
}
