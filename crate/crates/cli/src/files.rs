//! Names of the artifacts inside a run directory.

pub const CONFIG: &str = "config.json";
pub const DATASET: &str = "dataset.csv";
pub const DATASET_INFO: &str = "dataset.json";
pub const TRAIN: &str = "train.csv";
pub const TEST: &str = "test.csv";
pub const STANDARDIZER: &str = "standardizer.json";
pub const AUGMENTED: &str = "augmented.csv";
pub const AUGMENT_INFO: &str = "augment_config.json";
pub const AUGMENT_LOG: &str = "augment_log.json";
pub const GRAPH: &str = "graph.csv";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const HISTORY: &str = "history.csv";
pub const METRICS: &str = "metrics.json";
pub const PROJECTION: &str = "projection.csv";
pub const SWEEP_RUNS: &str = "sweep_runs.csv";
pub const SWEEP_SUMMARY: &str = "sweep_summary.csv";
