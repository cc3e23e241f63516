//! Contrastive identifier pipeline: adversarial neighbor augmentation with a
//! linear SVM discriminator, a signed k-NN graph over the expanded data, and
//! an embedding network trained under cross-entropy plus a signed-graph
//! contrastive regularizer.
//!
//! Stages, in pipeline order:
//!
//! * [`dataset`]: synthetic entangled manifolds, splits, CSV persistence;
//! * [`discriminator`]: linear SVM and its realness probability;
//! * [`augment`]: positive and negative neighbor generation;
//! * [`graph`]: signed nearest-neighbor graph;
//! * [`model`]: embedding network, losses, gradients and training;
//! * [`eval`]: accuracy, AUC, latent margins and PCA;
//! * [`pipeline`]: configuration and in-memory orchestration.

pub mod augment;
pub mod dataset;
pub mod discriminator;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod persist;
pub mod pipeline;
pub mod rng;

pub use augment::{AugmentConfig, AugmentedDataset, AugmentedPoint, NeighborKind, Radii};
pub use dataset::{FeatureVector, LabeledDataset, MoonsParams, Standardizer};
pub use discriminator::{LinearSvm, SvmTrainConfig};
pub use error::{CoinError, Result};
pub use eval::{MarginStats, MetricsReport};
pub use graph::{Edge, Sign, SignedGraph};
pub use model::{EmbeddingNetwork, EpochRecord, TrainConfig, TrainedModel};
pub use pipeline::PipelineConfig;
