//! Fixtures shared by the criterion benchmarks.

use coin_core::augment::{expand_dataset, AugmentConfig};
use coin_core::dataset::{generate_entangled_manifolds, MoonsParams, Standardizer};
use coin_core::{AugmentedDataset, LabeledDataset};

/// Standardized two-moons training set.
pub fn moons(n_per_class: usize, seed: u64) -> LabeledDataset {
    let ds = generate_entangled_manifolds(&MoonsParams {
        n_per_class,
        noise_sigma: 0.25,
        rotation: 0.0,
        seed,
    })
    .expect("valid generator parameters");
    Standardizer::fit(&ds).transform(&ds).expect("same dimension")
}

/// Expanded dataset with 5 positive and 20 negative neighbors per class.
pub fn expanded(n_per_class: usize, seed: u64) -> AugmentedDataset {
    let config = AugmentConfig {
        seed,
        ..AugmentConfig::default()
    };
    expand_dataset(&moons(n_per_class, seed), &config).expect("augmentation succeeds")
}
