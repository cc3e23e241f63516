mod support;

use std::fs;

use coin_core::dataset::{
    generate_entangled_manifolds, load_dataset, save_dataset, split, LabeledDataset, MoonsParams,
};
use coin_core::discriminator::{logistic, train_svm, train_svm_with_history, SvmTrainConfig};
use coin_core::rng::seeded_rng;
use coin_core::CoinError;
use proptest::prelude::*;
use rand::Rng;
use support::{nearest_neighbor_test_accuracy, stump_test_accuracy};

fn moons(n: usize, sigma: f64, seed: u64) -> LabeledDataset {
    generate_entangled_manifolds(&MoonsParams {
        n_per_class: n,
        noise_sigma: sigma,
        rotation: 0.0,
        seed,
    })
    .unwrap()
}

#[test]
fn moons_defeat_a_stump_but_not_nearest_neighbor() {
    let parts = split(&moons(200, 0.2, 1), 1.0 / 3.0, 0).unwrap();
    let stump = stump_test_accuracy(&parts.train, &parts.test);
    let nn = nearest_neighbor_test_accuracy(&parts.train, &parts.test);
    println!("stump {stump} 1-NN {nn}");
    assert!(stump < 0.9, "stump {stump}");
    assert!(nn > 0.9, "1-NN {nn}");
}

#[test]
fn split_keeps_classes_disjoint_and_stratified() {
    let ds = moons(60, 0.1, 3);
    let parts = split(&ds, 1.0 / 3.0, 9).unwrap();
    let mut all: Vec<usize> = parts.train_indices.iter().chain(&parts.test_indices).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..120).collect::<Vec<_>>());
    assert_eq!(parts.test.class_counts(), vec![20, 20]);
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(rows in prop::collection::vec((prop::collection::vec(-1e6f64..1e6, 3), 0usize..4), 1..40)) {
        let (samples, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let ds = LabeledDataset::new("rt", samples, labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        prop_assert_eq!(back.samples(), ds.samples());
        prop_assert_eq!(back.labels(), ds.labels());
    }
}

fn load_text(text: &str) -> Result<LabeledDataset, CoinError> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, text).unwrap();
    load_dataset(&path)
}

#[test]
fn malformed_rows_are_located() {
    let err = load_text("f0,f1,label\n1,2,0\n3,abc,1\n").unwrap_err();
    assert!(matches!(err, CoinError::MalformedFile { line: 3, .. }), "{err}");
    assert!(err.to_string().contains("f1"));

    let err = load_text("f0,f1,label\n1,2,0\n3,1\n").unwrap_err();
    assert!(matches!(err, CoinError::MalformedFile { line: 3, .. }), "{err}");

    let err = load_text("x,label\n1,0\n").unwrap_err();
    assert!(matches!(err, CoinError::MalformedFile { line: 1, .. }), "{err}");
}

#[test]
fn logistic_is_monotone_and_symmetric() {
    let mut prev = 0.0;
    for k in -400..=400 {
        let d = k as f64 * 0.1;
        let p = logistic(d);
        assert!(p >= prev && p > 0.0 && p < 1.0);
        assert!((p + logistic(-d) - 1.0).abs() < 1e-15);
        prev = p;
    }
}

#[test]
fn separable_clouds_are_classified_perfectly() {
    let mut rng = seeded_rng(2);
    let real: Vec<Vec<f64>> = (0..40)
        .map(|_| vec![2.0 + rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let fake: Vec<Vec<f64>> = (0..25)
        .map(|_| vec![-2.0 - rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let svm = train_svm(&real, &fake, &SvmTrainConfig::default()).unwrap();
    assert!(real.iter().all(|x| svm.signed_distance(x).unwrap() > 0.0));
    assert!(fake.iter().all(|x| svm.signed_distance(x).unwrap() < 0.0));
    assert!(real.iter().all(|x| svm.real_probability(x).unwrap() > 0.5));
}

proptest! {
    #[test]
    fn best_objective_never_increases(seed in 0u64..1000, lr in 0.01f64..2.0) {
        let mut rng = seeded_rng(seed);
        let real: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random_range(-1.0..2.0), rng.random_range(-1.0..1.0)]).collect();
        let fake: Vec<Vec<f64>> = (0..7).map(|_| vec![rng.random_range(-2.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let cfg = SvmTrainConfig { learning_rate: lr, seed, epochs: 60, ..SvmTrainConfig::default() };
        let fit = train_svm_with_history(&real, &fake, &cfg).unwrap();
        prop_assert!(fit.best_objective.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(fit.best_objective.len(), fit.objective.len());
    }
}
