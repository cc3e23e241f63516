mod support;

use coin_core::augment::{AugmentedDataset, AugmentedPoint, NeighborKind};
use coin_core::graph::{build_signed_graph, load_graph, save_graph, Sign};
use coin_core::CoinError;
use proptest::prelude::*;
use support::brute_force_graph;

fn point(values: Vec<f64>, class: usize, kind: NeighborKind) -> AugmentedPoint {
    let generated = kind != NeighborKind::Original;
    AugmentedPoint {
        values,
        class,
        kind,
        seed_index: generated.then_some(0),
        batch: generated.then_some(0),
    }
}

/// Random expanded datasets on a coarse integer lattice so that equal
/// distances are common. Every class keeps at least two non-negative points.
fn datasets() -> impl Strategy<Value = AugmentedDataset> {
    (1usize..=8, 2usize..=3).prop_flat_map(|(dim, n_classes)| {
        let coord = prop_oneof![Just(-2.0), Just(-1.0), Just(1.0), Just(2.0), Just(0.5)];
        let row = (prop::collection::vec(coord, dim), 0..n_classes, 0u8..3);
        prop::collection::vec(row, 0..(60 - 2 * n_classes)).prop_map(move |rows| {
            let mut points: Vec<AugmentedPoint> = (0..2 * n_classes)
                .map(|i| point(vec![1.0 + i as f64; dim], i % n_classes, NeighborKind::Original))
                .collect();
            for (values, class, k) in rows {
                let kind = [NeighborKind::Original, NeighborKind::Positive, NeighborKind::Negative][k as usize];
                points.push(point(values, class, kind));
            }
            AugmentedDataset::from_points(points).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matches_brute_force(aug in datasets(), n_pos in 0usize..=3, n_neg in 0usize..=5) {
        let graph = build_signed_graph(&aug, n_pos, n_neg).unwrap();
        let expected = brute_force_graph(&aug, n_pos, n_neg);
        prop_assert_eq!(graph.edges(), expected.as_slice());
    }

    #[test]
    fn signs_follow_pool_membership(aug in datasets(), n_pos in 0usize..=3, n_neg in 0usize..=5) {
        let graph = build_signed_graph(&aug, n_pos, n_neg).unwrap();
        let pts = aug.points();
        for e in graph.edges() {
            let (a, b) = (&pts[e.anchor], &pts[e.neighbor]);
            prop_assert!(e.anchor != e.neighbor);
            prop_assert!(a.kind != NeighborKind::Negative);
            let expect = if a.class == b.class && b.kind != NeighborKind::Negative {
                Sign::Positive
            } else {
                Sign::Negative
            };
            prop_assert_eq!(e.sign, expect);
            prop_assert!(!(a.class != b.class && b.kind == NeighborKind::Negative));
        }
    }
}

#[test]
fn empty_negative_pool_is_reported() {
    let aug = AugmentedDataset::from_points(vec![
        point(vec![1.0, 0.0], 0, NeighborKind::Original),
        point(vec![0.0, 1.0], 0, NeighborKind::Original),
    ])
    .unwrap();
    assert!(build_signed_graph(&aug, 1, 0).is_ok());
    assert!(matches!(
        build_signed_graph(&aug, 0, 1),
        Err(CoinError::EmptyPool { .. })
    ));
}

#[test]
fn csv_round_trip() {
    let aug = AugmentedDataset::from_points(vec![
        point(vec![1.0, 0.0], 0, NeighborKind::Original),
        point(vec![0.9, 0.2], 0, NeighborKind::Positive),
        point(vec![0.5, 0.5], 0, NeighborKind::Negative),
        point(vec![0.0, 1.0], 1, NeighborKind::Original),
        point(vec![0.1, 0.9], 1, NeighborKind::Original),
    ])
    .unwrap();
    let graph = build_signed_graph(&aug, 1, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.csv");
    save_graph(&graph, &path).unwrap();
    assert_eq!(load_graph(&path).unwrap(), graph);
}
