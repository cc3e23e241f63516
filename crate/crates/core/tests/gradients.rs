mod support;

use coin_core::augment::{AugmentedDataset, AugmentedPoint, NeighborKind};
use coin_core::graph::{Edge, Sign, SignedGraph};
use coin_core::linalg::squared_distance;
use coin_core::model::{batch_objective, gradients, graph_loss, graph_loss_gradient, EmbeddingNetwork, TrainConfig};
use coin_core::rng::seeded_rng;
use support::{finite_difference_gradient, random_signed_instance};

fn config(lambda: f64, margin: f64) -> TrainConfig {
    TrainConfig {
        lambda,
        margin,
        hidden_layers: vec![8, 4],
        ..TrainConfig::default()
    }
}

fn random_instance(seed: u64) -> (EmbeddingNetwork, AugmentedDataset, SignedGraph) {
    random_signed_instance(&mut seeded_rng(seed))
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let cfg = config(1.0, 1.0);
    let batch: Vec<usize> = (0..12).collect();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (net, aug, graph) = random_instance(seed);
        let analytic = gradients(&net, &batch, &aug, &graph, &cfg).unwrap();
        let numeric = finite_difference_gradient(&net, 1e-5, |n| {
            batch_objective(n, &aug, &graph, &batch, &cfg, false).unwrap().0.total
        });
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max((a - n).abs() / a.abs().max(1.0));
        }
    }
    assert!(worst <= 1e-5, "max relative error {worst}");
}

#[test]
fn partial_batches_only_count_internal_edges() {
    let cfg = config(0.7, 1.0);
    let (net, aug, graph) = random_instance(99);
    let batch = vec![0, 2, 3, 5, 8, 9];
    let analytic = gradients(&net, &batch, &aug, &graph, &cfg).unwrap();
    let numeric = finite_difference_gradient(&net, 1e-5, |n| {
        batch_objective(n, &aug, &graph, &batch, &cfg, false).unwrap().0.total
    });
    for (a, n) in analytic.iter().zip(&numeric) {
        assert!((a - n).abs() / a.abs().max(1.0) <= 1e-5);
    }
}

#[test]
fn objective_is_affine_in_lambda() {
    let (net, aug, graph) = random_instance(3);
    let batch: Vec<usize> = (0..12).collect();
    let at = |lambda: f64| {
        batch_objective(&net, &aug, &graph, &batch, &config(lambda, 1.0), false)
            .unwrap()
            .0
    };
    let (a, b) = (at(0.25), at(4.0));
    assert!(((b.total - a.total) - 3.75 * a.j_g).abs() < 1e-12);
    assert_eq!(at(0.0).total, a.j_l);
}

#[test]
fn single_edge_latent_gradients() {
    let hi = vec![0.5, -1.0, 2.0];
    let hj = vec![0.0, 1.0, 1.5];
    let g = SignedGraph::from_edges(
        2,
        1,
        0,
        &[true, false],
        vec![Edge {
            anchor: 0,
            neighbor: 1,
            sign: Sign::Positive,
        }],
    )
    .unwrap();
    let grad = graph_loss_gradient(&[hi.clone(), hj.clone()], &g, 1.0).unwrap();
    for k in 0..3 {
        assert!((grad[0][k] - 2.0 * (hi[k] - hj[k])).abs() < 1e-15);
        assert!((grad[1][k] + 2.0 * (hi[k] - hj[k])).abs() < 1e-15);
    }

    // beyond the margin a negative edge is flat
    let g = SignedGraph::from_edges(
        2,
        0,
        1,
        &[true, false],
        vec![Edge {
            anchor: 0,
            neighbor: 1,
            sign: Sign::Negative,
        }],
    )
    .unwrap();
    let grad = graph_loss_gradient(&[hi.clone(), hj.clone()], &g, 1.0).unwrap();
    assert!(grad.iter().flatten().all(|v| *v == 0.0));
    assert_eq!(graph_loss(&[hi, hj], &g, 1.0).unwrap(), 0.0);
}

#[test]
fn vanishing_margin_silences_negative_edges() {
    let (net, aug, graph) = random_instance(7);
    let latents: Vec<Vec<f64>> = aug.points().iter().map(|p| net.forward(&p.values).unwrap().0).collect();
    let neg_only: Vec<Edge> = graph
        .edges()
        .iter()
        .copied()
        .filter(|e| e.sign == Sign::Negative)
        .collect();
    let anchors: Vec<bool> = (0..12).map(|i| graph.is_anchor(i)).collect();
    let g = SignedGraph::from_edges(12, 0, 0, &anchors, neg_only).unwrap();
    let positive_dists = g
        .edges()
        .iter()
        .all(|e| squared_distance(&latents[e.anchor], &latents[e.neighbor]) > 0.0);
    assert!(positive_dists);
    let mut prev = f64::INFINITY;
    for m in [1.0, 1e-2, 1e-4, 1e-8, 1e-12] {
        let j = graph_loss(&latents, &g, m).unwrap();
        assert!(j <= prev);
        prev = j;
    }
    assert_eq!(prev, 0.0);
}

/// Two unlabeled nodes joined by one edge, so the objective is pure `J_g`.
fn single_edge_step(sign: Sign, margin: f64) -> (f64, f64) {
    let points = vec![
        AugmentedPoint {
            values: vec![0.3, 0.9],
            class: 0,
            kind: NeighborKind::Negative,
            seed_index: Some(0),
            batch: Some(0),
        },
        AugmentedPoint {
            values: vec![-0.7, 0.2],
            class: 0,
            kind: NeighborKind::Negative,
            seed_index: Some(0),
            batch: Some(0),
        },
    ];
    let aug = AugmentedDataset::from_points(points).unwrap();
    let graph = SignedGraph::from_edges(
        2,
        0,
        0,
        &[true, false],
        vec![Edge {
            anchor: 0,
            neighbor: 1,
            sign,
        }],
    )
    .unwrap();
    let cfg = config(1.0, margin);
    let mut net = EmbeddingNetwork::new(2, &[8, 4], 2, 21).unwrap();
    let dist = |n: &EmbeddingNetwork| {
        squared_distance(
            &n.forward(&aug.points()[0].values).unwrap().0,
            &n.forward(&aug.points()[1].values).unwrap().0,
        )
    };
    let before = dist(&net);
    let g = gradients(&net, &[0, 1], &aug, &graph, &cfg).unwrap();
    for (p, gv) in net.params_mut().iter_mut().zip(&g) {
        *p -= 1e-3 * gv;
    }
    (before, dist(&net))
}

#[test]
fn gradient_step_attracts_and_repels() {
    let (before, after) = single_edge_step(Sign::Positive, 1.0);
    assert!(after < before, "{after} !< {before}");
    let (before, after) = single_edge_step(Sign::Negative, 100.0);
    assert!(before < 100.0);
    assert!(after > before, "{after} !> {before}");
}
