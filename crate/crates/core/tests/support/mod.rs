//! Independent reference implementations used to check the library.
//! Nothing here calls the code paths it verifies.
#![allow(dead_code)]

use coin_core::augment::{AugmentedDataset, AugmentedPoint, BatchLog, NeighborKind};
use coin_core::dataset::LabeledDataset;
use coin_core::graph::{Edge, Sign, SignedGraph};
use coin_core::model::EmbeddingNetwork;
use coin_core::rng::Rng;
use rand::Rng as _;

/// Cosine distance written out directly.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    (1.0 - ab / (aa.sqrt() * bb.sqrt())).clamp(0.0, 2.0)
}

/// Repeatedly picks the unused pool member with the smallest
/// `(distance, index)` pair.
fn select_nearest(dist: &[f64], pool: &[usize], k: usize) -> Vec<usize> {
    let mut used = vec![false; pool.len()];
    let mut out = Vec::new();
    for _ in 0..k.min(pool.len()) {
        let mut best: Option<usize> = None;
        for (p, &j) in pool.iter().enumerate() {
            if used[p] {
                continue;
            }
            best = match best {
                None => Some(p),
                Some(b) => {
                    let (db, dj) = (dist[pool[b]], dist[j]);
                    if dj < db || (dj == db && j < pool[b]) {
                        Some(p)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let b = best.expect("pool not exhausted");
        used[b] = true;
        out.push(pool[b]);
    }
    out
}

/// O(N^2) signed graph from the full distance matrix.
pub fn brute_force_graph(aug: &AugmentedDataset, n_pos: usize, n_neg: usize) -> Vec<Edge> {
    let pts = aug.points();
    let n = pts.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| cosine(&pts[i].values, &pts[j].values)).collect())
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        if pts[i].kind == NeighborKind::Negative {
            continue;
        }
        let c = pts[i].class;
        let pos_pool: Vec<usize> = (0..n)
            .filter(|&j| j != i && pts[j].class == c && pts[j].kind != NeighborKind::Negative)
            .collect();
        let neg_pool: Vec<usize> = (0..n)
            .filter(|&j| {
                j != i
                    && ((pts[j].class == c && pts[j].kind == NeighborKind::Negative)
                        || (pts[j].class != c && pts[j].kind != NeighborKind::Negative))
            })
            .collect();
        for j in select_nearest(&dist[i], &pos_pool, n_pos) {
            edges.push(Edge {
                anchor: i,
                neighbor: j,
                sign: Sign::Positive,
            });
        }
        for j in select_nearest(&dist[i], &neg_pool, n_neg) {
            edges.push(Edge {
                anchor: i,
                neighbor: j,
                sign: Sign::Negative,
            });
        }
    }
    edges
}

/// AUC by counting every positive/negative pair.
pub fn auc_pairs(scores: &[f64], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..scores.len() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                total += 1.0;
            } else if scores[i] == scores[j] {
                total += 0.5;
            }
        }
    }
    total / pairs
}

/// Central finite differences of `f` around the network parameters.
pub fn finite_difference_gradient(net: &EmbeddingNetwork, step: f64, f: impl Fn(&EmbeddingNetwork) -> f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.params().len())
        .map(|k| {
            let orig = probe.params()[k];
            probe.params_mut()[k] = orig + step;
            let up = f(&probe);
            probe.params_mut()[k] = orig - step;
            let down = f(&probe);
            probe.params_mut()[k] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Re-scores every candidate of a logged batch from scratch: the realness
/// probability is recomputed from the stored hyperplane and the distance
/// hinges from the class originals and the neighbors accepted earlier.
pub fn rescore_batch(log: &BatchLog, originals: &[Vec<f64>], accepted_same_kind: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let w = &log.discriminator.weights;
    let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let earlier = &accepted_same_kind[..log.existing];
    log.candidates
        .iter()
        .map(|x| {
            let d = if w_norm == 0.0 {
                0.0
            } else {
                (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + log.discriminator.bias) / w_norm
            };
            let p = 1.0 / (1.0 + (-d).exp());
            let min_to = |set: &[Vec<f64>]| set.iter().map(|y| cosine(x, y)).fold(f64::INFINITY, f64::min);
            match log.kind {
                NeighborKind::Positive => {
                    let spread = if earlier.is_empty() {
                        0.0
                    } else {
                        (log.radii.r1 - min_to(earlier)).max(0.0)
                    };
                    p - gamma * spread
                }
                _ => {
                    let spread = if earlier.is_empty() {
                        0.0
                    } else {
                        (log.radii.r2 - min_to(earlier)).max(0.0)
                    };
                    let proximity = (min_to(originals) - log.radii.r3).max(0.0);
                    p + gamma * spread + gamma * proximity
                }
            }
        })
        .collect()
}

/// Position of the best score under the lowest-index tie rule.
pub fn best_index(scores: &[f64], maximize: bool) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if (maximize && scores[i] > scores[best]) || (!maximize && scores[i] < scores[best]) {
            best = i;
        }
    }
    best
}

fn fixture_point(values: Vec<f64>, class: usize, kind: NeighborKind) -> AugmentedPoint {
    let generated = kind != NeighborKind::Original;
    AugmentedPoint {
        values,
        class,
        kind,
        seed_index: generated.then_some(0),
        batch: generated.then_some(0),
    }
}

/// 12 random 2-D points (every fourth an unlabeled negative), a random
/// signed graph over them and a 2-8-4-2 network with random parameters.
pub fn random_signed_instance(rng: &mut Rng) -> (EmbeddingNetwork, AugmentedDataset, SignedGraph) {
    let points: Vec<AugmentedPoint> = (0..12)
        .map(|i| {
            let kind = if i % 4 == 3 {
                NeighborKind::Negative
            } else {
                NeighborKind::Original
            };
            fixture_point(
                vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
                i % 2,
                kind,
            )
        })
        .collect();
    let aug = AugmentedDataset::from_points(points).unwrap();
    let anchors: Vec<bool> = aug.points().iter().map(|p| p.kind != NeighborKind::Negative).collect();
    let mut edges = Vec::new();
    for i in (0..12).filter(|&i| anchors[i]) {
        for _ in 0..rng.random_range(1..4) {
            let mut j = rng.random_range(0..12);
            if j == i {
                j = (j + 1) % 12;
            }
            let sign = if rng.random_bool(0.5) {
                Sign::Positive
            } else {
                Sign::Negative
            };
            edges.push(Edge {
                anchor: i,
                neighbor: j,
                sign,
            });
        }
    }
    let graph = SignedGraph::from_edges(12, 0, 0, &anchors, edges).unwrap();
    // random biases too: zero biases put dead-input units exactly on the ReLU kink
    let mut net = EmbeddingNetwork::new(2, &[8, 4], 2, 0).unwrap();
    for p in net.params_mut() {
        *p = rng.random_range(-1.0..1.0);
    }
    (net, aug, graph)
}

/// Random expanded dataset with at most `max_n` points of dimension at most
/// `max_dim` on a coarse lattice, so equal distances are common. Every class
/// keeps at least two non-negative points.
pub fn random_augmented(rng: &mut Rng, max_n: usize, max_dim: usize) -> AugmentedDataset {
    let dim = rng.random_range(1..=max_dim);
    let n_classes = rng.random_range(2..=3);
    let n = rng.random_range(2 * n_classes..=max_n);
    const LATTICE: [f64; 5] = [-2.0, -1.0, 0.5, 1.0, 2.0];
    let kinds = [NeighborKind::Original, NeighborKind::Positive, NeighborKind::Negative];
    let points = (0..n)
        .map(|i| {
            if i < 2 * n_classes {
                return fixture_point(vec![1.0 + i as f64; dim], i % n_classes, NeighborKind::Original);
            }
            let values = (0..dim).map(|_| LATTICE[rng.random_range(0..LATTICE.len())]).collect();
            fixture_point(values, rng.random_range(0..n_classes), kinds[rng.random_range(0..3)])
        })
        .collect();
    AugmentedDataset::from_points(points).unwrap()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Single-split threshold classifier: the best (feature, cut, orientation)
/// on `train`, scored on `test`.
pub fn stump_test_accuracy(train: &LabeledDataset, test: &LabeledDataset) -> f64 {
    let score = |ds: &LabeledDataset, k: usize, t: f64, flip: bool| {
        let hits = ds
            .samples()
            .iter()
            .zip(ds.labels())
            .filter(|(x, &l)| ((x[k] < t) == (l == 0)) != flip)
            .count();
        hits as f64 / ds.len() as f64
    };
    let mut best = (0.0, 0, 0.0, false);
    for k in 0..train.dim() {
        for t in train.samples().iter().map(|x| x[k]).chain([f64::INFINITY]) {
            for flip in [false, true] {
                let acc = score(train, k, t, flip);
                if acc > best.0 {
                    best = (acc, k, t, flip);
                }
            }
        }
    }
    score(test, best.1, best.2, best.3)
}

/// 1-nearest-neighbor accuracy on `test` with `train` as the reference set.
pub fn nearest_neighbor_test_accuracy(train: &LabeledDataset, test: &LabeledDataset) -> f64 {
    let xs = train.samples();
    let hits = test
        .samples()
        .iter()
        .zip(test.labels())
        .filter(|(q, &l)| {
            let j = (0..xs.len())
                .min_by(|&a, &b| sq(q, &xs[a]).total_cmp(&sq(q, &xs[b])))
                .unwrap();
            train.labels()[j] == l
        })
        .count();
    hits as f64 / test.len() as f64
}
