//! Feed-forward embedding network with a softmax head, trained on the
//! expanded dataset under cross-entropy plus the signed-graph contrastive
//! regularizer:
//!
//! ```text
//! J   = J_l + lambda * J_g
//! J_l = mean over labeled nodes of -ln p(y | x)
//! J_g = mean over edges of  |h_i - h_j|^2                  (sign +1)
//!                           max(0, m - |h_i - h_j|^2)       (sign -1)
//! ```
//!
//! Generated negatives carry no classification label; they only enter `J_g`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentedDataset, NeighborKind};
use crate::dataset::Standardizer;
use crate::error::{CoinError, Result};
use crate::graph::{Edge, Sign, SignedGraph};
use crate::linalg::squared_distance;
use crate::rng::{derive_seed, seeded_rng};

/// Probabilities are clamped here before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Weight of the graph regularizer.
    pub lambda: f64,
    /// Margin for negative edges, in squared latent distance.
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// The learning rate is multiplied by `lr_decay_factor` every
    /// `lr_decay_every` epochs.
    pub lr_decay_every: usize,
    pub lr_decay_factor: f64,
    /// Hidden widths; the last one is the latent dimension.
    pub hidden_layers: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            margin: 1.0,
            epochs: 300,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
            lr_decay_every: 100,
            lr_decay_factor: 0.5,
            hidden_layers: vec![32, 32, 16],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoinError::InvalidParameter(m.into()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be finite and > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.lr_decay_every == 0 || self.lr_decay_factor.is_nan() || self.lr_decay_factor <= 0.0 {
            return bad("lr_decay_every must be >= 1 and lr_decay_factor > 0");
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return bad("hidden_layers must be non-empty with positive widths");
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay_factor.powi((epoch / self.lr_decay_every) as i32)
    }
}

/// Dense ReLU layers followed by a linear softmax head. Parameters live in
/// one flat vector: per layer, the `out x in` row-major weights then the
/// `out` biases.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingNetwork {
    widths: Vec<usize>,
    params: Vec<f64>,
}

/// Activations of one forward pass. `activations[0]` is the input and the
/// last entry is the latent representation.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardPass {
    pub fn latent(&self) -> &[f64] {
        self.activations.last().expect("network has a latent layer")
    }
}

impl EmbeddingNetwork {
    /// Glorot-uniform weights and zero biases.
    pub fn new(input_dim: usize, hidden: &[usize], n_classes: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || n_classes < 2 || hidden.is_empty() || hidden.contains(&0) {
            return Err(CoinError::InvalidParameter(
                "network needs input_dim >= 1, at least one hidden layer and >= 2 classes".into(),
            ));
        }
        let widths: Vec<usize> = std::iter::once(input_dim)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(n_classes))
            .collect();
        let mut net = Self::zeros(widths);
        let mut rng = seeded_rng(seed);
        for l in 0..net.n_layers() {
            let (fan_in, fan_out) = (net.widths[l], net.widths[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = net.layer_range(l);
            for p in &mut net.params[w] {
                *p = rng.random_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn zeros(widths: Vec<usize>) -> Self {
        let size = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Self {
            widths,
            params: vec![0.0; size],
        }
    }

    pub fn from_params(widths: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if widths.len() < 3 || widths.contains(&0) {
            return Err(CoinError::InvalidParameter("invalid layer widths".into()));
        }
        let net = Self::zeros(widths);
        if params.len() != net.params.len() {
            return Err(CoinError::LengthMismatch {
                left: params.len(),
                right: net.params.len(),
            });
        }
        Ok(Self { params, ..net })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn latent_dim(&self) -> usize {
        self.widths[self.widths.len() - 2]
    }

    pub fn n_classes(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight and bias ranges of layer `l` inside the flat parameter vector.
    fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start: usize = self.widths[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
        let w_end = start + fan_in * fan_out;
        (start..w_end, w_end..w_end + fan_out)
    }

    fn affine(&self, l: usize, input: &[f64]) -> Vec<f64> {
        let (w, b) = self.layer_range(l);
        let fan_in = self.widths[l];
        let weights = &self.params[w];
        self.params[b]
            .iter()
            .enumerate()
            .map(|(o, bias)| {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                bias + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()
            })
            .collect()
    }

    pub fn forward_pass(&self, x: &[f64]) -> Result<ForwardPass> {
        if x.len() != self.input_dim() {
            return Err(CoinError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.n_layers());
        activations.push(x.to_vec());
        for l in 0..self.n_layers() - 1 {
            let z = self.affine(l, activations.last().expect("input pushed"));
            activations.push(z.into_iter().map(|v| v.max(0.0)).collect());
        }
        let logits = self.affine(self.n_layers() - 1, activations.last().expect("latent"));
        let probs = softmax(&logits);
        Ok(ForwardPass {
            activations,
            logits,
            probs,
        })
    }

    /// Latent vector and class probabilities.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let pass = self.forward_pass(x)?;
        let h = pass.latent().to_vec();
        Ok((h, pass.probs))
    }

    /// Accumulates the gradient for one sample given the loss gradients at
    /// the logits and at the latent layer.
    fn backward(&self, pass: &ForwardPass, d_logits: &[f64], d_latent: &[f64], grad: &mut [f64]) {
        let last = self.n_layers() - 1;
        let mut delta = d_logits.to_vec();
        let mut upstream: Vec<f64> = d_latent.to_vec();
        for l in (0..=last).rev() {
            if l < last {
                // delta at a hidden pre-activation: upstream gradient through ReLU
                delta = upstream
                    .iter()
                    .zip(&pass.activations[l + 1])
                    .map(|(g, a)| if *a > 0.0 { *g } else { 0.0 })
                    .collect();
            }
            let (w, b) = self.layer_range(l);
            let fan_in = self.widths[l];
            let input = &pass.activations[l];
            let w_start = w.start;
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &mut grad[w_start + o * fan_in..w_start + (o + 1) * fan_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[b.start + o] += d;
            }
            if l > 0 {
                let weights = &self.params[w];
                let mut below = vec![0.0; fan_in];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (acc, wv) in below.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                        *acc += d * wv;
                    }
                }
                if l == last {
                    for (acc, g) in below.iter_mut().zip(&upstream) {
                        *acc += g;
                    }
                }
                upstream = below;
            }
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_softmax_at(logits: &[f64], y: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[y] - lse
}

/// Contribution of one edge given the squared latent distance.
pub fn edge_term(sign: Sign, sq_dist: f64, margin: f64) -> f64 {
    match sign {
        Sign::Positive => sq_dist,
        Sign::Negative => (margin - sq_dist).max(0.0),
    }
}

/// Derivative of [`edge_term`] with respect to the squared distance: +1 for
/// attraction, -1 inside the repulsion margin, 0 beyond it.
fn edge_slope(sign: Sign, sq_dist: f64, margin: f64) -> f64 {
    match sign {
        Sign::Positive => 1.0,
        Sign::Negative if sq_dist < margin => -1.0,
        Sign::Negative => 0.0,
    }
}

/// Gradient of [`graph_loss`] with respect to every latent vector.
pub fn graph_loss_gradient(latents: &[Vec<f64>], graph: &SignedGraph, margin: f64) -> Result<Vec<Vec<f64>>> {
    if latents.len() != graph.node_count() {
        return Err(CoinError::IndexMismatch(format!(
            "{} latents for a graph over {} nodes",
            latents.len(),
            graph.node_count()
        )));
    }
    let mut grad: Vec<Vec<f64>> = latents.iter().map(|h| vec![0.0; h.len()]).collect();
    let edges = graph.edges();
    if edges.is_empty() {
        return Ok(grad);
    }
    let scale = 1.0 / edges.len() as f64;
    for e in edges {
        let (ha, hb) = (&latents[e.anchor], &latents[e.neighbor]);
        let slope = edge_slope(e.sign, squared_distance(ha, hb), margin);
        for k in 0..ha.len() {
            let d = scale * slope * 2.0 * (ha[k] - hb[k]);
            grad[e.anchor][k] += d;
            grad[e.neighbor][k] -= d;
        }
    }
    Ok(grad)
}

/// Mean edge term over all edges of `graph`; zero for an edgeless graph.
pub fn graph_loss(latents: &[Vec<f64>], graph: &SignedGraph, margin: f64) -> Result<f64> {
    if latents.len() != graph.node_count() {
        return Err(CoinError::IndexMismatch(format!(
            "{} latents for a graph over {} nodes",
            latents.len(),
            graph.node_count()
        )));
    }
    let edges = graph.edges();
    if edges.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = edges
        .iter()
        .map(|e| {
            edge_term(
                e.sign,
                squared_distance(&latents[e.anchor], &latents[e.neighbor]),
                margin,
            )
        })
        .sum();
    Ok(total / edges.len() as f64)
}

/// Mean of `-ln p[y]`, with probabilities floored at [`PROB_FLOOR`].
pub fn classification_loss(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(CoinError::LengthMismatch {
            left: probs.len(),
            right: labels.len(),
        });
    }
    if probs.is_empty() {
        return Err(CoinError::EmptyBatch);
    }
    let mut total = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        let py = *p.get(y).ok_or(CoinError::UnknownClass(y))?;
        total -= py.max(PROB_FLOOR).ln();
    }
    Ok(total / probs.len() as f64)
}

pub fn total_loss(j_l: f64, j_g: f64, lambda: f64) -> f64 {
    j_l + lambda * j_g
}

/// Loss components over one batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub j_l: f64,
    pub j_g: f64,
    pub total: f64,
}

fn check_alignment(net: &EmbeddingNetwork, aug: &AugmentedDataset, graph: &SignedGraph) -> Result<()> {
    if graph.node_count() != aug.len() {
        return Err(CoinError::IndexMismatch(format!(
            "graph has {} nodes but the dataset has {} points",
            graph.node_count(),
            aug.len()
        )));
    }
    if aug.dim() != net.input_dim() {
        return Err(CoinError::DimensionMismatch {
            expected: net.input_dim(),
            got: aug.dim(),
        });
    }
    if aug.n_classes() > net.n_classes() {
        return Err(CoinError::UnknownClass(aug.n_classes() - 1));
    }
    Ok(())
}

/// Objective restricted to `batch` (node indices; duplicates are ignored),
/// optionally with its analytic gradient. An edge contributes only when both
/// endpoints are in the batch; `J_g` is averaged over those edges and `J_l`
/// over the labeled batch members. Accumulation runs in ascending node order.
pub fn batch_objective(
    net: &EmbeddingNetwork,
    aug: &AugmentedDataset,
    graph: &SignedGraph,
    batch: &[usize],
    config: &TrainConfig,
    with_gradient: bool,
) -> Result<(LossParts, Option<Vec<f64>>)> {
    check_alignment(net, aug, graph)?;
    if batch.is_empty() {
        return Err(CoinError::EmptyBatch);
    }
    let n = aug.len();
    let mut nodes: Vec<usize> = batch.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if let Some(&bad) = nodes.iter().find(|&&i| i >= n) {
        return Err(CoinError::OutOfRange { index: bad, len: n });
    }
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in nodes.iter().enumerate() {
        slot[i] = k;
    }

    let passes = nodes
        .iter()
        .map(|&i| net.forward_pass(&aug.points()[i].values))
        .collect::<Result<Vec<_>>>()?;

    let labeled: Vec<usize> = (0..nodes.len())
        .filter(|&k| aug.points()[nodes[k]].kind != NeighborKind::Negative)
        .collect();
    let batch_edges: Vec<&Edge> = graph
        .edges()
        .iter()
        .filter(|e| slot[e.anchor] != usize::MAX && slot[e.neighbor] != usize::MAX)
        .collect();

    let latent_dim = net.latent_dim();
    let n_classes = net.n_classes();
    let mut d_logits = vec![vec![0.0; n_classes]; nodes.len()];
    let mut d_latent = vec![vec![0.0; latent_dim]; nodes.len()];

    let mut j_l = 0.0;
    if !labeled.is_empty() {
        let scale = 1.0 / labeled.len() as f64;
        for &k in &labeled {
            let y = aug.points()[nodes[k]].class;
            j_l -= log_softmax_at(&passes[k].logits, y);
            for (c, (d, p)) in d_logits[k].iter_mut().zip(&passes[k].probs).enumerate() {
                *d = scale * (p - if c == y { 1.0 } else { 0.0 });
            }
        }
        j_l *= scale;
    }

    let mut j_g = 0.0;
    if !batch_edges.is_empty() {
        let scale = 1.0 / batch_edges.len() as f64;
        for e in &batch_edges {
            let (a, b) = (slot[e.anchor], slot[e.neighbor]);
            let (ha, hb) = (passes[a].latent(), passes[b].latent());
            let sq = squared_distance(ha, hb);
            j_g += edge_term(e.sign, sq, config.margin);
            let slope = edge_slope(e.sign, sq, config.margin);
            if slope != 0.0 && with_gradient {
                let coeff = config.lambda * scale * slope * 2.0;
                for k in 0..latent_dim {
                    let diff = coeff * (ha[k] - hb[k]);
                    d_latent[a][k] += diff;
                    d_latent[b][k] -= diff;
                }
            }
        }
        j_g *= scale;
    }

    let parts = LossParts {
        j_l,
        j_g,
        total: total_loss(j_l, j_g, config.lambda),
    };
    if !with_gradient {
        return Ok((parts, None));
    }
    let mut grad = vec![0.0; net.params.len()];
    for k in 0..nodes.len() {
        net.backward(&passes[k], &d_logits[k], &d_latent[k], &mut grad);
    }
    Ok((parts, Some(grad)))
}

/// Analytic gradient of the batch objective with respect to the flat
/// parameter vector.
pub fn gradients(
    net: &EmbeddingNetwork,
    batch: &[usize],
    aug: &AugmentedDataset,
    graph: &SignedGraph,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    let (_, grad) = batch_objective(net, aug, graph, batch, config, true)?;
    Ok(grad.expect("gradient requested"))
}

/// Objective over every node of the expanded dataset.
pub fn full_objective(
    net: &EmbeddingNetwork,
    aug: &AugmentedDataset,
    graph: &SignedGraph,
    config: &TrainConfig,
) -> Result<LossParts> {
    let all: Vec<usize> = (0..aug.len()).collect();
    batch_objective(net, aug, graph, &all, config, false).map(|(p, _)| p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub j_l: f64,
    pub j_g: f64,
    pub j: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub network: EmbeddingNetwork,
    pub history: Vec<EpochRecord>,
    pub config: TrainConfig,
}

/// Mini-batches for one epoch. Anchors are visited in shuffled order; each
/// contributes itself and its graph neighbors, and a batch is closed once it
/// reaches `batch_size` nodes.
fn anchor_blocks(graph: &SignedGraph, order: &[usize], batch_size: usize) -> Result<Vec<Vec<usize>>> {
    let mut batches = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(batch_size);
    let mut member = vec![false; graph.node_count()];
    for &a in order {
        for node in std::iter::once(a).chain(graph.neighbors_of(a)?.iter().map(|e| e.neighbor)) {
            if !member[node] {
                member[node] = true;
                current.push(node);
            }
        }
        if current.len() >= batch_size {
            for &node in &current {
                member[node] = false;
            }
            batches.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        batches.push(current);
    }
    Ok(batches)
}

/// Momentum mini-batch gradient descent with step decay. The history holds
/// the full-dataset objective after every epoch.
pub fn train(
    net: EmbeddingNetwork,
    aug: &AugmentedDataset,
    graph: &SignedGraph,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    check_alignment(&net, aug, graph)?;
    let mut net = net;
    let mut velocity = vec![0.0; net.params.len()];
    let mut order: Vec<usize> = graph.anchors().collect();
    if order.is_empty() {
        return Err(CoinError::EmptyInput);
    }
    let mut rng = seeded_rng(derive_seed(config.seed, 0x7261_696e));
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        for batch in anchor_blocks(graph, &order, config.batch_size)? {
            let grad = gradients(&net, &batch, aug, graph, config)?;
            for ((p, v), g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v - lr * g;
                *p += *v;
            }
        }
        let parts = full_objective(&net, aug, graph, config)?;
        if !parts.total.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(CoinError::Divergence {
                epoch,
                detail: format!("objective J_l={} J_g={} J={}", parts.j_l, parts.j_g, parts.total),
            });
        }
        history.push(EpochRecord {
            epoch,
            j_l: parts.j_l,
            j_g: parts.j_g,
            j: parts.total,
        });
    }

    Ok(TrainedModel {
        network: net,
        history,
        config: config.clone(),
    })
}

/// Most probable class (lowest id on exact ties) and the probabilities.
pub fn predict(net: &EmbeddingNetwork, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let (_, probs) = net.forward(x)?;
    Ok((argmax_lowest(&probs), probs))
}

pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// On-disk model: layer shapes with flat parameters, plus the input
/// standardization when the model was trained on standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layers: Vec<LayerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
}

impl Checkpoint {
    pub fn from_network(net: &EmbeddingNetwork, standardizer: Option<Standardizer>) -> Self {
        let layers = (0..net.n_layers())
            .map(|l| {
                let (w, b) = net.layer_range(l);
                LayerParams {
                    inputs: net.widths[l],
                    outputs: net.widths[l + 1],
                    weights: net.params[w].to_vec(),
                    bias: net.params[b].to_vec(),
                }
            })
            .collect();
        Self { layers, standardizer }
    }

    pub fn to_network(&self) -> Result<EmbeddingNetwork> {
        let first = self.layers.first().ok_or(CoinError::EmptyInput)?;
        let mut widths = vec![first.inputs];
        let mut params = Vec::new();
        for layer in &self.layers {
            if layer.inputs != *widths.last().expect("seeded") {
                return Err(CoinError::IndexMismatch("layer shapes do not chain".into()));
            }
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(CoinError::IndexMismatch(
                    "layer parameter count does not match its shape".into(),
                ));
            }
            widths.push(layer.outputs);
            params.extend_from_slice(&layer.weights);
            params.extend_from_slice(&layer.bias);
        }
        EmbeddingNetwork::from_params(widths, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::persist::write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::persist::read_json(path)
    }
}

pub fn save_history(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = String::from("epoch,J_l,J_g,J\n");
    for r in history {
        body.push_str(&format!("{},{},{},{}\n", r.epoch, r.j_l, r.j_g, r.j));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CoinError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::AugmentedPoint;
    use crate::graph::build_signed_graph;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            hidden_layers: vec![8, 4],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_network_is_uniform() {
        let net = EmbeddingNetwork::zeros(vec![3, 4, 2]);
        let (h, p) = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(h, vec![0.0; 4]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let net = EmbeddingNetwork::new(2, &[8, 4], 3, 11).unwrap();
        for x in [[0.0, 0.0], [3.0, -1.0], [-20.0, 40.0]] {
            let (_, p) = net.forward(&x).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(p.iter().all(|v| *v > 0.0));
        }
        assert!(matches!(net.forward(&[1.0]), Err(CoinError::DimensionMismatch { .. })));
    }

    #[test]
    fn softmax_shift_invariant() {
        let z = [0.3, -1.2, 2.5];
        let shifted: Vec<f64> = z.iter().map(|v| v + 123.0).collect();
        for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn classification_loss_examples() {
        assert!((classification_loss(&[vec![0.5, 0.5]], &[1]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(classification_loss(&[vec![0.0, 1.0]], &[1]).unwrap().abs() < 1e-11);
        assert!((classification_loss(&[vec![0.25, 0.75]], &[1]).unwrap() - 0.287_682_072_451_780_9).abs() < 1e-12);
        assert!(matches!(classification_loss(&[], &[]), Err(CoinError::EmptyBatch)));
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(0.5, 0.2, 0.0), 0.5);
        assert!((total_loss(0.5, 0.2, 1.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn edge_terms() {
        assert_eq!(edge_term(Sign::Positive, 0.0, 1.0), 0.0);
        assert_eq!(edge_term(Sign::Negative, 1.5, 1.0), 0.0);
        let mean = (edge_term(Sign::Positive, 0.3, 1.0) + edge_term(Sign::Negative, 0.2, 1.0)) / 2.0;
        assert!((mean - 0.55).abs() < 1e-15);
    }

    #[test]
    fn predict_ties_go_low() {
        assert_eq!(argmax_lowest(&[0.9, 0.1]), 0);
        assert_eq!(argmax_lowest(&[0.5, 0.5]), 0);
        assert_eq!(argmax_lowest(&[0.2, 0.8]), 1);
    }

    fn two_class_aug() -> AugmentedDataset {
        let pts = [(1.0, 0.2, 0), (0.8, 0.5, 0), (-0.3, 1.0, 1), (-0.6, 0.9, 1)];
        AugmentedDataset::from_points(
            pts.iter()
                .map(|&(x, y, c)| AugmentedPoint {
                    values: vec![x, y],
                    class: c,
                    kind: NeighborKind::Original,
                    seed_index: None,
                    batch: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn epochs_zero_returns_initialization() {
        let aug = two_class_aug();
        let graph = build_signed_graph(&aug, 1, 1).unwrap();
        let net = EmbeddingNetwork::new(2, &[8, 4], 2, 5).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..tiny_config()
        };
        let model = train(net.clone(), &aug, &graph, &cfg).unwrap();
        assert_eq!(model.network, net);
        assert!(model.history.is_empty());
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = EmbeddingNetwork::new(2, &[8, 4], 2, 5).unwrap();
        let ck = Checkpoint::from_network(&net, None);
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_network().unwrap(), net);
    }

    #[test]
    fn anchor_blocks_cover_every_anchor() {
        let aug = two_class_aug();
        let graph = build_signed_graph(&aug, 1, 1).unwrap();
        let blocks = anchor_blocks(&graph, &[3, 0, 2, 1], 3).unwrap();
        let mut seen: Vec<usize> = blocks.concat();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert!(blocks.iter().all(|b| !b.is_empty()));
    }
}
