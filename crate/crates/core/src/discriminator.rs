//! Linear SVM discriminator separating real samples (+1) from generated
//! candidates (-1), and its logistic "realness" probability.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{CoinError, Result};
use crate::linalg::{dot, norm};
use crate::rng::seeded_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmTrainConfig {
    pub epochs: usize,
    /// Initial step size.
    pub learning_rate: f64,
    /// Step size at epoch t is `learning_rate / (1 + t * decay)`.
    pub decay: f64,
    pub reg_strength: f64,
    pub seed: u64,
}

impl Default for SvmTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.1,
            decay: 0.01,
            reg_strength: 1e-3,
            seed: 0,
        }
    }
}

impl SvmTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(CoinError::InvalidParameter("svm epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(CoinError::InvalidParameter("svm learning_rate must be > 0".into()));
        }
        if !(self.decay >= 0.0 && self.reg_strength >= 0.0) {
            return Err(CoinError::InvalidParameter(
                "svm decay and reg_strength must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub reg_strength: f64,
    pub trained: bool,
}

impl LinearSvm {
    pub fn untrained(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            reg_strength: 0.0,
            trained: false,
        }
    }

    /// A ready-to-score model with fixed parameters.
    pub fn from_parts(weights: Vec<f64>, bias: f64) -> Self {
        Self {
            weights,
            bias,
            reg_strength: 0.0,
            trained: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if !self.trained {
            return Err(CoinError::UntrainedDiscriminator);
        }
        if x.len() != self.weights.len() {
            return Err(CoinError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// Geometric distance to the hyperplane, positive on the "real" side.
    /// A zero weight vector has no boundary and maps every point to 0.
    pub fn signed_distance(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let w_norm = norm(&self.weights);
        if w_norm == 0.0 {
            return Ok(0.0);
        }
        Ok(self.decision_value(x) / w_norm)
    }

    pub fn real_probability(&self, x: &[f64]) -> Result<f64> {
        Ok(logistic(self.signed_distance(x)?))
    }

    fn objective(&self, points: &[(&[f64], f64)]) -> f64 {
        let hinge: f64 = points
            .iter()
            .map(|(x, y)| (1.0 - y * self.decision_value(x)).max(0.0))
            .sum::<f64>()
            / points.len() as f64;
        hinge + 0.5 * self.reg_strength * dot(&self.weights, &self.weights)
    }
}

/// `exp(d) / (exp(d) + 1)` evaluated without overflow, kept inside the open
/// interval `(0, 1)`: saturated tails are clamped to the nearest
/// representable interior values.
pub fn logistic(d: f64) -> f64 {
    let p = if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Result of [`train_svm_with_history`].
#[derive(Clone, Debug)]
pub struct SvmFit {
    pub svm: LinearSvm,
    /// Objective at each epoch's iterate.
    pub objective: Vec<f64>,
    /// Lowest objective seen up to and including each epoch; the returned
    /// model attains the last entry.
    pub best_objective: Vec<f64>,
}

pub fn train_svm(real: &[Vec<f64>], generated: &[Vec<f64>], config: &SvmTrainConfig) -> Result<LinearSvm> {
    train_svm_with_history(real, generated, config).map(|fit| fit.svm)
}

/// Full-batch subgradient descent on the L2-regularized mean hinge loss with
/// real samples labeled +1 and generated samples -1. The smaller side is
/// resampled with replacement to the size of the larger one. Subgradient
/// steps are not descent steps, so the best iterate is kept.
pub fn train_svm_with_history(real: &[Vec<f64>], generated: &[Vec<f64>], config: &SvmTrainConfig) -> Result<SvmFit> {
    config.validate()?;
    if real.is_empty() {
        return Err(CoinError::EmptyClass("real"));
    }
    if generated.is_empty() {
        return Err(CoinError::EmptyClass("generated"));
    }
    let dim = real[0].len();
    for x in real.iter().chain(generated) {
        if x.len() != dim {
            return Err(CoinError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
    }

    let mut rng = seeded_rng(config.seed);
    let target = real.len().max(generated.len());
    let mut balance = |side: &'_ [Vec<f64>]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..side.len()).collect();
        while idx.len() < target {
            idx.push(rng.random_range(0..side.len()));
        }
        idx
    };
    let real_idx = balance(real);
    let gen_idx = balance(generated);
    let points: Vec<(&[f64], f64)> = real_idx
        .iter()
        .map(|&i| (real[i].as_slice(), 1.0))
        .chain(gen_idx.iter().map(|&i| (generated[i].as_slice(), -1.0)))
        .collect();
    let n = points.len() as f64;

    let mut svm = LinearSvm {
        weights: vec![0.0; dim],
        bias: 0.0,
        reg_strength: config.reg_strength,
        trained: true,
    };
    let mut best = svm.clone();
    let mut best_obj = svm.objective(&points);
    let mut objective = Vec::with_capacity(config.epochs);
    let mut best_objective = Vec::with_capacity(config.epochs);
    let mut grad_w = vec![0.0; dim];

    for epoch in 0..config.epochs {
        let eta = config.learning_rate / (1.0 + epoch as f64 * config.decay);
        grad_w
            .iter_mut()
            .zip(&svm.weights)
            .for_each(|(g, w)| *g = config.reg_strength * w);
        let mut grad_b = 0.0;
        for (x, y) in &points {
            if y * svm.decision_value(x) < 1.0 {
                for (g, xi) in grad_w.iter_mut().zip(x.iter()) {
                    *g -= y * xi / n;
                }
                grad_b -= y / n;
            }
        }
        for (w, g) in svm.weights.iter_mut().zip(&grad_w) {
            *w -= eta * g;
        }
        svm.bias -= eta * grad_b;

        let obj = svm.objective(&points);
        if !obj.is_finite() {
            return Err(CoinError::Divergence {
                epoch,
                detail: "svm objective is not finite".into(),
            });
        }
        if obj < best_obj {
            best_obj = obj;
            best = svm.clone();
        }
        objective.push(obj);
        best_objective.push(best_obj);
    }

    Ok(SvmFit {
        svm: best,
        objective,
        best_objective,
    })
}
