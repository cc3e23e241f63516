//! Classification metrics, latent margin statistics and PCA projection.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{CoinError, Result};
use crate::linalg::euclidean_distance;

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(CoinError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(CoinError::EmptyInput);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a class-1 score exceeds a class-0 score, ties counting one half.
/// Computed from mid-ranks in `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CoinError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CoinError::InvalidParameter("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.iter().filter(|&&l| l == 0).count();
    if n_pos + n_neg != labels.len() {
        return Err(CoinError::InvalidParameter("auc expects labels in {0, 1}".into()));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(CoinError::SingleClassInput);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps mid-ranks integral
    let mut pos_rank_sum2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, doubled mid-rank = start + 1 + end
        let mid2 = (start + 1 + end) as u64;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        pos_rank_sum2 += mid2 * pos_in_group;
        start = end;
    }
    let (np, nn) = (n_pos as u64, n_neg as u64);
    let u2 = pos_rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * np * nn) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub intra_mean: f64,
    pub inter_mean: f64,
    /// `inter_mean / intra_mean`; `None` when the classes are collapsed.
    pub margin_ratio: Option<f64>,
    pub degenerate: bool,
}

/// Mean Euclidean distance over same-class pairs and over cross-class pairs.
pub fn margin_stats(latents: &[Vec<f64>], labels: &[usize]) -> Result<MarginStats> {
    if latents.len() != labels.len() {
        return Err(CoinError::LengthMismatch {
            left: latents.len(),
            right: labels.len(),
        });
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(CoinError::SingleClassInput);
    }
    if let Some(&few) = counts.iter().filter(|&&c| c > 0).min().filter(|&&c| c < 2) {
        return Err(CoinError::InsufficientSamples { needed: 2, got: few });
    }
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..latents.len() {
        for j in i + 1..latents.len() {
            let d = euclidean_distance(&latents[i], &latents[j]);
            if labels[i] == labels[j] {
                intra += d;
                n_intra += 1;
            } else {
                inter += d;
                n_inter += 1;
            }
        }
    }
    let intra_mean = intra / n_intra as f64;
    let inter_mean = inter / n_inter as f64;
    let degenerate = intra_mean <= 0.0;
    Ok(MarginStats {
        intra_mean,
        inter_mean,
        margin_ratio: (!degenerate).then(|| inter_mean / intra_mean),
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    /// One row per sample, `k` columns; columns beyond `rank` are zero.
    pub coords: Vec<Vec<f64>>,
    /// Unit principal directions, one per non-degenerate component.
    pub components: Vec<Vec<f64>>,
    /// Variances along the returned components.
    pub variances: Vec<f64>,
    pub rank: usize,
}

impl Projection {
    pub fn rank_deficient(&self, k: usize) -> bool {
        self.rank < k
    }
}

/// Projects centered samples onto their top-`k` principal directions. Each
/// direction is signed so its largest-magnitude entry is positive.
/// Directions whose variance is below `1e-10` of the leading variance are
/// dropped and their coordinates left at zero.
pub fn pca_project(latents: &[Vec<f64>], k: usize) -> Result<Projection> {
    let n = latents.len();
    let dim = latents.first().map_or(0, Vec::len);
    if k == 0 || n < k || dim < k {
        return Err(CoinError::InvalidParameter(format!(
            "pca needs at least {k} samples and dimension {k}; got {n} samples of dimension {dim}"
        )));
    }
    if latents.iter().any(|r| r.len() != dim) {
        return Err(CoinError::InvalidParameter("ragged latent matrix".into()));
    }
    let mut mean = vec![0.0; dim];
    for r in latents {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| latents[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let lead = eig.eigenvalues[order[0]].max(0.0);
    let tol = lead * 1e-10;

    let mut components = Vec::new();
    let mut variances = Vec::new();
    for &c in order.iter().take(k) {
        let var = eig.eigenvalues[c];
        if lead <= 0.0 || var <= tol {
            break;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        variances.push(var);
    }

    let coords = (0..n)
        .map(|i| {
            let mut row = vec![0.0; k];
            for (slot, comp) in row.iter_mut().zip(&components) {
                *slot = (0..dim).map(|j| centered[(i, j)] * comp[j]).sum();
            }
            row
        })
        .collect();
    Ok(Projection {
        coords,
        rank: components.len(),
        components,
        variances,
    })
}

/// Evaluation summary written next to a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub auc: f64,
    pub intra_mean: f64,
    pub inter_mean: f64,
    pub margin_ratio: Option<f64>,
    pub margin_degenerate: bool,
    pub n_test: usize,
    pub config: serde_json::Value,
}

/// Rows of `x,y,label,kind`.
pub fn save_projection(coords: &[Vec<f64>], labels: &[usize], kinds: &[&str], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if coords.len() != labels.len() || labels.len() != kinds.len() {
        return Err(CoinError::LengthMismatch {
            left: coords.len(),
            right: labels.len().min(kinds.len()),
        });
    }
    let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = String::from("x,y,label,kind\n");
    for ((c, l), kind) in coords.iter().zip(labels).zip(kinds) {
        let x = c.first().copied().unwrap_or(0.0);
        let y = c.get(1).copied().unwrap_or(0.0);
        body.push_str(&format!("{x},{y},{l},{kind}\n"));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CoinError::io(path, e))
}
