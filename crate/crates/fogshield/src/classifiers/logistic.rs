//! One-vs-rest logistic regression trained by stochastic gradient descent.

use rand::seq::SliceRandom;

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::sim::substream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Seed for the per-epoch sample order.
    pub seed: u64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 0.1,
            epochs: 200,
            l2: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// One weight vector per class.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains one binary logistic model per class on one-hot targets with SGD.
/// The per-epoch sample order is a seeded shuffle, so training is
/// deterministic for fixed parameters.
pub fn train_logistic(
    x: &DataMatrix,
    y: &[usize],
    n_classes: usize,
    params: &LogisticParams,
) -> Result<LogisticModel> {
    if x.rows == 0 || y.len() != x.rows {
        return Err(Error::data("train_logistic: empty or mismatched data"));
    }
    if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::data("train_logistic: label out of range"));
    }
    let m = x.cols;
    let mut weights = vec![vec![0.0f64; m]; n_classes];
    let mut biases = vec![0.0f64; n_classes];
    let mut order: Vec<usize> = (0..x.rows).collect();

    for epoch in 0..params.epochs {
        let mut rng = substream_rng(params.seed, 301, epoch as u64);
        order.shuffle(&mut rng);
        for &i in &order {
            let row = x.row(i);
            for (c, (w, b)) in weights.iter_mut().zip(biases.iter_mut()).enumerate() {
                let target = f64::from(u8::from(y[i] == c));
                let mut z = *b;
                for (wj, xj) in w.iter().zip(row) {
                    z += wj * xj;
                }
                let g = sigmoid(z) - target;
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj -= params.learning_rate * (g * xj + params.l2 * *wj);
                }
                *b -= params.learning_rate * g;
            }
        }
        let finite = weights.iter().flatten().all(|w| w.is_finite())
            && biases.iter().all(|b| b.is_finite());
        if !finite {
            return Err(Error::numeric(format!(
                "train_logistic: diverged at epoch {epoch}"
            )));
        }
    }

    Ok(LogisticModel {
        weights,
        biases,
        n_features: m,
        n_classes,
    })
}

/// Per-class sigmoid scores.
pub fn logistic_scores(model: &LogisticModel, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != model.n_features {
        return Err(Error::data("logistic_scores: feature arity mismatch"));
    }
    Ok(model
        .weights
        .iter()
        .zip(&model.biases)
        .map(|(w, b)| {
            let mut z = *b;
            for (wj, xj) in w.iter().zip(row) {
                z += wj * xj;
            }
            sigmoid(z)
        })
        .collect())
}

/// Argmax of the per-class scores; ties resolve to the lower class index,
/// so a binary score of exactly one half yields class 0.
pub fn logistic_predict(model: &LogisticModel, row: &[f64]) -> Result<usize> {
    let scores = logistic_scores(model, row)?;
    Ok(argmax(&scores))
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Mean binary cross-entropy of a single weight vector over a batch, plus
/// the L2 penalty. `targets` are 0/1.
pub fn binary_logistic_loss(
    w: &[f64],
    b: f64,
    x: &DataMatrix,
    targets: &[f64],
    l2: f64,
) -> f64 {
    let n = x.rows as f64;
    let mut loss = 0.0;
    for i in 0..x.rows {
        let row = x.row(i);
        let mut z = b;
        for (wj, xj) in w.iter().zip(row) {
            z += wj * xj;
        }
        // max(z,0) - z t + ln(1 + exp(-|z|)) evaluates the cross-entropy
        // without overflow for any z.
        loss += z.max(0.0) - z * targets[i] + (-z.abs()).exp().ln_1p();
    }
    loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Analytic gradient of [`binary_logistic_loss`] in (weights, bias).
pub fn binary_logistic_gradient(
    w: &[f64],
    b: f64,
    x: &DataMatrix,
    targets: &[f64],
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = x.rows as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for i in 0..x.rows {
        let row = x.row(i);
        let mut z = b;
        for (wj, xj) in w.iter().zip(row) {
            z += wj * xj;
        }
        let g = sigmoid(z) - targets[i];
        for (gj, xj) in gw.iter_mut().zip(row) {
            *gj += g * xj;
        }
        gb += g;
    }
    for (gj, wj) in gw.iter_mut().zip(w) {
        *gj = *gj / n + l2 * wj;
    }
    (gw, gb / n)
}
