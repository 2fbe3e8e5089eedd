//! One-vs-rest linear SVM trained by subgradient descent on the
//! soft-margin hinge objective.

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    /// Hinge-loss weight of the soft margin.
    pub c: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            learning_rate: 0.01,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Soft-margin objective: `0.5 ||w||^2 + C * sum_i hinge(y_i (w x_i + b))`
/// with labels in {-1, +1}.
pub fn svm_objective(w: &[f64], b: f64, x: &DataMatrix, y_signed: &[f64], c: f64) -> f64 {
    let mut hinge_sum = 0.0;
    for i in 0..x.rows {
        let row = x.row(i);
        let mut z = b;
        for (wj, xj) in w.iter().zip(row) {
            z += wj * xj;
        }
        hinge_sum += (1.0 - y_signed[i] * z).max(0.0);
    }
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * hinge_sum
}

/// Full-batch subgradient descent, one binary problem per class. The step
/// is scaled by the sample count so the configured learning rate stays
/// stable across dataset sizes; the objective itself is unscaled.
pub fn train_svm(
    x: &DataMatrix,
    y: &[usize],
    n_classes: usize,
    params: &SvmParams,
) -> Result<SvmModel> {
    if x.rows == 0 || y.len() != x.rows {
        return Err(Error::data("train_svm: empty or mismatched data"));
    }
    if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::data("train_svm: label out of range"));
    }
    let m = x.cols;
    let n = x.rows;
    let step = params.learning_rate / n as f64;
    let mut weights = vec![vec![0.0f64; m]; n_classes];
    let mut biases = vec![0.0f64; n_classes];

    for (c, (w, b)) in weights.iter_mut().zip(biases.iter_mut()).enumerate() {
        let y_signed: Vec<f64> = y
            .iter()
            .map(|&l| if l == c { 1.0 } else { -1.0 })
            .collect();
        for epoch in 0..params.epochs {
            let mut grad_w = w.clone();
            let mut grad_b = 0.0;
            for i in 0..n {
                let row = x.row(i);
                let mut z = *b;
                for (wj, xj) in w.iter().zip(row) {
                    z += wj * xj;
                }
                if y_signed[i] * z < 1.0 {
                    for (gj, xj) in grad_w.iter_mut().zip(row) {
                        *gj -= params.c * y_signed[i] * xj;
                    }
                    grad_b -= params.c * y_signed[i];
                }
            }
            for (wj, gj) in w.iter_mut().zip(&grad_w) {
                *wj -= step * gj;
            }
            *b -= step * grad_b;
            if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
                return Err(Error::numeric(format!(
                    "train_svm: diverged at epoch {epoch} for class {c}"
                )));
            }
        }
    }

    Ok(SvmModel {
        weights,
        biases,
        n_features: m,
        n_classes,
    })
}

/// Per-class margins `w x + b`.
pub fn svm_scores(model: &SvmModel, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != model.n_features {
        return Err(Error::data("svm_scores: feature arity mismatch"));
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
            z
        })
        .collect())
}

/// Argmax of the margins; ties resolve to the lower class index.
pub fn svm_predict(model: &SvmModel, row: &[f64]) -> Result<usize> {
    let scores = svm_scores(model, row)?;
    Ok(super::logistic::argmax(&scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> DataMatrix {
        DataMatrix::from_rows(rows).unwrap()
    }

    fn toy_margin_two() -> (DataMatrix, Vec<usize>) {
        // Two clusters separated by a margin of about two.
        let x = matrix(&[
            vec![-2.0, 0.0],
            vec![-2.5, 0.5],
            vec![-3.0, -0.5],
            vec![2.0, 0.0],
            vec![2.5, -0.5],
            vec![3.0, 0.5],
        ]);
        (x, vec![0, 0, 0, 1, 1, 1])
    }

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        let (x, y) = toy_margin_two();
        let params = SvmParams {
            epochs: 400,
            learning_rate: 0.05,
            ..SvmParams::default()
        };
        let model = train_svm(&x, &y, 2, &params).unwrap();
        for i in 0..x.rows {
            assert_eq!(svm_predict(&model, x.row(i)).unwrap(), y[i]);
        }
    }

    #[test]
    fn same_class_everywhere_is_a_degenerate_constant_model() {
        let (x, _) = toy_margin_two();
        let y = vec![1usize; x.rows];
        let model = train_svm(&x, &y, 2, &SvmParams::default()).unwrap();
        for i in 0..x.rows {
            assert_eq!(svm_predict(&model, x.row(i)).unwrap(), 1);
        }
    }

    #[test]
    fn objective_decreases_over_the_first_hundred_epochs() {
        let (x, y) = toy_margin_two();
        let y_signed: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let initial = svm_objective(&[0.0; 2], 0.0, &x, &y_signed, 1.0);
        let params = SvmParams {
            epochs: 100,
            ..SvmParams::default()
        };
        let model = train_svm(&x, &y, 2, &params).unwrap();
        let trained = svm_objective(&model.weights[1], model.biases[1], &x, &y_signed, 1.0);
        assert!(
            trained < initial,
            "objective {trained} should beat initial {initial}"
        );
    }

    #[test]
    fn sign_rule_and_tie_rule() {
        let model = SvmModel {
            weights: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            biases: vec![0.0, 0.0],
            n_features: 2,
            n_classes: 2,
        };
        // w = (1,0), b = 0 for the positive class: x = (2,5) lands positive.
        assert_eq!(svm_predict(&model, &[2.0, 5.0]).unwrap(), 1);
        // On the hyperplane both margins are zero: lower index wins.
        assert_eq!(svm_predict(&model, &[0.0, 3.0]).unwrap(), 0);
        assert!(svm_predict(&model, &[1.0]).is_err());
    }

    #[test]
    fn decision_is_invariant_to_positive_scaling() {
        let (x, y) = toy_margin_two();
        let model = train_svm(&x, &y, 2, &SvmParams::default()).unwrap();
        let scaled = SvmModel {
            weights: model
                .weights
                .iter()
                .map(|w| w.iter().map(|v| v * 7.5).collect())
                .collect(),
            biases: model.biases.iter().map(|b| b * 7.5).collect(),
            ..model.clone()
        };
        for i in 0..x.rows {
            assert_eq!(
                svm_predict(&model, x.row(i)).unwrap(),
                svm_predict(&scaled, x.row(i)).unwrap()
            );
        }
    }
}
