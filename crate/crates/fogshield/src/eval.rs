//! Confusion matrices, the detection metric suite, ROC sweeps, the cost
//! function, and the K-fold cross-validation driver.
//!
//! Metrics with a zero denominator surface as `None` ("undefined"), never
//! silently as zero; small validation folds can lack a class entirely and
//! the distinction matters when averaging.

use std::fmt::Write as _;

use crate::classifiers::ModelSpec;
use crate::dataset::{apply_scaler, fit_scaler, kfold_indices, DataMatrix};
use crate::error::{Error, Result};

/// Predicted-versus-actual counts. Rows are the predicted class, columns the
/// actual class.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<u64>,
    k: usize,
}

impl ConfusionMatrix {
    pub fn from_counts(class_names: &[&str], rows: &[Vec<u64>]) -> Result<ConfusionMatrix> {
        let k = class_names.len();
        if k == 0 || rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::data("confusion matrix must be square over the classes"));
        }
        Ok(ConfusionMatrix {
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
            counts: rows.iter().flatten().copied().collect(),
            k,
        })
    }

    /// Tallies prediction/label index pairs.
    pub fn from_predictions(
        predictions: &[usize],
        actuals: &[usize],
        class_names: &[&str],
    ) -> Result<ConfusionMatrix> {
        if predictions.len() != actuals.len() {
            return Err(Error::data("predictions and labels differ in length"));
        }
        let k = class_names.len();
        let mut counts = vec![0u64; k * k];
        for (&p, &a) in predictions.iter().zip(actuals) {
            if p >= k || a >= k {
                return Err(Error::data(format!("unknown label index {}", p.max(a))));
            }
            counts[p * k + a] += 1;
        }
        Ok(ConfusionMatrix {
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
            counts,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn count(&self, predicted: usize, actual: usize) -> u64 {
        self.counts[predicted * self.k + actual]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.k).map(|i| self.count(i, i)).sum()
    }

    pub fn misclassified(&self) -> u64 {
        self.total() - self.diagonal()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }

    /// CSV rendering: header of actual-class columns, one row per predicted class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("predicted\\actual");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for p in 0..self.k {
            out.push_str(&self.class_names[p]);
            for a in 0..self.k {
                let _ = write!(out, ",{}", self.count(p, a));
            }
            out.push('\n');
        }
        out
    }
}

/// One-vs-rest counts and rates for a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub tp_rate: Option<f64>,
    pub tn_rate: Option<f64>,
    pub fp_rate: Option<f64>,
    pub fn_rate: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// One-vs-rest reduction of the matrix for `class`, then the four rates.
pub fn rate_metrics(cm: &ConfusionMatrix, class: usize) -> Result<RateMetrics> {
    if class >= cm.k {
        return Err(Error::data("rate_metrics: class out of range"));
    }
    let tp = cm.count(class, class);
    let fp: u64 = (0..cm.k)
        .filter(|&a| a != class)
        .map(|a| cm.count(class, a))
        .sum();
    let fn_count: u64 = (0..cm.k)
        .filter(|&p| p != class)
        .map(|p| cm.count(p, class))
        .sum();
    let tn = cm.total() - tp - fp - fn_count;
    Ok(RateMetrics {
        tp,
        tn,
        fp,
        fn_count,
        tp_rate: ratio(tp, tp + fn_count),
        tn_rate: ratio(tn, tn + fp),
        fp_rate: ratio(fp, fp + tn),
        fn_rate: ratio(fn_count, fn_count + tp),
    })
}

/// Fraction classified correctly: diagonal over total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::numeric("accuracy: empty matrix"));
    }
    Ok(cm.diagonal() as f64 / total as f64)
}

/// Precision, recall, and the F1 score `TP / (TP + (FP + FN) / 2)` for one
/// class; each is `None` when its denominator vanishes.
pub fn precision_recall_f1(
    cm: &ConfusionMatrix,
    class: usize,
) -> Result<(Option<f64>, Option<f64>, Option<f64>)> {
    let r = rate_metrics(cm, class)?;
    let precision = ratio(r.tp, r.tp + r.fp);
    let recall = ratio(r.tp, r.tp + r.fn_count);
    let f1_den = r.tp as f64 + 0.5 * (r.fp + r.fn_count) as f64;
    let f1 = if f1_den > 0.0 {
        Some(r.tp as f64 / f1_den)
    } else {
        None
    };
    Ok((precision, recall, f1))
}

/// Mean squared difference between two equal-length vectors.
pub fn mse(expected: &[f64], predicted: &[f64]) -> Result<f64> {
    if expected.is_empty() || expected.len() != predicted.len() {
        return Err(Error::numeric("mse: empty or mismatched inputs"));
    }
    let sum: f64 = expected
        .iter()
        .zip(predicted)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(sum / expected.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub mae: f64,
    pub rmse: f64,
    /// Relative absolute error as a percentage; None for zero-variance targets.
    pub rae_percent: Option<f64>,
    /// Root relative squared error as a percentage.
    pub rrse_percent: Option<f64>,
}

/// Error statistics over numeric prediction matrices (typically one-hot
/// encodings of labels versus predicted classes). The relative baselines
/// divide by the error of constantly predicting the mean target value.
pub fn error_summary(expected: &[Vec<f64>], predicted: &[Vec<f64>]) -> Result<ErrorSummary> {
    if expected.is_empty()
        || expected.len() != predicted.len()
        || expected
            .iter()
            .zip(predicted)
            .any(|(e, p)| e.len() != p.len())
    {
        return Err(Error::numeric("error_summary: mismatched shapes"));
    }
    let n_entries: usize = expected.iter().map(Vec::len).sum();
    if n_entries == 0 {
        return Err(Error::numeric("error_summary: empty vectors"));
    }
    let mean_y: f64 = expected.iter().flatten().sum::<f64>() / n_entries as f64;

    let mut abs_err = 0.0;
    let mut sq_err = 0.0;
    let mut abs_base = 0.0;
    let mut sq_base = 0.0;
    for (erow, prow) in expected.iter().zip(predicted) {
        for (e, p) in erow.iter().zip(prow) {
            let d = e - p;
            abs_err += d.abs();
            sq_err += d * d;
            let b = e - mean_y;
            abs_base += b.abs();
            sq_base += b * b;
        }
    }
    let mae = abs_err / n_entries as f64;
    let rmse = (sq_err / n_entries as f64).sqrt();
    let rae_percent = if abs_base > 0.0 {
        Some(100.0 * abs_err / abs_base)
    } else {
        None
    };
    let rrse_percent = if sq_base > 0.0 {
        Some(100.0 * (sq_err / sq_base).sqrt())
    } else {
        None
    };
    Ok(ErrorSummary {
        mae,
        rmse,
        rae_percent,
        rrse_percent,
    })
}

/// Detection cost `1 - TP_r + phi * FP_r` for the one-vs-rest reduction of
/// one class; `None` when either rate is undefined.
pub fn cost_for_class(cm: &ConfusionMatrix, class: usize, phi: f64) -> Result<Option<f64>> {
    if phi < 0.0 {
        return Err(Error::numeric("cost: phi must be nonnegative"));
    }
    let r = rate_metrics(cm, class)?;
    Ok(match (r.tp_rate, r.fp_rate) {
        (Some(tpr), Some(fpr)) => Some(1.0 - tpr + phi * fpr),
        _ => None,
    })
}

/// Detection cost of the matrix. With a "Normal" class present, all attack
/// classes pool into the positive side (attack-vs-normal detection);
/// otherwise this is the macro mean of the per-class costs.
pub fn cost(cm: &ConfusionMatrix, phi: f64) -> Result<Option<f64>> {
    if phi < 0.0 {
        return Err(Error::numeric("cost: phi must be nonnegative"));
    }
    if let Some(normal) = cm.class_index("Normal") {
        let mut tp = 0u64; // attack predicted as any attack class
        let mut fn_count = 0u64; // attack predicted normal
        let mut fp = 0u64; // normal predicted as attack
        let tn = cm.count(normal, normal);
        for p in 0..cm.k {
            for a in 0..cm.k {
                match (p == normal, a == normal) {
                    (false, false) => tp += cm.count(p, a),
                    (true, false) => fn_count += cm.count(p, a),
                    (false, true) => fp += cm.count(p, a),
                    (true, true) => {}
                }
            }
        }
        let tpr = ratio(tp, tp + fn_count);
        let fpr = ratio(fp, fp + tn);
        return Ok(match (tpr, fpr) {
            (Some(tpr), Some(fpr)) => Some(1.0 - tpr + phi * fpr),
            _ => None,
        });
    }
    let costs: Vec<f64> = (0..cm.k)
        .filter_map(|c| cost_for_class(cm, c, phi).transpose())
        .collect::<Result<Vec<f64>>>()?;
    if costs.is_empty() {
        return Ok(None);
    }
    Ok(Some(costs.iter().sum::<f64>() / costs.len() as f64))
}

/// A receiver operating characteristic curve with its trapezoidal area.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// (FP rate, TP rate) points sorted by FP rate, from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Threshold sweep over the distinct scores: at each threshold everything
/// scoring at or above it is predicted positive.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::numeric("roc_points: empty or mismatched inputs"));
    }
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let negatives = labels.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(Error::numeric("roc_points: need both classes"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / negatives, tp / positives));
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Per-class slice of an evaluation report. Counts are stored as floats so
/// fold averages remain representable.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class_name: String,
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_count: f64,
    pub tp_rate: Option<f64>,
    pub tn_rate: Option<f64>,
    pub fp_rate: Option<f64>,
    pub fn_rate: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Full metric suite for one evaluation (or an average over folds).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub total: f64,
    pub correct: f64,
    pub incorrect: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassReport>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
    pub rae_percent: Option<f64>,
    pub rrse_percent: Option<f64>,
    pub cost: Option<f64>,
}

fn one_hot(index: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[index] = 1.0;
    v
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Evaluates predictions against labels: confusion matrix, rates, precision
/// family, error statistics over one-hot encodings, and the cost at `phi`.
pub fn evaluate(
    predictions: &[usize],
    actuals: &[usize],
    class_names: &[&str],
    phi: f64,
) -> Result<EvalReport> {
    let cm = ConfusionMatrix::from_predictions(predictions, actuals, class_names)?;
    let k = cm.k();
    let expected: Vec<Vec<f64>> = actuals.iter().map(|&a| one_hot(a, k)).collect();
    let predicted: Vec<Vec<f64>> = predictions.iter().map(|&p| one_hot(p, k)).collect();
    let errors = error_summary(&expected, &predicted)?;
    let flat_e: Vec<f64> = expected.iter().flatten().copied().collect();
    let flat_p: Vec<f64> = predicted.iter().flatten().copied().collect();
    let mse_value = mse(&flat_e, &flat_p)?;

    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let r = rate_metrics(&cm, c)?;
        let (precision, recall, f1) = precision_recall_f1(&cm, c)?;
        per_class.push(ClassReport {
            class_name: class_names[c].to_string(),
            tp: r.tp as f64,
            tn: r.tn as f64,
            fp: r.fp as f64,
            fn_count: r.fn_count as f64,
            tp_rate: r.tp_rate,
            tn_rate: r.tn_rate,
            fp_rate: r.fp_rate,
            fn_rate: r.fn_rate,
            precision,
            recall,
            f1,
        });
    }

    Ok(EvalReport {
        class_names: class_names.iter().map(|s| s.to_string()).collect(),
        total: cm.total() as f64,
        correct: cm.diagonal() as f64,
        incorrect: cm.misclassified() as f64,
        accuracy: accuracy(&cm)?,
        macro_precision: mean_defined(&per_class.iter().map(|c| c.precision).collect::<Vec<_>>()),
        macro_recall: mean_defined(&per_class.iter().map(|c| c.recall).collect::<Vec<_>>()),
        macro_f1: mean_defined(&per_class.iter().map(|c| c.f1).collect::<Vec<_>>()),
        per_class,
        mse: mse_value,
        mae: errors.mae,
        rmse: errors.rmse,
        rae_percent: errors.rae_percent,
        rrse_percent: errors.rrse_percent,
        cost: cost(&cm, phi)?,
    })
}

fn fmt_opt(v: Option<f64>, scale: f64, digits: usize) -> String {
    match v {
        Some(x) => format!("{:.*}", digits, x * scale),
        None => "undefined".to_string(),
    }
}

impl EvalReport {
    /// Aligned text rendering: per-class recall/precision/F1 percentages
    /// with their mean, then the summary counters and error statistics.
    pub fn to_table_text(&self) -> String {
        let mut out = String::new();
        let width = self
            .class_names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(10)
            .max("Mean".len());
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>11}  {:>10}",
            "Attack type", "Recall %", "Precision %", "F1-Score %"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>11}  {:>10}",
                c.class_name,
                fmt_opt(c.recall, 100.0, 1),
                fmt_opt(c.precision, 100.0, 1),
                fmt_opt(c.f1, 100.0, 1)
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>11}  {:>10}",
            "Mean",
            fmt_opt(self.macro_recall, 100.0, 1),
            fmt_opt(self.macro_precision, 100.0, 1),
            fmt_opt(self.macro_f1, 100.0, 1)
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Dataset classified correctly    {:>12.1}  {:.2}%",
            self.correct,
            100.0 * self.accuracy
        );
        let _ = writeln!(
            out,
            "Dataset classified incorrectly  {:>12.1}  {:.2}%",
            self.incorrect,
            100.0 * (1.0 - self.accuracy)
        );
        let _ = writeln!(out, "Mean absolute error             {:>12.4}", self.mae);
        let _ = writeln!(out, "Root mean squared error         {:>12.4}", self.rmse);
        let _ = writeln!(
            out,
            "Relative absolute error         {:>12}",
            fmt_opt(self.rae_percent, 1.0, 4)
        );
        let _ = writeln!(
            out,
            "Root relative squared error     {:>12}",
            fmt_opt(self.rrse_percent, 1.0, 4)
        );
        let _ = writeln!(
            out,
            "Cost (phi-weighted)             {:>12}",
            fmt_opt(self.cost, 1.0, 4)
        );
        let _ = writeln!(out, "Total number of datasets        {:>12.1}", self.total);
        out
    }

    /// Machine-readable rendering, one `metric,class,value` row per line.
    pub fn to_metric_csv(&self) -> String {
        let mut out = String::from("metric,class,value\n");
        let mut push = |metric: &str, class: &str, value: Option<f64>| {
            let rendered = value.map_or("undefined".to_string(), |v| format!("{v}"));
            let _ = writeln!(out, "{metric},{class},{rendered}");
        };
        push("accuracy", "all", Some(self.accuracy));
        push("correct", "all", Some(self.correct));
        push("incorrect", "all", Some(self.incorrect));
        push("total", "all", Some(self.total));
        push("mse", "all", Some(self.mse));
        push("mae", "all", Some(self.mae));
        push("rmse", "all", Some(self.rmse));
        push("rae_percent", "all", self.rae_percent);
        push("rrse_percent", "all", self.rrse_percent);
        push("cost", "all", self.cost);
        push("macro_precision", "all", self.macro_precision);
        push("macro_recall", "all", self.macro_recall);
        push("macro_f1", "all", self.macro_f1);
        for c in &self.per_class {
            push("precision", &c.class_name, c.precision);
            push("recall", &c.class_name, c.recall);
            push("f1", &c.class_name, c.f1);
            push("tp_rate", &c.class_name, c.tp_rate);
            push("tn_rate", &c.class_name, c.tn_rate);
            push("fp_rate", &c.class_name, c.fp_rate);
            push("fn_rate", &c.class_name, c.fn_rate);
        }
        out
    }
}

/// Cross-validation output: the fold-averaged report plus each fold's own.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub mean: EvalReport,
    pub folds: Vec<EvalReport>,
    pub warnings: Vec<String>,
}

fn average_reports(folds: &[EvalReport]) -> EvalReport {
    let n = folds.len() as f64;
    let first = &folds[0];
    let avg = |f: &dyn Fn(&EvalReport) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let avg_opt = |f: &dyn Fn(&EvalReport) -> Option<f64>| {
        mean_defined(&folds.iter().map(f).collect::<Vec<_>>())
    };
    let per_class = (0..first.per_class.len())
        .map(|c| {
            let avg_c = |f: &dyn Fn(&ClassReport) -> f64| {
                folds.iter().map(|r| f(&r.per_class[c])).sum::<f64>() / n
            };
            let avg_c_opt = |f: &dyn Fn(&ClassReport) -> Option<f64>| {
                mean_defined(&folds.iter().map(|r| f(&r.per_class[c])).collect::<Vec<_>>())
            };
            ClassReport {
                class_name: first.per_class[c].class_name.clone(),
                tp: avg_c(&|r| r.tp),
                tn: avg_c(&|r| r.tn),
                fp: avg_c(&|r| r.fp),
                fn_count: avg_c(&|r| r.fn_count),
                tp_rate: avg_c_opt(&|r| r.tp_rate),
                tn_rate: avg_c_opt(&|r| r.tn_rate),
                fp_rate: avg_c_opt(&|r| r.fp_rate),
                fn_rate: avg_c_opt(&|r| r.fn_rate),
                precision: avg_c_opt(&|r| r.precision),
                recall: avg_c_opt(&|r| r.recall),
                f1: avg_c_opt(&|r| r.f1),
            }
        })
        .collect();
    EvalReport {
        class_names: first.class_names.clone(),
        total: avg(&|r| r.total),
        correct: avg(&|r| r.correct),
        incorrect: avg(&|r| r.incorrect),
        accuracy: avg(&|r| r.accuracy),
        per_class,
        macro_precision: avg_opt(&|r| r.macro_precision),
        macro_recall: avg_opt(&|r| r.macro_recall),
        macro_f1: avg_opt(&|r| r.macro_f1),
        mse: avg(&|r| r.mse),
        mae: avg(&|r| r.mae),
        rmse: avg(&|r| r.rmse),
        rae_percent: avg_opt(&|r| r.rae_percent),
        rrse_percent: avg_opt(&|r| r.rrse_percent),
        cost: avg_opt(&|r| r.cost),
    }
}

/// K-fold cross-validation: per fold, train on the other K-1 folds and
/// evaluate on the held-out one; metrics are arithmetic means over folds.
/// Standardization, when the model wants it, is fit on the training folds
/// only. The final test set is never touched here.
pub fn cross_validate(
    x: &DataMatrix,
    y: &[usize],
    class_names: &[&str],
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    phi: f64,
) -> Result<CvOutcome> {
    if y.len() != x.rows {
        return Err(Error::data("cross_validate: label count mismatch"));
    }
    let assignment = kfold_indices(x.rows, k, seed)?;
    let mut warnings = Vec::new();
    let mut folds = Vec::with_capacity(k);

    for fold in 0..k {
        let mut train_idx = Vec::new();
        let mut val_idx = Vec::new();
        for (i, &f) in assignment.iter().enumerate() {
            if f == fold {
                val_idx.push(i);
            } else {
                train_idx.push(i);
            }
        }
        if val_idx.len() < class_names.len() {
            warnings.push(format!(
                "fold {fold}: {} records is fewer than the {} classes; proceeding",
                val_idx.len(),
                class_names.len()
            ));
        }
        let mut train_x = x.select_rows(&train_idx);
        let mut val_x = x.select_rows(&val_idx);
        if spec.standardizes() {
            let stats = fit_scaler(&train_x);
            train_x = apply_scaler(&train_x, &stats);
            val_x = apply_scaler(&val_x, &stats);
        }
        let train_y: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
        let val_y: Vec<usize> = val_idx.iter().map(|&i| y[i]).collect();
        let model = spec.train(&train_x, &train_y, class_names.len())?;
        let predictions: Vec<usize> = (0..val_x.rows)
            .map(|i| model.predict(val_x.row(i)))
            .collect::<Result<Vec<usize>>>()?;
        folds.push(evaluate(&predictions, &val_y, class_names, phi)?);
    }

    Ok(CvOutcome {
        mean: average_reports(&folds),
        folds,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::substream_rng;
    use rand::Rng;

    pub const NAMES_5: [&str; 5] = [
        "Normal",
        "Selective Forwarding",
        "Black hole",
        "Flooding",
        "Gray hole",
    ];

    /// XGBoost confusion matrix over the complete testing set.
    pub fn table_11() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(
            &NAMES_5,
            &[
                vec![25820, 168, 94, 152, 95],
                vec![65, 8716, 53, 42, 34],
                vec![84, 32, 17356, 75, 29],
                vec![65, 48, 62, 13564, 68],
                vec![39, 27, 39, 61, 11562],
            ],
        )
        .unwrap()
    }

    /// XGBoost confusion matrix over the designated attacks.
    pub fn table_13() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(
            &["Normal", "Flooding", "Gray hole"],
            &[
                vec![32672, 104, 127],
                vec![114, 24853, 173],
                vec![106, 152, 20049],
            ],
        )
        .unwrap()
    }

    #[test]
    fn all_correct_predictions_build_a_diagonal_matrix() {
        let cm =
            ConfusionMatrix::from_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], &["a", "b", "c"])
                .unwrap();
        assert_eq!(cm.diagonal(), 4);
        assert_eq!(cm.misclassified(), 0);
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
    }

    #[test]
    fn swapped_predictions_zero_the_diagonal() {
        let cm = ConfusionMatrix::from_predictions(&[0, 1], &[1, 0], &["a", "b"]).unwrap();
        assert_eq!(cm.diagonal(), 0);
        assert_eq!(cm.count(0, 1), 1);
        assert_eq!(cm.count(1, 0), 1);
        assert!(ConfusionMatrix::from_predictions(&[5], &[0], &["a", "b"]).is_err());
    }

    #[test]
    fn designated_attack_table_reproduces_published_totals() {
        let cm = table_13();
        assert_eq!(cm.total(), 78_350);
        assert_eq!(cm.diagonal(), 77_574);
        assert_eq!(cm.misclassified(), 776);
        let acc = accuracy(&cm).unwrap();
        assert!((acc - 0.9901).abs() < 1e-4, "accuracy {acc}");
    }

    #[test]
    fn complete_test_set_table_reproduces_published_totals() {
        let cm = table_11();
        assert_eq!(cm.total(), 78_350);
        assert_eq!(cm.diagonal(), 77_018);
        assert_eq!(cm.misclassified(), 1332);
        let acc = accuracy(&cm).unwrap();
        assert!((acc - 0.983).abs() < 5e-4, "accuracy {acc}");
        // Misclassified fraction matches the published 0.99% on Table 13.
        let frac = table_13().misclassified() as f64 / table_13().total() as f64;
        assert!((frac - 0.0099).abs() < 1e-4);
    }

    #[test]
    fn rate_metrics_hand_values() {
        // Binary: TP=90, FN=10, FP=5, TN=95.
        let cm = ConfusionMatrix::from_counts(
            &["positive", "negative"],
            &[vec![90, 5], vec![10, 95]],
        )
        .unwrap();
        let r = rate_metrics(&cm, 0).unwrap();
        assert_eq!(r.tp_rate, Some(0.90));
        assert_eq!(r.fp_rate, Some(0.05));
        assert_eq!(r.tp_rate.unwrap() + r.fn_rate.unwrap(), 1.0);
        assert_eq!(r.tn_rate.unwrap() + r.fp_rate.unwrap(), 1.0);
    }

    #[test]
    fn perfect_matrix_rates_and_undefined_cases() {
        let cm = ConfusionMatrix::from_counts(&["a", "b"], &[vec![7, 0], vec![0, 3]]).unwrap();
        let r = rate_metrics(&cm, 0).unwrap();
        assert_eq!(r.tp_rate, Some(1.0));
        assert_eq!(r.fp_rate, Some(0.0));

        // Class "c" never appears: its TP+FN is zero, so TP rate is undefined.
        let cm =
            ConfusionMatrix::from_counts(&["a", "c"], &[vec![5, 0], vec![0, 0]]).unwrap();
        let r = rate_metrics(&cm, 1).unwrap();
        assert_eq!(r.tp_rate, None);
        assert_eq!(r.fn_rate, None);
        assert!(r.tn_rate.is_some());
    }

    #[test]
    fn precision_recall_f1_on_published_counts() {
        let cm = table_13();
        let normal = cm.class_index("Normal").unwrap();
        let (precision, recall, f1) = precision_recall_f1(&cm, normal).unwrap();
        // The row sum 32903 is the precision denominator under the
        // rows-are-predictions orientation; the column sum 32892 is recall's.
        assert!((precision.unwrap() - 32672.0 / 32903.0).abs() < 1e-12);
        assert!((recall.unwrap() - 32672.0 / 32892.0).abs() < 1e-12);
        assert!(f1.unwrap() > 0.99);
    }

    #[test]
    fn f1_equals_precision_when_precision_equals_recall() {
        let cm = ConfusionMatrix::from_counts(&["a", "b"], &[vec![8, 2], vec![2, 8]]).unwrap();
        let (p, r, f1) = precision_recall_f1(&cm, 0).unwrap();
        assert_eq!(p, r);
        assert!((f1.unwrap() - p.unwrap()).abs() < 1e-12);

        let perfect =
            ConfusionMatrix::from_counts(&["a", "b"], &[vec![5, 0], vec![0, 5]]).unwrap();
        assert_eq!(
            precision_recall_f1(&perfect, 0).unwrap(),
            (Some(1.0), Some(1.0), Some(1.0))
        );
    }

    #[test]
    fn mse_hand_values_and_scaling() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let base = mse(&[1.0, 0.0, 2.0], &[0.5, 0.5, 1.0]).unwrap();
        let scaled = mse(&[3.0, 0.0, 6.0], &[1.5, 1.5, 3.0]).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-12);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn error_summary_perfect_and_identity_checks() {
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = error_summary(&e, &e).unwrap();
        assert_eq!(s.mae, 0.0);
        assert_eq!(s.rmse, 0.0);
        assert_eq!(s.rae_percent, Some(0.0));
        assert_eq!(s.rrse_percent, Some(0.0));

        let mut rng = substream_rng(3, 400, 0);
        let expected: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let predicted: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let s = error_summary(&expected, &predicted).unwrap();
        let flat_e: Vec<f64> = expected.iter().flatten().copied().collect();
        let flat_p: Vec<f64> = predicted.iter().flatten().copied().collect();
        let m = mse(&flat_e, &flat_p).unwrap();
        assert!((s.rmse * s.rmse - m).abs() < 1e-12);
    }

    #[test]
    fn constant_mean_predictor_scores_exactly_one_hundred_percent_rae() {
        let expected = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let mean = 1.0 / 3.0;
        let predicted = vec![vec![mean; 3]; 3];
        let s = error_summary(&expected, &predicted).unwrap();
        assert_eq!(s.rae_percent, Some(100.0));
        assert_eq!(s.rrse_percent, Some(100.0));

        let constant = vec![vec![0.5; 2]; 4];
        assert_eq!(error_summary(&constant, &constant).unwrap().rae_percent, None);
    }

    #[test]
    fn cost_hand_values_and_monotonicity() {
        let perfect =
            ConfusionMatrix::from_counts(&["Normal", "x"], &[vec![50, 0], vec![0, 50]]).unwrap();
        for phi in [0.0, 1.0, 2.5] {
            assert_eq!(cost(&perfect, phi).unwrap(), Some(0.0));
        }

        // Attack TP rate 0.9, false alarm rate 0.1, phi = 2 costs 0.3.
        let cm = ConfusionMatrix::from_counts(
            &["Normal", "Attack"],
            &[vec![90, 10], vec![10, 90]],
        )
        .unwrap();
        let c = cost(&cm, 2.0).unwrap().unwrap();
        assert!((c - 0.3).abs() < 1e-12);

        let c0 = cost(&cm, 0.0).unwrap().unwrap();
        let c1 = cost(&cm, 1.0).unwrap().unwrap();
        assert!(c0 <= c1 && c1 <= c);
        assert!(cost(&cm, -1.0).is_err());
    }

    #[test]
    fn roc_endpoint_cases() {
        // Perfect separation.
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        let roc = roc_points(&scores, &labels).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));

        // Constant scores: straight diagonal, AUC one half exactly.
        let roc = roc_points(&[0.5; 6], &[true, false, true, false, true, false]).unwrap();
        assert_eq!(roc.auc, 0.5);
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);

        // Reversed perfect scores.
        let roc = roc_points(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]).unwrap();
        assert_eq!(roc.auc, 0.0);

        assert!(roc_points(&[0.3, 0.4], &[true, true]).is_err());
    }

    #[test]
    fn roc_tp_rate_is_nondecreasing_along_fp_rate() {
        let mut rng = substream_rng(8, 401, 0);
        for _ in 0..50 {
            let n = 40;
            let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            let roc = roc_points(&scores, &labels).unwrap();
            for w in roc.points.windows(2) {
                assert!(w[1].0 >= w[0].0);
                assert!(w[1].1 >= w[0].1 - 1e-12);
            }
        }
    }

    #[test]
    fn one_vs_rest_partition_and_permutation_invariance_fuzzed() {
        let mut rng = substream_rng(9, 402, 0);
        for _ in 0..300 {
            let k = rng.random_range(2..6usize);
            let rows: Vec<Vec<u64>> = (0..k)
                .map(|_| (0..k).map(|_| rng.random_range(0..50u64)).collect())
                .collect();
            let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
            let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let Ok(cm) = ConfusionMatrix::from_counts(&name_refs, &rows) else {
                continue;
            };
            if cm.total() == 0 {
                continue;
            }
            for c in 0..k {
                let r = rate_metrics(&cm, c).unwrap();
                assert_eq!(r.tp + r.tn + r.fp + r.fn_count, cm.total());
                if let (Some(tpr), Some(fnr)) = (r.tp_rate, r.fn_rate) {
                    assert!((tpr + fnr - 1.0).abs() < 1e-12);
                }
                if let (Some(tnr), Some(fpr)) = (r.tn_rate, r.fp_rate) {
                    assert!((tnr + fpr - 1.0).abs() < 1e-12);
                }
            }
            // Accuracy is invariant under a simultaneous row/column swap.
            let mut perm: Vec<usize> = (0..k).collect();
            perm.reverse();
            let permuted: Vec<Vec<u64>> = perm
                .iter()
                .map(|&p| perm.iter().map(|&a| rows[p][a]).collect())
                .collect();
            let cm2 = ConfusionMatrix::from_counts(&name_refs, &permuted).unwrap();
            assert!((accuracy(&cm).unwrap() - accuracy(&cm2).unwrap()).abs() < 1e-15);
        }
    }

    fn blobs(n_per: usize, seed: u64) -> (DataMatrix, Vec<usize>) {
        let mut rng = substream_rng(seed, 403, 0);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3usize {
            let center = (c as f64) * 4.0;
            for _ in 0..n_per {
                rows.push(vec![
                    center + rng.random::<f64>() - 0.5,
                    -center + rng.random::<f64>() - 0.5,
                ]);
                labels.push(c);
            }
        }
        (DataMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn majority_baseline_folds_match_the_counting_oracle() {
        let (x, y) = blobs(8, 1);
        let outcome = cross_validate(
            &x,
            &y,
            &["c0", "c1", "c2"],
            &ModelSpec::Majority,
            4,
            7,
            1.0,
        )
        .unwrap();
        let assignment = kfold_indices(x.rows, 4, 7).unwrap();
        for (fold, report) in outcome.folds.iter().enumerate() {
            // The baseline predicts the training majority; its fold accuracy
            // must equal that class's share of the fold.
            let train_labels: Vec<usize> = (0..x.rows)
                .filter(|&i| assignment[i] != fold)
                .map(|i| y[i])
                .collect();
            let mut counts = [0usize; 3];
            for &c in &train_labels {
                counts[c] += 1;
            }
            let best = counts.iter().max().unwrap();
            let majority = counts.iter().position(|c| c == best).unwrap();
            let val_labels: Vec<usize> = (0..x.rows)
                .filter(|&i| assignment[i] == fold)
                .map(|i| y[i])
                .collect();
            let share = val_labels.iter().filter(|&&c| c == majority).count() as f64
                / val_labels.len() as f64;
            assert!((report.accuracy - share).abs() < 1e-12);
        }
    }

    #[test]
    fn leave_one_out_runs_n_folds_and_averages_exactly() {
        let (x, y) = blobs(2, 2);
        let outcome = cross_validate(
            &x,
            &y,
            &["c0", "c1", "c2"],
            &ModelSpec::Majority,
            6,
            1,
            1.0,
        )
        .unwrap();
        assert_eq!(outcome.folds.len(), 6);
        assert!(!outcome.warnings.is_empty(), "1-record folds warn");
        let mean_acc: f64 =
            outcome.folds.iter().map(|f| f.accuracy).sum::<f64>() / outcome.folds.len() as f64;
        assert!((outcome.mean.accuracy - mean_acc).abs() < 1e-12);
    }

    #[test]
    fn cross_validation_learns_separable_blobs() {
        let (x, y) = blobs(12, 3);
        let spec = ModelSpec::Tree(crate::classifiers::TreeParams::default());
        let outcome = cross_validate(&x, &y, &["c0", "c1", "c2"], &spec, 5, 11, 1.0).unwrap();
        assert!(
            outcome.mean.accuracy > 0.9,
            "mean accuracy {}",
            outcome.mean.accuracy
        );
        assert!(outcome.warnings.is_empty());
    }

    #[test]
    fn report_renderings_include_the_key_metrics() {
        let preds = [0usize, 1, 1, 0, 1];
        let actuals = [0usize, 1, 0, 0, 1];
        let report = evaluate(&preds, &actuals, &["Normal", "Flooding"], 1.0).unwrap();
        let text = report.to_table_text();
        assert!(text.contains("Normal"));
        assert!(text.contains("Flooding"));
        assert!(text.contains("Dataset classified correctly"));
        let csv = report.to_metric_csv();
        assert!(csv.starts_with("metric,class,value\n"));
        assert!(csv.contains("accuracy,all,0.8"));
        assert!(csv.contains("recall,Flooding,"));
    }
}
