//! From-scratch classifier implementations with shared multiclass handling:
//! a native multiclass entropy tree and one-vs-rest gradient-boosted trees,
//! logistic regression, and a linear SVM.
//!
//! Fitted models serialize to a versioned line-oriented text format
//! (node-per-line pre-order for trees, weight lists for linear models) so a
//! model can be trained once and evaluated later.

pub mod gbt;
pub mod logistic;
pub mod svm;
pub mod tree;

use std::path::Path;

pub use gbt::{gbt_objective, gbt_predict, gbt_scores, train_gbt, GbtModel, GbtParams, RegNode, RegressionTree};
pub use logistic::{
    binary_logistic_gradient, binary_logistic_loss, logistic_predict, logistic_scores, sigmoid,
    train_logistic, LogisticModel, LogisticParams,
};
pub use svm::{svm_objective, svm_predict, svm_scores, train_svm, SvmModel, SvmParams};
pub use tree::{
    entropy, train_decision_tree, tree_predict, tree_scores, DecisionTreeModel, TreeNode,
    TreeParams,
};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "fogshield-model v1";

/// Which model to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Tree(TreeParams),
    Logistic(LogisticParams),
    Gbt(GbtParams),
    Svm(SvmParams),
    /// Constant baseline predicting the training majority class.
    Majority,
}

impl ModelSpec {
    /// Whether this model wants z-scored features.
    pub fn standardizes(&self) -> bool {
        matches!(self, ModelSpec::Logistic(_) | ModelSpec::Svm(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Logistic(_) => "logistic",
            ModelSpec::Gbt(_) => "gbt",
            ModelSpec::Svm(_) => "svm",
            ModelSpec::Majority => "majority",
        }
    }

    pub fn train(&self, x: &DataMatrix, y: &[usize], n_classes: usize) -> Result<Model> {
        match self {
            ModelSpec::Tree(p) => Ok(Model::Tree(train_decision_tree(x, y, n_classes, p)?)),
            ModelSpec::Logistic(p) => Ok(Model::Logistic(train_logistic(x, y, n_classes, p)?)),
            ModelSpec::Gbt(p) => Ok(Model::Gbt(train_gbt(x, y, n_classes, p)?)),
            ModelSpec::Svm(p) => Ok(Model::Svm(train_svm(x, y, n_classes, p)?)),
            ModelSpec::Majority => {
                if y.is_empty() {
                    return Err(Error::data("majority baseline: empty labels"));
                }
                let mut counts = vec![0usize; n_classes];
                for &c in y {
                    counts[c] += 1;
                }
                let best = *counts.iter().max().unwrap();
                let class = counts.iter().position(|&c| c == best).unwrap();
                Ok(Model::Majority { class, n_classes })
            }
        }
    }
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(DecisionTreeModel),
    Logistic(LogisticModel),
    Gbt(GbtModel),
    Svm(SvmModel),
    Majority { class: usize, n_classes: usize },
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Tree(_) => "tree",
            Model::Logistic(_) => "logistic",
            Model::Gbt(_) => "gbt",
            Model::Svm(_) => "svm",
            Model::Majority { .. } => "majority",
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Model::Tree(m) => m.n_classes,
            Model::Logistic(m) => m.n_classes,
            Model::Gbt(m) => m.n_classes,
            Model::Svm(m) => m.n_classes,
            Model::Majority { n_classes, .. } => *n_classes,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        match self {
            Model::Tree(m) => tree_predict(m, row),
            Model::Logistic(m) => logistic_predict(m, row),
            Model::Gbt(m) => gbt_predict(m, row),
            Model::Svm(m) => svm_predict(m, row),
            Model::Majority { class, .. } => Ok(*class),
        }
    }

    /// Per-class scores for ROC sweeps; higher means more likely.
    pub fn class_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Tree(m) => tree_scores(m, row),
            Model::Logistic(m) => logistic_scores(m, row),
            Model::Gbt(m) => gbt_scores(m, row),
            Model::Svm(m) => svm_scores(m, row),
            Model::Majority { class, n_classes } => {
                let mut scores = vec![0.0; *n_classes];
                scores[*class] = 1.0;
                Ok(scores)
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot open model {}: {e}", path.display())))?;
        Model::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Model::Tree(m) => {
                out.push_str(&format!("{FORMAT_TAG} tree\n"));
                out.push_str(&format!("features {} classes {}\n", m.n_features, m.n_classes));
                out.push_str(&format!(
                    "params max_depth {} min_samples_split {} min_gain {:.17e}\n",
                    m.params.max_depth, m.params.min_samples_split, m.params.min_gain
                ));
                write_tree_node(&mut out, &m.root);
            }
            Model::Logistic(m) => {
                out.push_str(&format!("{FORMAT_TAG} logistic\n"));
                out.push_str(&format!("features {} classes {}\n", m.n_features, m.n_classes));
                write_linear(&mut out, &m.weights, &m.biases);
            }
            Model::Svm(m) => {
                out.push_str(&format!("{FORMAT_TAG} svm\n"));
                out.push_str(&format!("features {} classes {}\n", m.n_features, m.n_classes));
                write_linear(&mut out, &m.weights, &m.biases);
            }
            Model::Gbt(m) => {
                out.push_str(&format!("{FORMAT_TAG} gbt\n"));
                out.push_str(&format!("features {} classes {}\n", m.n_features, m.n_classes));
                out.push_str(&format!(
                    "params learning_rate {:.17e} lambda {:.17e} gamma {:.17e}\n",
                    m.learning_rate, m.lambda, m.gamma
                ));
                for (c, base) in m.base_scores.iter().enumerate() {
                    out.push_str(&format!("base {c} {base:.17e}\n"));
                }
                for (c, trees) in m.class_trees.iter().enumerate() {
                    for tree in trees {
                        out.push_str(&format!("tree {c}\n"));
                        write_reg_node(&mut out, &tree.root);
                        out.push_str("end-tree\n");
                    }
                }
            }
            Model::Majority { class, n_classes } => {
                out.push_str(&format!("{FORMAT_TAG} majority\n"));
                out.push_str(&format!("features 0 classes {n_classes}\n"));
                out.push_str(&format!("class {class}\n"));
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Model> {
        let mut lines = text.lines().peekable();
        let header = lines
            .next()
            .ok_or_else(|| Error::data("model file is empty"))?;
        let kind = header
            .strip_prefix(FORMAT_TAG)
            .map(str::trim)
            .ok_or_else(|| Error::data(format!("unsupported model header '{header}'")))?;
        let dims = lines
            .next()
            .ok_or_else(|| Error::data("model file truncated before dimensions"))?;
        let (n_features, n_classes) = parse_dims(dims)?;

        let model = match kind {
            "tree" => {
                let params_line = lines
                    .next()
                    .ok_or_else(|| Error::data("tree model missing params line"))?;
                let params = parse_tree_params(params_line)?;
                let root = parse_tree_node(&mut lines)?;
                Model::Tree(DecisionTreeModel {
                    root,
                    n_features,
                    n_classes,
                    params,
                })
            }
            "logistic" => {
                let (weights, biases) = parse_linear(&mut lines, n_features, n_classes)?;
                Model::Logistic(LogisticModel {
                    weights,
                    biases,
                    n_features,
                    n_classes,
                })
            }
            "svm" => {
                let (weights, biases) = parse_linear(&mut lines, n_features, n_classes)?;
                Model::Svm(SvmModel {
                    weights,
                    biases,
                    n_features,
                    n_classes,
                })
            }
            "gbt" => parse_gbt(&mut lines, n_features, n_classes)?,
            "majority" => {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::data("majority model missing class line"))?;
                let class = line
                    .strip_prefix("class ")
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::data(format!("bad majority line '{line}'")))?;
                Model::Majority { class, n_classes }
            }
            other => return Err(Error::data(format!("unknown model kind '{other}'"))),
        };

        match lines.next() {
            Some("end") => Ok(model),
            other => Err(Error::data(format!(
                "model file missing end marker, found {other:?}"
            ))),
        }
    }
}

fn write_tree_node(out: &mut String, node: &TreeNode) {
    match node {
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("node I {feature} {threshold:.17e}\n"));
            write_tree_node(out, left);
            write_tree_node(out, right);
        }
        TreeNode::Leaf {
            class,
            distribution,
        } => {
            out.push_str(&format!("node L {class}"));
            for p in distribution {
                out.push_str(&format!(" {p:.17e}"));
            }
            out.push('\n');
        }
    }
}

fn parse_tree_node<'a, I: Iterator<Item = &'a str>>(
    lines: &mut std::iter::Peekable<I>,
) -> Result<TreeNode> {
    let line = lines
        .next()
        .ok_or_else(|| Error::data("tree model truncated"))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some("node"), Some("I")) => {
            let feature = parse_token(parts.next(), "feature")?;
            let threshold = parse_token(parts.next(), "threshold")?;
            let left = Box::new(parse_tree_node(lines)?);
            let right = Box::new(parse_tree_node(lines)?);
            Ok(TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            })
        }
        (Some("node"), Some("L")) => {
            let class = parse_token(parts.next(), "class")?;
            let distribution = parts
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::data(format!("bad leaf probability '{t}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(TreeNode::Leaf {
                class,
                distribution,
            })
        }
        _ => Err(Error::data(format!("bad tree node line '{line}'"))),
    }
}

fn write_reg_node(out: &mut String, node: &RegNode) {
    match node {
        RegNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("node I {feature} {threshold:.17e}\n"));
            write_reg_node(out, left);
            write_reg_node(out, right);
        }
        RegNode::Leaf { weight } => {
            out.push_str(&format!("node L {weight:.17e}\n"));
        }
    }
}

fn parse_reg_node<'a, I: Iterator<Item = &'a str>>(
    lines: &mut std::iter::Peekable<I>,
) -> Result<RegNode> {
    let line = lines
        .next()
        .ok_or_else(|| Error::data("gbt model truncated"))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some("node"), Some("I")) => {
            let feature = parse_token(parts.next(), "feature")?;
            let threshold = parse_token(parts.next(), "threshold")?;
            let left = Box::new(parse_reg_node(lines)?);
            let right = Box::new(parse_reg_node(lines)?);
            Ok(RegNode::Internal {
                feature,
                threshold,
                left,
                right,
            })
        }
        (Some("node"), Some("L")) => Ok(RegNode::Leaf {
            weight: parse_token(parts.next(), "weight")?,
        }),
        _ => Err(Error::data(format!("bad regression node line '{line}'"))),
    }
}

fn write_linear(out: &mut String, weights: &[Vec<f64>], biases: &[f64]) {
    for (c, (w, b)) in weights.iter().zip(biases).enumerate() {
        out.push_str(&format!("class {c} {b:.17e}"));
        for v in w {
            out.push_str(&format!(" {v:.17e}"));
        }
        out.push('\n');
    }
}

fn parse_linear<'a, I: Iterator<Item = &'a str>>(
    lines: &mut std::iter::Peekable<I>,
    n_features: usize,
    n_classes: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut weights = Vec::with_capacity(n_classes);
    let mut biases = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let line = lines
            .next()
            .ok_or_else(|| Error::data(format!("missing weights for class {c}")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some("class") {
            return Err(Error::data(format!("bad weight line '{line}'")));
        }
        let _idx: usize = parse_token(parts.next(), "class index")?;
        let bias: f64 = parse_token(parts.next(), "bias")?;
        let w = parts
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::data(format!("bad weight '{t}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if w.len() != n_features {
            return Err(Error::data(format!(
                "class {c}: expected {n_features} weights, found {}",
                w.len()
            )));
        }
        weights.push(w);
        biases.push(bias);
    }
    Ok((weights, biases))
}

fn parse_gbt<'a, I: Iterator<Item = &'a str>>(
    lines: &mut std::iter::Peekable<I>,
    n_features: usize,
    n_classes: usize,
) -> Result<Model> {
    let params_line = lines
        .next()
        .ok_or_else(|| Error::data("gbt model missing params line"))?;
    let mut parts = params_line.split_whitespace();
    if parts.next() != Some("params") {
        return Err(Error::data(format!("bad gbt params line '{params_line}'")));
    }
    let mut learning_rate = None;
    let mut lambda = None;
    let mut gamma = None;
    while let (Some(key), Some(value)) = (parts.next(), parts.next()) {
        let v: f64 = value
            .parse()
            .map_err(|_| Error::data(format!("bad gbt param value '{value}'")))?;
        match key {
            "learning_rate" => learning_rate = Some(v),
            "lambda" => lambda = Some(v),
            "gamma" => gamma = Some(v),
            other => return Err(Error::data(format!("unknown gbt param '{other}'"))),
        }
    }
    let (Some(learning_rate), Some(lambda), Some(gamma)) = (learning_rate, lambda, gamma) else {
        return Err(Error::data("gbt params line incomplete"));
    };

    let mut base_scores = vec![0.0; n_classes];
    for c in 0..n_classes {
        let line = lines
            .next()
            .ok_or_else(|| Error::data(format!("missing base score for class {c}")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some("base") {
            return Err(Error::data(format!("bad base line '{line}'")));
        }
        let idx: usize = parse_token(parts.next(), "base class")?;
        base_scores[idx] = parse_token(parts.next(), "base score")?;
    }

    let mut class_trees: Vec<Vec<RegressionTree>> = vec![Vec::new(); n_classes];
    while matches!(lines.peek(), Some(l) if l.starts_with("tree ")) {
        let line = lines.next().unwrap();
        let class: usize = parse_token(line.split_whitespace().nth(1), "tree class")?;
        if class >= n_classes {
            return Err(Error::data(format!("tree class {class} out of range")));
        }
        let root = parse_reg_node(lines)?;
        match lines.next() {
            Some("end-tree") => {}
            other => {
                return Err(Error::data(format!(
                    "expected end-tree, found {other:?}"
                )))
            }
        }
        class_trees[class].push(RegressionTree { root });
    }

    Ok(Model::Gbt(GbtModel {
        class_trees,
        base_scores,
        learning_rate,
        lambda,
        gamma,
        n_features,
        n_classes,
    }))
}

fn parse_dims(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("features") {
        return Err(Error::data(format!("bad dimensions line '{line}'")));
    }
    let features = parse_token(parts.next(), "feature count")?;
    if parts.next() != Some("classes") {
        return Err(Error::data(format!("bad dimensions line '{line}'")));
    }
    let classes = parse_token(parts.next(), "class count")?;
    Ok((features, classes))
}

fn parse_tree_params(line: &str) -> Result<TreeParams> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("params") {
        return Err(Error::data(format!("bad tree params line '{line}'")));
    }
    let mut params = TreeParams::default();
    while let (Some(key), Some(value)) = (parts.next(), parts.next()) {
        match key {
            "max_depth" => params.max_depth = parse_token(Some(value), "max_depth")?,
            "min_samples_split" => {
                params.min_samples_split = parse_token(Some(value), "min_samples_split")?
            }
            "min_gain" => params.min_gain = parse_token(Some(value), "min_gain")?,
            other => return Err(Error::data(format!("unknown tree param '{other}'"))),
        }
    }
    Ok(params)
}

fn parse_token<T: std::str::FromStr>(token: Option<&str>, what: &str) -> Result<T> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::data(format!("missing or invalid {what}")))
}
