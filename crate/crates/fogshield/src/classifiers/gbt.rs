//! Gradient-boosted regression trees with regularized leaf weights, one
//! boosted ensemble per class on one-hot squared-error targets.
//!
//! Split search is exact greedy over the midpoints of consecutive distinct
//! values. Feature orders are sorted once per fit and every boosting round
//! reuses them, so a tree costs one linear scan per feature per depth level.

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights; a leaf holding residual sum G over n
    /// rows gets weight G / (n + lambda).
    pub lambda: f64,
    /// Per-leaf penalty; a split must improve the objective by more than
    /// this to be kept.
    pub gamma: f64,
    pub max_depth: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            max_depth: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
    Leaf {
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub root: RegNode,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                RegNode::Leaf { weight } => return *weight,
                RegNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaves(&self) -> Vec<f64> {
        fn walk(node: &RegNode, out: &mut Vec<f64>) {
            match node {
                RegNode::Leaf { weight } => out.push(*weight),
                RegNode::Internal { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    /// One tree sequence per class.
    pub class_trees: Vec<Vec<RegressionTree>>,
    /// Class priors, the round-zero scores.
    pub base_scores: Vec<f64>,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub n_features: usize,
    pub n_classes: usize,
}

impl GbtModel {
    pub fn leaf_count(&self) -> usize {
        self.class_trees
            .iter()
            .flatten()
            .map(|t| t.leaves().len())
            .sum()
    }
}

/// Objective value a leaf contributes once its weight is fixed at
/// G/(n+lambda); used as the split score. Larger is better.
fn leaf_score(sum: f64, n: f64, lambda: f64) -> f64 {
    sum * sum * (n + 1.5 * lambda) / ((n + lambda) * (n + lambda))
}

/// Row indices sorted by each feature's value (ties by row), shared by
/// every tree of a fit.
fn presort_features(x: &DataMatrix) -> Vec<Vec<u32>> {
    (0..x.cols)
        .map(|f| {
            let mut order: Vec<u32> = (0..x.rows as u32).collect();
            order.sort_by(|&a, &b| {
                x.get(a as usize, f)
                    .partial_cmp(&x.get(b as usize, f))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order
        })
        .collect()
}

const NO_CHILD: usize = usize::MAX;

struct BuildNode {
    sum: f64,
    count: usize,
    feature: usize,
    threshold: f64,
    left: usize,
    right: usize,
}

impl BuildNode {
    fn fresh() -> BuildNode {
        BuildNode {
            sum: 0.0,
            count: 0,
            feature: 0,
            threshold: 0.0,
            left: NO_CHILD,
            right: NO_CHILD,
        }
    }
}

/// Depth-wise exact greedy induction over presorted feature orders. Each
/// level is one linear pass per feature; ties keep the first maximum, which
/// means the lowest feature index and then the lowest threshold.
fn fit_regression_tree(
    x: &DataMatrix,
    presorted: &[Vec<u32>],
    residuals: &[f64],
    params: &GbtParams,
) -> RegressionTree {
    let n = x.rows;
    let mut node_of: Vec<u32> = vec![0; n];
    let mut arena: Vec<BuildNode> = vec![BuildNode::fresh()];
    arena[0].sum = residuals.iter().sum();
    arena[0].count = n;
    let mut frontier: Vec<usize> = vec![0];

    for _depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot_of: Vec<u32> = vec![u32::MAX; arena.len()];
        for (slot, &nid) in frontier.iter().enumerate() {
            slot_of[nid] = slot as u32;
        }
        // Best (gain, feature, threshold) per frontier node.
        let mut best: Vec<(f64, usize, f64)> =
            vec![(f64::NEG_INFINITY, 0, 0.0); frontier.len()];
        let parent_scores: Vec<f64> = frontier
            .iter()
            .map(|&nid| leaf_score(arena[nid].sum, arena[nid].count as f64, params.lambda))
            .collect();

        let mut left_sum = vec![0.0f64; frontier.len()];
        let mut left_cnt = vec![0usize; frontier.len()];
        let mut prev_val = vec![0.0f64; frontier.len()];
        for (f, order) in presorted.iter().enumerate() {
            left_sum.fill(0.0);
            left_cnt.fill(0);
            for &row in order {
                let row = row as usize;
                let slot = slot_of[node_of[row] as usize];
                if slot == u32::MAX {
                    continue;
                }
                let slot = slot as usize;
                let v = x.get(row, f);
                if left_cnt[slot] > 0 && v > prev_val[slot] {
                    let node = &arena[frontier[slot]];
                    let right_sum = node.sum - left_sum[slot];
                    let right_cnt = node.count - left_cnt[slot];
                    let gain = leaf_score(left_sum[slot], left_cnt[slot] as f64, params.lambda)
                        + leaf_score(right_sum, right_cnt as f64, params.lambda)
                        - parent_scores[slot];
                    if gain > best[slot].0 {
                        best[slot] = (gain, f, (prev_val[slot] + v) / 2.0);
                    }
                }
                left_sum[slot] += residuals[row];
                left_cnt[slot] += 1;
                prev_val[slot] = v;
            }
        }

        let mut next_frontier = Vec::new();
        for (slot, &nid) in frontier.iter().enumerate() {
            let (gain, feature, threshold) = best[slot];
            if gain.is_finite() && gain > params.gamma {
                let left = arena.len();
                arena.push(BuildNode::fresh());
                arena.push(BuildNode::fresh());
                arena[nid].feature = feature;
                arena[nid].threshold = threshold;
                arena[nid].left = left;
                arena[nid].right = left + 1;
                next_frontier.push(left);
                next_frontier.push(left + 1);
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        for row in 0..n {
            let nid = node_of[row] as usize;
            if arena[nid].left == NO_CHILD {
                continue;
            }
            let child = if x.get(row, arena[nid].feature) < arena[nid].threshold {
                arena[nid].left
            } else {
                arena[nid].right
            };
            node_of[row] = child as u32;
            arena[child].sum += residuals[row];
            arena[child].count += 1;
        }
        frontier = next_frontier;
    }

    fn materialize(arena: &[BuildNode], nid: usize, lambda: f64) -> RegNode {
        let node = &arena[nid];
        if node.left == NO_CHILD {
            RegNode::Leaf {
                weight: node.sum / (node.count as f64 + lambda),
            }
        } else {
            RegNode::Internal {
                feature: node.feature,
                threshold: node.threshold,
                left: Box::new(materialize(arena, node.left, lambda)),
                right: Box::new(materialize(arena, node.right, lambda)),
            }
        }
    }
    RegressionTree {
        root: materialize(&arena, 0, params.lambda),
    }
}

/// Boosted training: per class, targets are the one-hot labels, the
/// starting score is the class prior, and each round fits a regression
/// tree to the current residuals, added with the learning rate.
pub fn train_gbt(
    x: &DataMatrix,
    y: &[usize],
    n_classes: usize,
    params: &GbtParams,
) -> Result<GbtModel> {
    if x.rows == 0 || y.len() != x.rows {
        return Err(Error::data("train_gbt: empty or mismatched data"));
    }
    if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::data("train_gbt: label out of range"));
    }

    let n = x.rows;
    let presorted = presort_features(x);
    let mut class_trees = Vec::with_capacity(n_classes);
    let mut base_scores = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let targets: Vec<f64> = y.iter().map(|&l| f64::from(u8::from(l == c))).collect();
        let base = targets.iter().sum::<f64>() / n as f64;
        let mut preds = vec![base; n];
        let mut trees = Vec::with_capacity(params.n_rounds);
        for round in 0..params.n_rounds {
            let residuals: Vec<f64> = targets.iter().zip(&preds).map(|(t, p)| t - p).collect();
            if residuals.iter().any(|r| !r.is_finite()) {
                return Err(Error::numeric(format!(
                    "train_gbt: non-finite residuals at round {round} for class {c}"
                )));
            }
            let tree = fit_regression_tree(x, &presorted, &residuals, params);
            for (i, p) in preds.iter_mut().enumerate() {
                *p += params.learning_rate * tree.predict(x.row(i));
            }
            trees.push(tree);
        }
        class_trees.push(trees);
        base_scores.push(base);
    }

    Ok(GbtModel {
        class_trees,
        base_scores,
        learning_rate: params.learning_rate,
        lambda: params.lambda,
        gamma: params.gamma,
        n_features: x.cols,
        n_classes,
    })
}

/// Per-class boosted scores: base plus learning rate times the tree sums.
pub fn gbt_scores(model: &GbtModel, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != model.n_features {
        return Err(Error::data("gbt_scores: feature arity mismatch"));
    }
    Ok(model
        .class_trees
        .iter()
        .zip(&model.base_scores)
        .map(|(trees, base)| {
            base + model.learning_rate * trees.iter().map(|t| t.predict(row)).sum::<f64>()
        })
        .collect())
}

/// Argmax of the per-class scores, ties to the lower class index.
pub fn gbt_predict(model: &GbtModel, row: &[f64]) -> Result<usize> {
    let scores = gbt_scores(model, row)?;
    Ok(super::logistic::argmax(&scores))
}

/// Training objective at the given regularization: the squared error over
/// all classes plus `0.5 * lambda * sum(weight^2)` and `gamma * leaf count`
/// over every tree.
pub fn gbt_objective(
    model: &GbtModel,
    x: &DataMatrix,
    y: &[usize],
    lambda: f64,
    gamma: f64,
) -> Result<f64> {
    if y.len() != x.rows {
        return Err(Error::data("gbt_objective: label count mismatch"));
    }
    let mut total = 0.0;
    for i in 0..x.rows {
        let scores = gbt_scores(model, x.row(i))?;
        for (c, s) in scores.iter().enumerate() {
            let t = f64::from(u8::from(y[i] == c));
            total += (t - s) * (t - s);
        }
    }
    for trees in &model.class_trees {
        for tree in trees {
            let leaves = tree.leaves();
            total += 0.5 * lambda * leaves.iter().map(|w| w * w).sum::<f64>();
            total += gamma * leaves.len() as f64;
        }
    }
    Ok(total)
}
