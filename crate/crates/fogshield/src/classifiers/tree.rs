//! Entropy-driven decision tree with greedy recursive induction.

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

/// Above this many rows in a node, split search caps the candidate
/// thresholds per feature at 64 quantile cut points.
const QUANTILE_ROW_LIMIT: usize = 10_000;
const QUANTILE_CANDIDATES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_gain: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_samples_split: 2,
            min_gain: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class: usize,
        /// Class distribution at the leaf, summing to one.
        distribution: Vec<f64>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    pub root: TreeNode,
    pub n_features: usize,
    pub n_classes: usize,
    pub params: TreeParams,
}

/// Shannon entropy in bits of a class-count vector, with 0 log 0 = 0.
pub fn entropy(class_counts: &[u64]) -> Result<f64> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::numeric("entropy: all counts are zero"));
    }
    Ok(entropy_of(class_counts, total))
}

fn entropy_of(class_counts: &[u64], total: u64) -> f64 {
    let total = total as f64;
    class_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Candidate split thresholds over a sorted value slice: midpoints of
/// consecutive distinct values, or 64 quantile cut points on large nodes.
fn split_candidates(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let mut cands = Vec::new();
    if n > QUANTILE_ROW_LIMIT {
        for k in 1..=QUANTILE_CANDIDATES {
            let pos = (k * n / (QUANTILE_CANDIDATES + 1)).min(n - 1);
            let v = sorted[pos];
            if v > sorted[0] && cands.last() != Some(&v) {
                cands.push(v);
            }
        }
    } else {
        for i in 1..n {
            if sorted[i] > sorted[i - 1] {
                let mid = (sorted[i - 1] + sorted[i]) / 2.0;
                if mid > sorted[i - 1] && cands.last() != Some(&mid) {
                    cands.push(mid);
                }
            }
        }
    }
    cands
}

struct Builder<'a> {
    x: &'a DataMatrix,
    y: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
}

impl Builder<'_> {
    fn counts(&self, indices: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &i in indices {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn leaf(&self, counts: &[u64]) -> TreeNode {
        let total: u64 = counts.iter().sum();
        let class = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        // max_by keeps the last maximum; rescan for the lowest class index.
        let best = counts[class];
        let class = counts.iter().position(|&c| c == best).unwrap_or(class);
        TreeNode::Leaf {
            class,
            distribution: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        }
    }

    fn best_split(&self, indices: &[usize], counts: &[u64]) -> Option<(usize, f64, f64)> {
        let n = indices.len();
        let parent_entropy = entropy_of(counts, n as u64);
        let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, gain)
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in 0..self.x.cols {
            sorted.clear();
            sorted.extend(indices.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let values: Vec<f64> = sorted.iter().map(|v| v.0).collect();
            let candidates = split_candidates(&values);
            if candidates.is_empty() {
                continue;
            }

            let mut left = vec![0u64; self.n_classes];
            let mut pos = 0usize;
            for &threshold in &candidates {
                while pos < n && sorted[pos].0 < threshold {
                    left[sorted[pos].1] += 1;
                    pos += 1;
                }
                let nl = pos as u64;
                let nr = n as u64 - nl;
                if nl == 0 || nr == 0 {
                    continue;
                }
                let right: Vec<u64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let children = (nl as f64 * entropy_of(&left, nl)
                    + nr as f64 * entropy_of(&right, nr))
                    / n as f64;
                let gain = parent_entropy - children;
                if best.as_ref().is_none_or(|b| gain > b.2) {
                    best = Some((feature, threshold, gain));
                }
            }
        }
        best
    }

    fn build(&self, indices: &[usize], depth: usize) -> TreeNode {
        let counts = self.counts(indices);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure
            || depth >= self.params.max_depth
            || indices.len() < self.params.min_samples_split
        {
            return self.leaf(&counts);
        }
        let Some((feature, threshold, gain)) = self.best_split(indices, &counts) else {
            return self.leaf(&counts);
        };
        if gain < self.params.min_gain {
            return self.leaf(&counts);
        }
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x.get(i, feature) < threshold);
        TreeNode::Internal {
            feature,
            threshold,
            left: Box::new(self.build(&left_idx, depth + 1)),
            right: Box::new(self.build(&right_idx, depth + 1)),
        }
    }
}

/// Greedy induction: every node takes the feature/threshold pair with the
/// highest information gain; first encountered wins ties (lower feature
/// index, then lower threshold).
pub fn train_decision_tree(
    x: &DataMatrix,
    y: &[usize],
    n_classes: usize,
    params: &TreeParams,
) -> Result<DecisionTreeModel> {
    if x.rows == 0 || y.len() != x.rows {
        return Err(Error::data("train_decision_tree: empty or mismatched data"));
    }
    if x.cols == 0 {
        return Err(Error::data("train_decision_tree: no features"));
    }
    if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::data("train_decision_tree: label out of range"));
    }
    let builder = Builder {
        x,
        y,
        n_classes,
        params,
    };
    let indices: Vec<usize> = (0..x.rows).collect();
    Ok(DecisionTreeModel {
        root: builder.build(&indices, 0),
        n_features: x.cols,
        n_classes,
        params: params.clone(),
    })
}

/// Root-to-leaf descent; values below the threshold go left, values at or
/// above it go right.
pub fn tree_predict(model: &DecisionTreeModel, row: &[f64]) -> Result<usize> {
    if row.len() != model.n_features {
        return Err(Error::data(format!(
            "tree_predict: expected {} features, got {}",
            model.n_features,
            row.len()
        )));
    }
    let mut node = &model.root;
    loop {
        match node {
            TreeNode::Leaf { class, .. } => return Ok(*class),
            TreeNode::Internal {
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

/// Leaf class distribution for a row; used as per-class scores.
pub fn tree_scores(model: &DecisionTreeModel, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != model.n_features {
        return Err(Error::data("tree_scores: feature arity mismatch"));
    }
    let mut node = &model.root;
    loop {
        match node {
            TreeNode::Leaf { distribution, .. } => return Ok(distribution.clone()),
            TreeNode::Internal {
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
