//! PCA and SVD dimensionality analysis and the multi-feature union selector.
//!
//! Both decompositions are computed with Jacobi rotations: a cyclic
//! two-sided sweep for the covariance eigenproblem and a one-sided Hestenes
//! sweep for the SVD. Feature rankings score the original features by the
//! weighted absolute loadings of the components, which is what makes a set
//! union over "top-10 PCA" and "top-10 SVD" well defined.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Fitted PCA: per-feature mean, orthonormal components in eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Component columns, each of length m, ordered by descending eigenvalue.
    pub components: Vec<Vec<f64>>,
    /// Descending, nonnegative.
    pub eigenvalues: Vec<f64>,
}

/// Thin SVD factors: `b = left * diag(singular_values) * right^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// n x k with orthonormal columns.
    pub left: DataMatrix,
    /// Descending, nonnegative, length k = min(n, m).
    pub singular_values: Vec<f64>,
    /// m x k with orthonormal columns.
    pub right: DataMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingMethod {
    Pca,
    Svd,
}

/// Original features ordered by decreasing score.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub method: RankingMethod,
    /// Permutation of 0..m, best feature first.
    pub order: Vec<usize>,
    /// Scores aligned with `order`, nonincreasing.
    pub scores: Vec<f64>,
}

fn check_finite(x: &DataMatrix, what: &str) -> Result<()> {
    if x.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!("{what}: non-finite entries")));
    }
    Ok(())
}

/// Fits PCA: per-feature mean, covariance with 1/n normalization, and its
/// eigendecomposition sorted by descending eigenvalue.
pub fn pca_fit(x: &DataMatrix) -> Result<PcaModel> {
    if x.rows < 2 {
        return Err(Error::numeric("pca_fit: need at least 2 rows"));
    }
    check_finite(x, "pca_fit")?;
    let (n, m) = (x.rows, x.cols);
    let mean: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();

    let mut cov = vec![0.0f64; m * m];
    for i in 0..n {
        let row = x.row(i);
        for a in 0..m {
            let da = row[a] - mean[a];
            for b in a..m {
                cov[a * m + b] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..m {
        for b in a..m {
            let v = cov[a * m + b] / n as f64;
            cov[a * m + b] = v;
            cov[b * m + a] = v;
        }
    }

    let (mut eigenvalues, mut components) = jacobi_eigen_symmetric(&cov, m);
    // Covariance is positive semidefinite; clip the numeric dust.
    for ev in &mut eigenvalues {
        if *ev < 0.0 {
            *ev = 0.0;
        }
    }
    sort_descending(&mut eigenvalues, &mut components);
    for c in &mut components {
        fix_sign(c);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
    })
}

/// Cumulative variance contribution of the first `y` components.
pub fn variance_contribution(model: &PcaModel, y: usize) -> Result<f64> {
    let m = model.eigenvalues.len();
    if y == 0 || y > m {
        return Err(Error::numeric(format!(
            "variance_contribution: Y={y} outside 1..={m}"
        )));
    }
    let total: f64 = model.eigenvalues.iter().sum();
    if total == 0.0 {
        // Constant data carries no variance; any prefix explains all of it.
        return Ok(1.0);
    }
    Ok(model.eigenvalues.iter().take(y).sum::<f64>() / total)
}

/// Projects rows onto the first `y` components after centering.
pub fn pca_project(model: &PcaModel, x: &DataMatrix, y: usize) -> Result<DataMatrix> {
    let m = model.mean.len();
    if x.cols != m {
        return Err(Error::numeric("pca_project: column count mismatch"));
    }
    if y == 0 || y > model.components.len() {
        return Err(Error::numeric("pca_project: Y outside component range"));
    }
    let mut out = DataMatrix::zeros(x.rows, y);
    for i in 0..x.rows {
        let row = x.row(i);
        for (c, comp) in model.components.iter().take(y).enumerate() {
            let mut dot = 0.0;
            for j in 0..m {
                dot += (row[j] - model.mean[j]) * comp[j];
            }
            out.set(i, c, dot);
        }
    }
    Ok(out)
}

/// Reconstructs data from a projection: `N * Q_y^T` plus the mean.
pub fn pca_reconstruct(model: &PcaModel, projected: &DataMatrix) -> Result<DataMatrix> {
    let m = model.mean.len();
    if projected.cols > model.components.len() {
        return Err(Error::numeric("pca_reconstruct: too many columns"));
    }
    let mut out = DataMatrix::zeros(projected.rows, m);
    for i in 0..projected.rows {
        for j in 0..m {
            let mut v = model.mean[j];
            for c in 0..projected.cols {
                v += projected.get(i, c) * model.components[c][j];
            }
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Thin SVD via one-sided Jacobi orthogonalization of the columns.
pub fn svd_factorize(b: &DataMatrix) -> Result<SvdFactors> {
    check_finite(b, "svd_factorize")?;
    let (n, m) = (b.rows, b.cols);
    if n == 0 || m == 0 {
        return Err(Error::numeric("svd_factorize: empty matrix"));
    }

    // Columns of `a` are rotated in place; `v` accumulates the rotations.
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..n).map(|i| b.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..m).map(|i| f64::from(u8::from(i == j))).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..n {
                    alpha += a[p][i] * a[p][i];
                    beta += a[q][i] * a[q][i];
                    gamma += a[p][i] * a[q][i];
                }
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let ap = a[p][i];
                    let aq = a[q][i];
                    a[p][i] = c * ap - s * aq;
                    a[q][i] = s * ap + c * aq;
                }
                for i in 0..m {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut norms: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let k = n.min(m);
    let sigma_max = order.first().map_or(0.0, |&i| norms[i]);
    let rank_tol = 1e-12 * sigma_max.max(1e-300);

    let mut left = DataMatrix::zeros(n, k);
    let mut right = DataMatrix::zeros(m, k);
    let mut singular_values = Vec::with_capacity(k);
    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(k);

    for (slot, &src) in order.iter().take(k).enumerate() {
        let sigma = if norms[src] < rank_tol { 0.0 } else { norms[src] };
        norms[src] = sigma;
        let mut u: Vec<f64> = if sigma > 0.0 {
            a[src].iter().map(|x| x / sigma).collect()
        } else {
            orthonormal_completion(&left_cols, n)
        };
        let mut rv: Vec<f64> = v[src].clone();
        // Sign convention: the largest-magnitude left entry is nonnegative.
        let pivot = u
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if u[pivot] < 0.0 {
            for x in &mut u {
                *x = -*x;
            }
            for x in &mut rv {
                *x = -*x;
            }
        }
        for (i, &ui) in u.iter().enumerate() {
            left.set(i, slot, ui);
        }
        for (i, &ri) in rv.iter().enumerate() {
            right.set(i, slot, ri);
        }
        singular_values.push(sigma);
        left_cols.push(u);
    }

    Ok(SvdFactors {
        left,
        singular_values,
        right,
    })
}

/// Gram-Schmidt completion: a unit vector orthogonal to the given columns.
fn orthonormal_completion(existing: &[Vec<f64>], n: usize) -> Vec<f64> {
    for basis in 0..n {
        let mut candidate = vec![0.0; n];
        candidate[basis] = 1.0;
        for col in existing {
            let dot: f64 = candidate.iter().zip(col).map(|(a, b)| a * b).sum();
            for (c, ci) in candidate.iter_mut().zip(col) {
                *c -= dot * ci;
            }
        }
        let norm: f64 = candidate.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            for x in &mut candidate {
                *x /= norm;
            }
            return candidate;
        }
    }
    // More zero singular values than dimensions cannot happen for k <= n.
    unreachable!("orthonormal completion always exists for k <= n");
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major m x m).
/// Returns unsorted eigenvalues and eigenvector columns.
fn jacobi_eigen_symmetric(matrix: &[f64], m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..m).map(|i| f64::from(u8::from(i == j))).collect())
        .collect();
    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = JACOBI_TOL * (1.0 + frobenius);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..m)
            .flat_map(|p| ((p + 1)..m).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a[p * m + q] * a[p * m + q])
            .sum::<f64>()
            .sqrt();
        if off <= stop {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                a[p * m + p] = app - t * apq;
                a[q * m + q] = aqq + t * apq;
                a[p * m + q] = 0.0;
                a[q * m + p] = 0.0;
                for i in 0..m {
                    if i != p && i != q {
                        let aip = a[i * m + p];
                        let aiq = a[i * m + q];
                        a[i * m + p] = c * aip - s * aiq;
                        a[p * m + i] = a[i * m + p];
                        a[i * m + q] = s * aip + c * aiq;
                        a[q * m + i] = a[i * m + q];
                    }
                }
                for i in 0..m {
                    let vip = v[p][i];
                    let viq = v[q][i];
                    v[p][i] = c * vip - s * viq;
                    v[q][i] = s * vip + c * viq;
                }
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    (eigenvalues, v)
}

fn sort_descending(values: &mut Vec<f64>, vectors: &mut Vec<Vec<f64>>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    *values = order.iter().map(|&i| values[i]).collect();
    *vectors = order.iter().map(|&i| vectors[i].clone()).collect();
}

fn fix_sign(column: &mut [f64]) {
    let pivot = column
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    if column[pivot] < 0.0 {
        for x in column.iter_mut() {
            *x = -*x;
        }
    }
}

/// Scores every original feature by the component loadings: the score of
/// feature f is the sum over components of |loading| times the component's
/// eigenvalue or singular-value share. Ties order by lower feature index.
pub fn rank_features(x: &DataMatrix, method: RankingMethod) -> Result<FeatureRanking> {
    let m = x.cols;
    if m == 0 {
        return Err(Error::numeric("rank_features: no features"));
    }
    let (loadings, weights): (Vec<Vec<f64>>, Vec<f64>) = match method {
        RankingMethod::Pca => {
            let model = pca_fit(x)?;
            (model.components, model.eigenvalues)
        }
        RankingMethod::Svd => {
            let factors = svd_factorize(x)?;
            let cols = (0..factors.right.cols)
                .map(|c| (0..m).map(|f| factors.right.get(f, c)).collect())
                .collect();
            (cols, factors.singular_values)
        }
    };
    let total: f64 = weights.iter().sum();
    let shares: Vec<f64> = if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![0.0; weights.len()]
    };

    let scores: Vec<f64> = (0..m)
        .map(|f| {
            loadings
                .iter()
                .zip(&shares)
                .map(|(comp, share)| comp[f].abs() * share)
                .sum()
        })
        .collect();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (scores[i], scores[j]);
        let tol = 1e-12 * a.abs().max(b.abs()).max(1.0);
        if (a - b).abs() <= tol {
            i.cmp(&j)
        } else {
            b.partial_cmp(&a).unwrap()
        }
    });
    let ordered_scores = order.iter().map(|&i| scores[i]).collect();
    Ok(FeatureRanking {
        method,
        order,
        scores: ordered_scores,
    })
}

/// Union of two top-k prefixes, returned in ascending feature-index order.
pub fn union_top_k(a: &FeatureRanking, b: &FeatureRanking, k: usize) -> Vec<usize> {
    let mut selected: Vec<usize> = a
        .order
        .iter()
        .take(k)
        .chain(b.order.iter().take(k))
        .copied()
        .collect();
    selected.sort_unstable();
    selected.dedup();
    selected
}

/// The union of the top-`k_each` PCA-ranked and top-`k_each` SVD-ranked
/// original features, by name.
pub fn multi_feature_union(x: &DataMatrix, names: &[&str], k_each: usize) -> Result<Vec<String>> {
    if names.len() != x.cols {
        return Err(Error::numeric("multi_feature_union: name/column mismatch"));
    }
    if k_each > x.cols {
        return Err(Error::numeric(format!(
            "multi_feature_union: k_each={k_each} exceeds {} features",
            x.cols
        )));
    }
    let pca = rank_features(x, RankingMethod::Pca)?;
    let svd = rank_features(x, RankingMethod::Svd)?;
    Ok(union_top_k(&pca, &svd, k_each)
        .into_iter()
        .map(|i| names[i].to_string())
        .collect())
}

/// Writes a selected-feature list, one name per line.
pub fn write_selected(names: &[String], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for name in names {
        writeln!(file, "{name}")?;
    }
    Ok(())
}

/// Reads a selected-feature list written by [`write_selected`].
pub fn read_selected(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open feature list {}: {e}", path.display())))?;
    let mut names = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            names.push(trimmed.to_string());
        }
    }
    if names.is_empty() {
        return Err(Error::data("feature list is empty"));
    }
    Ok(names)
}
