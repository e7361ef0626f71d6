//! One-dimensional linear reductions of the pair features, used directly
//! as ranking scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, PairFeatures};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    Pca,
    Lda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearReduction {
    pub kind: ReductionKind,
    /// Direction in standardized feature space; zero on dropped columns.
    pub weights: Vec<f64>,
    /// Midpoint of the two class-mean projections (after orientation).
    pub offset: f64,
    /// `+1` or `-1`, so that positives project higher on average.
    pub orientation: f64,
    pub means: Vec<f64>,
    /// Column standard deviations; `0` marks a dropped constant column.
    pub scales: Vec<f64>,
    /// Share of standardized variance along `weights` (PCA only).
    pub explained_variance: Option<f64>,
}

const CONSTANT_COLUMN: f64 = 1e-12;

struct Standardized {
    means: Vec<f64>,
    scales: Vec<f64>,
    kept: Vec<usize>,
    /// rows x kept.len()
    z: Vec<Vec<f64>>,
}

fn standardize(x: &FeatureMatrix) -> Standardized {
    let n = x.rows() as f64;
    let mut means = Vec::with_capacity(x.cols());
    let mut scales = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let mean = x.column(j).sum::<f64>() / n;
        let var = x.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        means.push(mean);
        scales.push(if sd > CONSTANT_COLUMN * mean.abs().max(1.0) {
            sd
        } else {
            0.0
        });
    }
    let kept: Vec<usize> = (0..x.cols()).filter(|&j| scales[j] > 0.0).collect();
    let z = (0..x.rows())
        .map(|i| kept.iter().map(|&j| (x.get(i, j) - means[j]) / scales[j]).collect())
        .collect();
    Standardized { means, scales, kept, z }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Leading eigenpair of a symmetric matrix by power iteration.
fn leading_eigenpair(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let p = m.len();
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + 0.1 * i as f64).collect();
    normalize(&mut v);
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |a, &b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    let max_iterations = 200_000;
    for _ in 0..max_iterations {
        let mut next = mat_vec(m, &v);
        if normalize(&mut next) == 0.0 {
            return Ok((0.0, v));
        }
        v = next;
        let mv = mat_vec(m, &v);
        let lambda = dot(&v, &mv);
        let residual = mv
            .iter()
            .zip(&v)
            .fold(0.0_f64, |r, (a, b)| r.max((a - lambda * b).abs()));
        if residual < 1e-12 * scale {
            return Ok((lambda, v));
        }
    }
    Err(Error::Convergence("principal component", max_iterations))
}

/// Cholesky solve of `a x = b`; `None` when `a` is not positive definite.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let p = a.len();
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        x[i] = (y[i] - (i + 1..p).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

fn class_means(z: &[Vec<f64>], labels: &[bool], positive: bool) -> Vec<f64> {
    let p = z.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; p];
    let mut count = 0.0;
    for (row, _) in z.iter().zip(labels).filter(|(_, &l)| l == positive) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        count += 1.0;
    }
    mean.iter_mut().for_each(|m| *m /= count);
    mean
}

pub fn fit_reduction(data: &PairFeatures, kind: ReductionKind) -> Result<LinearReduction> {
    fit_reduction_matrix(&data.features, &data.labels, kind)
}

pub fn fit_reduction_matrix(x: &FeatureMatrix, labels: &[bool], kind: ReductionKind) -> Result<LinearReduction> {
    if x.rows() != labels.len() {
        return Err(Error::Schema {
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::Precondition("reduction needs at least two rows".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if kind == ReductionKind::Lda && (positives == 0 || positives == labels.len()) {
        return Err(Error::DegenerateLabels);
    }
    let std = standardize(x);
    let p = std.kept.len();
    if p == 0 {
        return Err(Error::DegenerateData("every feature column is constant".into()));
    }
    let n = x.rows() as f64;

    let (direction, explained) = match kind {
        ReductionKind::Pca => {
            let mut cov = vec![vec![0.0; p]; p];
            for row in &std.z {
                for a in 0..p {
                    for b in 0..p {
                        cov[a][b] += row[a] * row[b];
                    }
                }
            }
            cov.iter_mut().flatten().for_each(|c| *c /= n);
            let trace: f64 = (0..p).map(|i| cov[i][i]).sum();
            let (lambda, v) = leading_eigenpair(&cov)?;
            (v, Some(lambda / trace))
        }
        ReductionKind::Lda => {
            let mu_pos = class_means(&std.z, labels, true);
            let mu_neg = class_means(&std.z, labels, false);
            let mut scatter = vec![vec![0.0; p]; p];
            for (row, &l) in std.z.iter().zip(labels) {
                let mu = if l { &mu_pos } else { &mu_neg };
                let d: Vec<f64> = row.iter().zip(mu).map(|(a, b)| a - b).collect();
                for a in 0..p {
                    for b in 0..p {
                        scatter[a][b] += d[a] * d[b];
                    }
                }
            }
            scatter.iter_mut().flatten().for_each(|c| *c /= n);
            let diff: Vec<f64> = mu_pos.iter().zip(&mu_neg).map(|(a, b)| a - b).collect();
            let trace: f64 = (0..p).map(|i| scatter[i][i]).sum();
            let mut ridge = 1e-8 * (trace / p as f64).max(1e-12);
            let mut solved = None;
            for _ in 0..8 {
                let mut regularized = scatter.clone();
                (0..p).for_each(|i| regularized[i][i] += ridge);
                solved = cholesky_solve(&regularized, &diff);
                if solved.is_some() {
                    break;
                }
                ridge *= 100.0;
            }
            let mut w = solved.ok_or_else(|| Error::DegenerateData("within-class scatter is singular".into()))?;
            if normalize(&mut w) == 0.0 {
                return Err(Error::DegenerateData("class means coincide".into()));
            }
            (w, None)
        }
    };

    let mut weights = vec![0.0; x.cols()];
    for (k, &j) in std.kept.iter().enumerate() {
        weights[j] = direction[k];
    }

    let projections: Vec<f64> = std.z.iter().map(|row| dot(row, &direction)).collect();
    let mean_of = |positive: bool| -> Option<f64> {
        let vals: Vec<f64> = projections
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == positive)
            .map(|(&v, _)| v)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let (pos_mean, neg_mean) = (mean_of(true), mean_of(false));
    let orientation = match (pos_mean, neg_mean) {
        (Some(a), Some(b)) if a < b => -1.0,
        _ => 1.0,
    };
    let offset = match (pos_mean, neg_mean) {
        (Some(a), Some(b)) => orientation * (a + b) / 2.0,
        _ => 0.0,
    };

    Ok(LinearReduction {
        kind,
        weights,
        offset,
        orientation,
        means: std.means,
        scales: std.scales,
        explained_variance: explained,
    })
}

/// `orientation * wᵀ standardized(x)` per row.
pub fn score_reduction(model: &LinearReduction, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.cols() != model.weights.len() {
        return Err(Error::Schema {
            expected: model.weights.len(),
            actual: x.cols(),
        });
    }
    Ok((0..x.rows())
        .map(|i| {
            let row = x.row(i);
            let projection: f64 = (0..row.len())
                .filter(|&j| model.scales[j] > 0.0)
                .map(|j| model.weights[j] * (row[j] - model.means[j]) / model.scales[j])
                .sum();
            model.orientation * projection
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn clouds(n: usize, shift: [f64; 3], seed: u64) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let positive = i % 2 == 0;
            let row: Vec<f64> = (0..3)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + if positive { shift[j] } else { 0.0 }
                })
                .collect();
            rows.push(row);
            labels.push(positive);
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn lda_finds_the_separating_axis() {
        let (x, y) = clouds(2_000, [0.0, 3.0, 0.0], 1);
        let model = fit_reduction_matrix(&x, &y, ReductionKind::Lda).unwrap();
        assert!(model.weights[1].abs() > 0.95, "{:?}", model.weights);
        let s = score_reduction(&model, &x).unwrap();
        let pos: f64 = s.iter().zip(&y).filter(|(_, &l)| l).map(|(v, _)| v).sum::<f64>() / 1000.0;
        let neg: f64 = s.iter().zip(&y).filter(|(_, &l)| !l).map(|(v, _)| v).sum::<f64>() / 1000.0;
        // gap in standardized units: 3 / sqrt(1 + 9/4)
        let expected = 3.0 / (1.0_f64 + 2.25).sqrt();
        assert!((pos - neg - expected).abs() < 0.15, "{}", pos - neg);
    }

    #[test]
    fn orientation_favours_positives() {
        // positives sit lower on the only informative axis
        let (x, y) = clouds(400, [-2.0, 0.0, 0.0], 2);
        for kind in [ReductionKind::Pca, ReductionKind::Lda] {
            let model = fit_reduction_matrix(&x, &y, kind).unwrap();
            let s = score_reduction(&model, &x).unwrap();
            let pos: f64 = s.iter().zip(&y).filter(|(_, &l)| l).map(|(v, _)| v).sum();
            let neg: f64 = s.iter().zip(&y).filter(|(_, &l)| !l).map(|(v, _)| v).sum();
            assert!(pos >= neg, "{kind:?}");
        }
    }

    #[test]
    fn pca_weights_are_unit_norm() {
        let (x, y) = clouds(300, [1.0, 1.0, 0.0], 3);
        let model = fit_reduction_matrix(&x, &y, ReductionKind::Pca).unwrap();
        assert!((dot(&model.weights, &model.weights) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let x = FeatureMatrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]]).unwrap();
        let y = [true, true, false, false];
        let model = fit_reduction_matrix(&x, &y, ReductionKind::Pca).unwrap();
        assert_eq!(model.scales[1], 0.0);
        assert_eq!(model.weights[1], 0.0);

        let all_const = FeatureMatrix::from_rows(&[[5.0], [5.0]]).unwrap();
        assert!(matches!(
            fit_reduction_matrix(&all_const, &[true, false], ReductionKind::Pca),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn mean_row_scores_zero() {
        let (x, y) = clouds(100, [1.0, 0.0, 0.0], 4);
        let model = fit_reduction_matrix(&x, &y, ReductionKind::Lda).unwrap();
        let at_mean = FeatureMatrix::from_rows(std::slice::from_ref(&model.means)).unwrap();
        assert_eq!(score_reduction(&model, &at_mean).unwrap(), vec![0.0]);
    }

    #[test]
    fn lda_needs_two_classes() {
        let (x, _) = clouds(10, [0.0; 3], 5);
        assert!(matches!(
            fit_reduction_matrix(&x, &[true; 10], ReductionKind::Lda),
            Err(Error::DegenerateLabels)
        ));
    }
}
