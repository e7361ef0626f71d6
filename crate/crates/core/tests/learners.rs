use bilink::features::FeatureMatrix;
use bilink::learners::{
    fit_gbdt_matrix, fit_reduction_matrix, predict_gbdt, score_reduction, GbdtConfig, ReductionKind,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows).unwrap()
}

fn correlation(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let mut z = x.clone();
    for j in 0..p {
        let col = x.column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        z.column_mut(j).iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    z.transpose() * &z / n
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn alternating_labels(n: usize) -> Vec<bool> {
    (0..n).map(|i| i % 2 == 0).collect()
}

#[test]
fn isotropic_data_has_no_dominant_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows = gaussian(&mut rng, 5000, 13);
    let model = fit_reduction_matrix(&matrix(&rows), &alternating_labels(5000), ReductionKind::Pca).unwrap();
    let share = model.explained_variance.unwrap();
    assert!((share - 1.0 / 13.0).abs() < 0.05, "share {share}");
}

#[test]
fn pca_matches_the_correlation_eigenproblem() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = 6;
    // correlated columns through a random mixing matrix
    let mixing: Vec<Vec<f64>> = gaussian(&mut rng, p, p);
    let latent = gaussian(&mut rng, 800, p);
    let rows: Vec<Vec<f64>> = latent
        .iter()
        .map(|z| {
            (0..p)
                .map(|j| (0..p).map(|k| z[k] * mixing[k][j]).sum::<f64>() + 3.0 * j as f64)
                .collect()
        })
        .collect();
    let model = fit_reduction_matrix(&matrix(&rows), &alternating_labels(800), ReductionKind::Pca).unwrap();

    let corr = correlation(&rows);
    let eig = SymmetricEigen::new(corr.clone());
    let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let idx = eig.eigenvalues.iter().position(|&l| l == top).unwrap();
    let oracle: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();

    assert!((model.explained_variance.unwrap() * p as f64 - top).abs() < 1e-6);
    assert!(cosine(&model.weights, &oracle).abs() > 1.0 - 1e-8);
    let w = DVector::from_vec(model.weights.clone());
    let residual = (&corr * &w - top * &w).norm();
    assert!(residual < 1e-6, "residual {residual}");
}

#[test]
fn lda_recovers_the_fisher_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shift = [1.0, -0.5, 0.0, 0.25];
    let n = 20_000;
    let labels = alternating_labels(n);
    let rows: Vec<Vec<f64>> = gaussian(&mut rng, n, 4)
        .into_iter()
        .zip(&labels)
        .map(|(mut r, &pos)| {
            // shared covariance: column 1 correlated with column 0
            r[1] += 0.6 * r[0];
            if pos {
                r.iter_mut().zip(&shift).for_each(|(x, s)| *x += s);
            }
            r
        })
        .collect();
    let model = fit_reduction_matrix(&matrix(&rows), &labels, ReductionKind::Lda).unwrap();

    // Fisher direction in standardized coordinates: S_w^-1 (mu1 - mu0)
    let std: Vec<f64> = model.scales.clone();
    let mut sw = DMatrix::<f64>::zeros(4, 4);
    let mut means = [[0.0; 4]; 2];
    for (r, &pos) in rows.iter().zip(&labels) {
        for j in 0..4 {
            means[pos as usize][j] += r[j] / (n / 2) as f64;
        }
    }
    for (r, &pos) in rows.iter().zip(&labels) {
        let d = DVector::from_fn(4, |j, _| (r[j] - means[pos as usize][j]) / std[j]);
        sw += &d * d.transpose();
    }
    let diff = DVector::from_fn(4, |j, _| (means[1][j] - means[0][j]) / std[j]);
    let fisher = sw.lu().solve(&diff).unwrap();
    let c = cosine(&model.weights, fisher.as_slice());
    assert!(c.abs() > 0.99, "cosine {c}");
}

#[test]
fn reductions_are_affine_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows = gaussian(&mut rng, 400, 5);
    let labels: Vec<bool> = rows.iter().map(|r| r[0] + r[2] > 0.0).collect();
    let moved: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, x)| (j as f64 + 0.5) * 7.0 * x - 40.0 * j as f64)
                .collect()
        })
        .collect();
    for kind in [ReductionKind::Pca, ReductionKind::Lda] {
        let a = fit_reduction_matrix(&matrix(&rows), &labels, kind).unwrap();
        let b = fit_reduction_matrix(&matrix(&moved), &labels, kind).unwrap();
        let sa = score_reduction(&a, &matrix(&rows)).unwrap();
        let sb = score_reduction(&b, &matrix(&moved)).unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            assert!((x - y).abs() < 1e-6, "{kind:?}: {x} vs {y}");
        }
    }
}

#[test]
fn projection_of_training_rows_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows = gaussian(&mut rng, 200, 4);
    let labels: Vec<bool> = rows.iter().map(|r| r[1] > 0.2).collect();
    for kind in [ReductionKind::Pca, ReductionKind::Lda] {
        let model = fit_reduction_matrix(&matrix(&rows), &labels, kind).unwrap();
        let scores = score_reduction(&model, &matrix(&rows)).unwrap();
        let manual: Vec<f64> = rows
            .iter()
            .map(|r| {
                model.orientation
                    * (0..4)
                        .map(|j| model.weights[j] * (r[j] - model.means[j]) / model.scales[j])
                        .sum::<f64>()
            })
            .collect();
        for (a, b) in scores.iter().zip(&manual) {
            assert!((a - b).abs() < 1e-12);
        }
        let json = serde_json::to_string(&model).unwrap();
        let back = serde_json::from_str(&json).unwrap();
        let reloaded = score_reduction(&back, &matrix(&rows)).unwrap();
        for (a, b) in scores.iter().zip(&reloaded) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn gbdt_predictions_are_calibrated_on_balanced_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows = gaussian(&mut rng, 1000, 3);
    let labels: Vec<bool> = rows
        .iter()
        .map(|r| r[0] - r[1] + rng.gen_range(-1.0..1.0) > 0.0)
        .collect();
    let x = matrix(&rows);
    let model = fit_gbdt_matrix(&x, &labels, &GbdtConfig::default(), 0).unwrap();
    let p = predict_gbdt(&model, &x).unwrap();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let balance = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
    assert!((mean - 0.5).abs() < 0.1, "mean prediction {mean}");
    assert!((mean - balance).abs() < 0.02, "mean {mean} vs positive share {balance}");
    assert!(model.loss_is_non_increasing());
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
}
