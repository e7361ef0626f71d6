//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits one tree to the first- and second-order statistics of
//! the loss at the current margins, with exact greedy split search over
//! pre-sorted feature values. Leaf weights are the regularized Newton
//! step `-G / (H + λ)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, PairFeatures};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty λ on leaf weights.
    pub l2: f64,
    pub min_child_weight: f64,
    pub min_split_gain: f64,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 200,
            max_depth: 4,
            learning_rate: 0.1,
            l2: 1.0,
            min_child_weight: 1.0,
            min_split_gain: 0.0,
            subsample: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] < *threshold { left } else { right },
            }
        }
    }

    fn leaves(&self) -> Vec<f64> {
        match self {
            TreeNode::Leaf { weight } => vec![*weight],
            TreeNode::Split { left, right, .. } => {
                let mut out = left.leaves();
                out.extend(right.leaves());
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    /// Initial log-odds.
    pub base_score: f64,
    pub width: usize,
    pub config: GbdtConfig,
    /// Mean training log-loss before the first tree and after each round.
    pub train_loss: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss of margins against labels.
fn log_loss(margins: &[f64], labels: &[bool]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            // log(1 + e^{-m}) for y = 1, log(1 + e^{m}) for y = 0
            let z = if y { -m } else { m };
            z.max(0.0) + (-z.abs()).exp().ln_1p()
        })
        .sum();
    total / margins.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    gh: &'a [(f64, f64)],
    config: &'a GbdtConfig,
}

/// Row ids of one node ordered by one feature, with that feature's values
/// alongside so the split scan reads sequentially.
#[derive(Clone)]
pub(crate) struct SortedColumn {
    rows: Vec<u32>,
    values: Vec<f64>,
}

fn leaf_objective(g: f64, h: f64, l2: f64) -> f64 {
    g * g / (h + l2)
}

/// A threshold strictly above `lo` and at most `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Best split over rows given as per-feature sorted columns.
/// Ties keep the lowest feature index, then the lowest threshold.
pub(crate) fn best_split(gh: &[(f64, f64)], sorted: &[SortedColumn], config: &GbdtConfig) -> Option<SplitChoice> {
    let (g_total, h_total) = sorted[0]
        .rows
        .iter()
        .fold((0.0, 0.0), |(g, h), &r| (g + gh[r as usize].0, h + gh[r as usize].1));
    let parent = leaf_objective(g_total, h_total, config.l2);

    let mut best: Option<SplitChoice> = None;
    for (feature, column) in sorted.iter().enumerate() {
        let (mut gl, mut hl) = (0.0, 0.0);
        for w in 0..column.rows.len().saturating_sub(1) {
            let (g, h) = gh[column.rows[w] as usize];
            gl += g;
            hl += h;
            let (lo, hi) = (column.values[w], column.values[w + 1]);
            if lo == hi {
                continue;
            }
            let (gr, hr) = (g_total - gl, h_total - hl);
            if hl < config.min_child_weight || hr < config.min_child_weight {
                continue;
            }
            let gain = 0.5 * (leaf_objective(gl, hl, config.l2) + leaf_objective(gr, hr, config.l2) - parent);
            if gain > config.min_split_gain && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitChoice {
                    feature,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best
}

impl Builder<'_> {
    fn leaf(&self, rows: &[u32]) -> TreeNode {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.gh[r as usize].0, h + self.gh[r as usize].1)
        });
        TreeNode::Leaf {
            weight: -g / (h + self.config.l2),
        }
    }

    fn build(&self, sorted: Vec<SortedColumn>, depth: usize, goes_left: &mut [bool]) -> TreeNode {
        if depth >= self.config.max_depth || sorted[0].rows.len() < 2 {
            return self.leaf(&sorted[0].rows);
        }
        let Some(choice) = best_split(self.gh, &sorted, self.config) else {
            return self.leaf(&sorted[0].rows);
        };
        for &r in &sorted[0].rows {
            goes_left[r as usize] = self.x.get(r as usize, choice.feature) < choice.threshold;
        }
        let (left, right): (Vec<SortedColumn>, Vec<SortedColumn>) =
            sorted.into_iter().map(|column| partition(column, goes_left)).unzip();
        TreeNode::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left: Box::new(self.build(left, depth + 1, goes_left)),
            right: Box::new(self.build(right, depth + 1, goes_left)),
        }
    }
}

fn partition(column: SortedColumn, goes_left: &[bool]) -> (SortedColumn, SortedColumn) {
    let empty = || SortedColumn {
        rows: Vec::new(),
        values: Vec::new(),
    };
    let (mut left, mut right) = (empty(), empty());
    for (r, v) in column.rows.into_iter().zip(column.values) {
        let side = if goes_left[r as usize] { &mut left } else { &mut right };
        side.rows.push(r);
        side.values.push(v);
    }
    (left, right)
}

pub(crate) fn presort(x: &FeatureMatrix, rows: &[u32]) -> Vec<SortedColumn> {
    (0..x.cols())
        .map(|f| {
            let mut order = rows.to_vec();
            order.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
            let values = order.iter().map(|&r| x.get(r as usize, f)).collect();
            SortedColumn { rows: order, values }
        })
        .collect()
}

pub fn fit_gbdt(data: &PairFeatures, config: &GbdtConfig, seed: u64) -> Result<GbdtModel> {
    fit_gbdt_matrix(&data.features, &data.labels, config, seed)
}

pub fn fit_gbdt_matrix(x: &FeatureMatrix, labels: &[bool], config: &GbdtConfig, seed: u64) -> Result<GbdtModel> {
    if x.rows() != labels.len() {
        return Err(Error::Schema {
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::Precondition("boosting needs at least two rows".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateLabels);
    }
    if !(config.learning_rate > 0.0) || !(config.subsample > 0.0 && config.subsample <= 1.0) || config.l2 < 0.0 {
        return Err(Error::InvalidParameter(format!("bad boosting config {config:?}")));
    }

    let prior = positives as f64 / labels.len() as f64;
    let base_score = (prior / (1.0 - prior)).ln();
    let n = x.rows();
    let mut margins = vec![base_score; n];
    let mut train_loss = vec![log_loss(&margins, labels)];
    let all_rows: Vec<u32> = (0..n as u32).collect();
    let full_sort = presort(x, &all_rows);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut goes_left = vec![false; n];
    let mut trees = Vec::with_capacity(config.n_trees);

    for _ in 0..config.n_trees {
        let gh: Vec<(f64, f64)> = margins
            .iter()
            .zip(labels)
            .map(|(&m, &y)| {
                let p = sigmoid(m);
                (p - f64::from(u8::from(y)), p * (1.0 - p))
            })
            .collect();
        let sorted = if config.subsample < 1.0 {
            let keep: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < config.subsample).collect();
            full_sort
                .iter()
                .map(|column| partition(column.clone(), &keep).0)
                .collect()
        } else {
            full_sort.clone()
        };
        let builder = Builder { x, gh: &gh, config };
        let tree = builder.build(sorted, 0, &mut goes_left);
        for (i, m) in margins.iter_mut().enumerate() {
            *m += config.learning_rate * tree.predict(x.row(i));
        }
        train_loss.push(log_loss(&margins, labels));
        trees.push(tree);
    }

    let model = GbdtModel {
        trees,
        learning_rate: config.learning_rate,
        base_score,
        width: x.cols(),
        config: *config,
        train_loss,
    };
    debug_assert!(model.trees.iter().flat_map(TreeNode::leaves).all(f64::is_finite));
    Ok(model)
}

impl GbdtModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Whether the recorded training loss never went up between rounds.
    pub fn loss_is_non_increasing(&self) -> bool {
        self.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs())
    }
}

/// Positive-class probabilities `sigmoid(base + lr * Σ trees)`.
pub fn predict_gbdt(model: &GbdtModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.cols() != model.width {
        return Err(Error::Schema {
            expected: model.width,
            actual: x.cols(),
        });
    }
    Ok((0..x.rows()).map(|i| sigmoid(model.margin(x.row(i)))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> (FeatureMatrix, Vec<bool>) {
        // separable along x0 + x1 > 1
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..n {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            rows.push(vec![a, b]);
            labels.push(a + b > 1.0);
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn separable_toy_converges() {
        let (x, y) = toy(200);
        let config = GbdtConfig {
            n_trees: 50,
            max_depth: 4,
            learning_rate: 0.5,
            l2: 0.0,
            min_child_weight: 0.0,
            ..GbdtConfig::default()
        };
        let model = fit_gbdt_matrix(&x, &y, &config, 0).unwrap();
        assert!(
            *model.train_loss.last().unwrap() < 0.05,
            "{:?}",
            model.train_loss.last()
        );
        assert!(model.loss_is_non_increasing());
    }

    #[test]
    fn empty_ensemble_predicts_base_score() {
        let (x, y) = toy(20);
        let config = GbdtConfig {
            n_trees: 0,
            ..GbdtConfig::default()
        };
        let model = fit_gbdt_matrix(&x, &y, &config, 0).unwrap();
        let p = predict_gbdt(&model, &x).unwrap();
        assert!(p.iter().all(|&v| v == sigmoid(model.base_score)));
    }

    #[test]
    fn single_class_is_rejected() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(
            fit_gbdt_matrix(&x, &[true, true], &GbdtConfig::default(), 0),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn width_mismatch_is_a_schema_error() {
        let (x, y) = toy(20);
        let model = fit_gbdt_matrix(&x, &y, &GbdtConfig::default(), 0).unwrap();
        let wide = FeatureMatrix::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(predict_gbdt(&model, &wide), Err(Error::Schema { .. })));
    }

    #[test]
    fn extra_tree_shifts_log_odds() {
        let (x, y) = toy(30);
        let config = GbdtConfig {
            n_trees: 3,
            ..GbdtConfig::default()
        };
        let mut model = fit_gbdt_matrix(&x, &y, &config, 0).unwrap();
        let before: Vec<f64> = (0..x.rows()).map(|i| model.margin(x.row(i))).collect();
        model.trees.push(TreeNode::Leaf { weight: 0.7 });
        for (i, b) in before.iter().enumerate() {
            assert!((model.margin(x.row(i)) - b - config.learning_rate * 0.7).abs() < 1e-12);
        }
    }

    /// Every distinct-value boundary of every feature, scored directly.
    fn exhaustive_split(x: &FeatureMatrix, g: &[f64], h: &[f64], config: &GbdtConfig) -> Option<SplitChoice> {
        let n = x.rows();
        let score = |rows: &[usize]| {
            let gs: f64 = rows.iter().map(|&r| g[r]).sum();
            let hs: f64 = rows.iter().map(|&r| h[r]).sum();
            (gs, hs)
        };
        let all: Vec<usize> = (0..n).collect();
        let (gt, ht) = score(&all);
        let mut best: Option<SplitChoice> = None;
        for f in 0..x.cols() {
            let mut values: Vec<f64> = x.column(f).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let t = midpoint(w[0], w[1]);
                let left: Vec<usize> = all.iter().copied().filter(|&r| x.get(r, f) < t).collect();
                let right: Vec<usize> = all.iter().copied().filter(|&r| x.get(r, f) >= t).collect();
                let (gl, hl) = score(&left);
                let (gr, hr) = score(&right);
                if hl < config.min_child_weight || hr < config.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (gl * gl / (hl + config.l2) + gr * gr / (hr + config.l2) - gt * gt / (ht + config.l2));
                if gain > config.min_split_gain && best.is_none_or(|b| gain > b.gain + 1e-12) {
                    best = Some(SplitChoice {
                        feature: f,
                        threshold: t,
                        gain,
                    });
                }
            }
        }
        best
    }

    #[test]
    fn split_search_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..60 {
            let n = rng.gen_range(2..=50);
            let cols = rng.gen_range(1..=4);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..cols).map(|_| f64::from(rng.gen_range(0..6u8))).collect())
                .collect();
            let x = FeatureMatrix::from_rows(&rows).unwrap();
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.25)).collect();
            let config = GbdtConfig {
                min_child_weight: if trial % 2 == 0 { 0.0 } else { 0.3 },
                ..GbdtConfig::default()
            };
            let all: Vec<u32> = (0..n as u32).collect();
            let gh: Vec<(f64, f64)> = g.iter().copied().zip(h.iter().copied()).collect();
            let found = best_split(&gh, &presort(&x, &all), &config);
            let oracle = exhaustive_split(&x, &g, &h, &config);
            match (found, oracle) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert!((a.gain - b.gain).abs() < 1e-9, "trial {trial}: {a:?} vs {b:?}");
                    assert_eq!((a.feature, a.threshold), (b.feature, b.threshold), "trial {trial}");
                }
                other => panic!("trial {trial}: {other:?}"),
            }
        }
    }

    #[test]
    fn duplicated_rows_give_identical_predictions() {
        let (x, y) = toy(60);
        let config = GbdtConfig {
            n_trees: 20,
            l2: 0.0,
            min_child_weight: 0.0,
            ..GbdtConfig::default()
        };
        let rows: Vec<Vec<f64>> = (0..x.rows())
            .flat_map(|i| [x.row(i).to_vec(), x.row(i).to_vec()])
            .collect();
        let labels: Vec<bool> = y.iter().flat_map(|&l| [l, l]).collect();
        let doubled = FeatureMatrix::from_rows(&rows).unwrap();
        let a = predict_gbdt(&fit_gbdt_matrix(&x, &y, &config, 0).unwrap(), &x).unwrap();
        let b = predict_gbdt(&fit_gbdt_matrix(&doubled, &labels, &config, 0).unwrap(), &x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}
