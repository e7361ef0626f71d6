//! Walk-counting scores: the degree-normalized path indices (L3, L5, L7),
//! Katz and Local Paths.
//!
//! All three propagate a vector from one left node through the symmetric
//! adjacency operator. The vector is kept as a (left, right) pair of
//! halves and both halves are always pushed through the operator, so the
//! parity of bipartite walks falls out of the arithmetic rather than being
//! assumed.

use serde::{Deserialize, Serialize};

use super::{check_pairs, score_per_left, ScoreTable};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Pair};

/// How each walk is weighted by the degrees of its intermediate nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathNormalization {
    /// Divide by `sqrt` of the product of all intermediate-node degrees.
    #[default]
    SqrtDegree,
    /// Raw walk counts.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KatzParams {
    pub alpha: f64,
    pub max_length: usize,
    pub tolerance: f64,
}

impl Default for KatzParams {
    fn default() -> Self {
        KatzParams {
            alpha: 0.001,
            max_length: 21,
            tolerance: 1e-12,
        }
    }
}

/// A vector over all nodes, split by side.
struct SideVector {
    left: Vec<f64>,
    right: Vec<f64>,
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

impl SideVector {
    fn unit_left(graph: &BipartiteGraph, u: usize) -> Self {
        let mut left = vec![0.0; graph.left_count()];
        left[u] = 1.0;
        SideVector {
            left,
            right: vec![0.0; graph.right_count()],
        }
    }

    /// `x <- A x` with `A` the symmetric `(|U|+|V|)`-square adjacency.
    /// A half that is exactly zero maps to zero, so its product is skipped.
    fn step(&mut self, graph: &BipartiteGraph, scale: f64) {
        let next_left = if is_zero(&self.right) {
            vec![0.0; graph.left_count()]
        } else {
            (0..graph.left_count())
                .map(|u| {
                    scale
                        * graph
                            .left_neighbors(u)
                            .iter()
                            .map(|&v| self.right[v as usize])
                            .sum::<f64>()
                })
                .collect()
        };
        let next_right = if is_zero(&self.left) {
            vec![0.0; graph.right_count()]
        } else {
            (0..graph.right_count())
                .map(|v| {
                    scale
                        * graph
                            .right_neighbors(v)
                            .iter()
                            .map(|&u| self.left[u as usize])
                            .sum::<f64>()
                })
                .collect()
        };
        self.left = next_left;
        self.right = next_right;
    }

    fn max_abs(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }
}

fn inv_sqrt(degrees: Vec<usize>) -> Vec<f64> {
    degrees
        .into_iter()
        .map(|k| if k == 0 { 0.0 } else { 1.0 / (k as f64).sqrt() })
        .collect()
}

/// Degree-normalized count of walks of odd length `length` (3, 5 or 7)
/// between each left/right pair.
pub fn score_path_index(
    graph: &BipartiteGraph,
    pairs: &[Pair],
    length: usize,
    normalization: PathNormalization,
) -> Result<ScoreTable> {
    if !matches!(length, 3 | 5 | 7) {
        return Err(Error::UnsupportedLength(length));
    }
    check_pairs(graph, pairs)?;
    let left_scale = inv_sqrt(graph.left_degrees());
    let right_scale = inv_sqrt(graph.right_degrees());

    let scores = score_per_left(pairs, graph.right_count(), |u, row| {
        let mut x = SideVector::unit_left(graph, u);
        for step in 1..=length {
            x.step(graph, 1.0);
            let intermediate = step < length;
            if intermediate && normalization == PathNormalization::SqrtDegree {
                x.left.iter_mut().zip(&left_scale).for_each(|(a, s)| *a *= s);
                x.right.iter_mut().zip(&right_scale).for_each(|(a, s)| *a *= s);
            }
        }
        assert!(is_zero(&x.left), "odd walk from a left node ended on the left side");
        row.copy_from_slice(&x.right);
        Ok(())
    })?;

    let params = serde_json::json!({ "length": length, "normalization": normalization });
    ScoreTable::new(format!("L{length}"), params, None, graph, pairs.to_vec(), scores)
}

/// Largest eigenvalue of the symmetric adjacency, i.e. the largest singular
/// value of the biadjacency matrix, by power iteration on `B^T B`.
pub fn spectral_radius(graph: &BipartiteGraph) -> f64 {
    if graph.edge_count() == 0 {
        return 0.0;
    }
    let mut x = vec![1.0; graph.right_count()];
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let bx: Vec<f64> = (0..graph.left_count())
            .map(|u| graph.left_neighbors(u).iter().map(|&v| x[v as usize]).sum())
            .collect();
        let btbx: Vec<f64> = (0..graph.right_count())
            .map(|v| graph.right_neighbors(v).iter().map(|&u| bx[u as usize]).sum())
            .collect();
        let xx: f64 = x.iter().map(|a| a * a).sum();
        let rayleigh = bx.iter().map(|a| a * a).sum::<f64>() / xx;
        let norm = btbx.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        x = btbx.into_iter().map(|a| a / norm).collect();
        let converged = (rayleigh - estimate).abs() <= 1e-12 * rayleigh;
        estimate = rayleigh;
        if converged {
            break;
        }
    }
    estimate.sqrt()
}

pub(crate) fn check_katz_alpha(graph: &BipartiteGraph, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "katz alpha must be positive, got {alpha}"
        )));
    }
    let rho = spectral_radius(graph);
    if alpha * rho >= 1.0 {
        return Err(Error::Divergence {
            alpha,
            spectral_radius: rho,
            max_alpha: 1.0 / rho,
        });
    }
    Ok(())
}

/// Attenuated walk count `sum_l alpha^l (A^l)_xy`, truncated at
/// `max_length` or once a whole term drops below `tolerance`.
pub fn score_katz(graph: &BipartiteGraph, params: &KatzParams, pairs: &[Pair]) -> Result<ScoreTable> {
    check_katz_alpha(graph, params.alpha)?;
    check_pairs(graph, pairs)?;

    let scores = score_per_left(pairs, graph.right_count(), |u, row| {
        // x holds alpha^l (A^l) e_u
        let mut x = SideVector::unit_left(graph, u);
        for length in 1..=params.max_length {
            x.step(graph, params.alpha);
            if length % 2 == 1 {
                row.iter_mut().zip(&x.right).for_each(|(r, t)| *r += t);
            } else {
                assert!(is_zero(&x.right), "even-length walk reached the right side");
            }
            if x.max_abs() < params.tolerance {
                break;
            }
        }
        Ok(())
    })?;

    ScoreTable::new(
        "Katz",
        serde_json::to_value(params)?,
        None,
        graph,
        pairs.to_vec(),
        scores,
    )
}

/// Local Paths: `(A^2)_xy + epsilon (A^3)_xy`. The first term is computed
/// and checked to vanish for cross-side pairs.
pub fn score_lp(graph: &BipartiteGraph, epsilon: f64, pairs: &[Pair]) -> Result<ScoreTable> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "LP epsilon must be positive, got {epsilon}"
        )));
    }
    check_pairs(graph, pairs)?;

    let scores = score_per_left(pairs, graph.right_count(), |u, row| {
        let mut x = SideVector::unit_left(graph, u);
        x.step(graph, 1.0);
        x.step(graph, 1.0);
        assert!(is_zero(&x.right), "(A^2) has a cross-side entry");
        x.step(graph, 1.0);
        row.iter_mut().zip(&x.right).for_each(|(r, a3)| *r = epsilon * a3);
        Ok(())
    })?;

    ScoreTable::new(
        "LP",
        serde_json::json!({ "epsilon": epsilon }),
        None,
        graph,
        pairs.to_vec(),
        scores,
    )
}
