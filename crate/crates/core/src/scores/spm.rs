//! Structural perturbation method.
//!
//! A random fraction of the training links is removed, the remaining
//! adjacency `A^R` is eigendecomposed, and each eigenvalue is corrected to
//! first order by the removed links `ΔA`: `Δλ_k = x_kᵀ ΔA x_k`. The
//! perturbed matrix `Ã = Σ_k (λ_k + Δλ_k) x_k x_kᵀ` keeps the unperturbed
//! eigenvectors. Scores are the entries of `Ã`, averaged over independent
//! perturbations.
//!
//! Eigenvalues closer than `degeneracy_tolerance` are treated as one
//! cluster and share the mean of their corrections. Bipartite adjacency
//! matrices always have a large null space when the sides differ in size,
//! so this path is routine; the cluster counts are logged and recorded in
//! the score table parameters.

use faer::{Mat, Side};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_pairs, ScoreTable};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Pair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpmParams {
    pub perturbation_fraction: f64,
    pub repetitions: usize,
    pub degeneracy_tolerance: f64,
    /// Refuse graphs with more nodes than this.
    pub node_cap: usize,
}

impl Default for SpmParams {
    fn default() -> Self {
        SpmParams {
            perturbation_fraction: 0.1,
            repetitions: 10,
            degeneracy_tolerance: 1e-10,
            node_cap: 5_000,
        }
    }
}

/// Degenerate-cluster bookkeeping for one reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Degeneracy {
    pub clusters: usize,
    pub eigenvalues: usize,
}

/// The removed-link sets, one per repetition, each sorted.
pub fn perturbation_sets(graph: &BipartiteGraph, params: &SpmParams, seed: u64) -> Vec<Vec<Pair>> {
    let edges: Vec<Pair> = graph.edges().collect();
    let size = (params.perturbation_fraction * edges.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..params.repetitions)
        .map(|_| {
            let mut picked: Vec<Pair> = rand::seq::index::sample(&mut rng, edges.len(), size)
                .into_iter()
                .map(|i| edges[i])
                .collect();
            picked.sort_unstable();
            picked
        })
        .collect()
}

/// Perturbed-matrix entries `Ã_xy` for the queried pairs after removing
/// `removed` (a subset of the graph's edges).
pub fn reconstruct(
    graph: &BipartiteGraph,
    removed: &[Pair],
    pairs: &[Pair],
    degeneracy_tolerance: f64,
) -> Result<(Vec<f64>, Degeneracy)> {
    let (nl, nr) = (graph.left_count(), graph.right_count());
    let n = nl + nr;

    let mut a = Mat::<f64>::zeros(n, n);
    for e in graph.edges() {
        let (i, j) = (e.left as usize, nl + e.right as usize);
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    for e in removed {
        if !graph.has_edge(e.left as usize, e.right as usize) {
            return Err(Error::Precondition(format!(
                "perturbation link ({}, {}) is not an edge",
                e.left, e.right
            )));
        }
        let (i, j) = (e.left as usize, nl + e.right as usize);
        a[(i, j)] = 0.0;
        a[(j, i)] = 0.0;
    }

    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::DegenerateData(format!("eigendecomposition failed: {e:?}")))?;
    let x = eig.U();
    let lambda: Vec<f64> = (0..n).map(|k| eig.S()[k]).collect();

    // Δλ_k = x_kᵀ ΔA x_k = 2 Σ_{(u,v) ∈ ΔL} x_k[u] x_k[v]
    let mut delta: Vec<f64> = (0..n)
        .map(|k| {
            let col = x.col(k);
            2.0 * removed
                .iter()
                .map(|e| col[e.left as usize] * col[nl + e.right as usize])
                .sum::<f64>()
        })
        .collect();

    let mut degeneracy = Degeneracy::default();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && lambda[end] - lambda[end - 1] < degeneracy_tolerance {
            end += 1;
        }
        if end - start > 1 {
            let mean = delta[start..end].iter().sum::<f64>() / (end - start) as f64;
            delta[start..end].iter_mut().for_each(|d| *d = mean);
            degeneracy.clusters += 1;
            degeneracy.eigenvalues += end - start;
        }
        start = end;
    }
    if degeneracy.clusters > 0 {
        info!(
            "spm: {} degenerate eigenvalue clusters ({} eigenvalues) share averaged corrections",
            degeneracy.clusters, degeneracy.eigenvalues
        );
    }

    // Ã restricted to the left-right block: X_U diag(λ+Δλ) X_Vᵀ
    let weighted = Mat::<f64>::from_fn(nl, n, |i, k| x[(i, k)] * (lambda[k] + delta[k]));
    let right_rows = x.subrows(nl, nr);
    let block = &weighted * right_rows.transpose();

    let scores = pairs
        .iter()
        .map(|p| block[(p.left as usize, p.right as usize)])
        .collect();
    Ok((scores, degeneracy))
}

/// Mean perturbed-matrix score over `params.repetitions` random
/// perturbations. Deterministic given `seed`.
pub fn score_spm(graph: &BipartiteGraph, params: &SpmParams, pairs: &[Pair], seed: u64) -> Result<ScoreTable> {
    if !(params.perturbation_fraction >= 0.0 && params.perturbation_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation fraction must lie in [0, 1), got {}",
            params.perturbation_fraction
        )));
    }
    if params.repetitions == 0 {
        return Err(Error::InvalidParameter("SPM needs at least one repetition".into()));
    }
    if graph.node_count() > params.node_cap {
        return Err(Error::NodeCapExceeded {
            nodes: graph.node_count(),
            cap: params.node_cap,
        });
    }
    check_pairs(graph, pairs)?;

    let runs: Vec<(Vec<f64>, Degeneracy)> = perturbation_sets(graph, params, seed)
        .par_iter()
        .map(|removed| reconstruct(graph, removed, pairs, params.degeneracy_tolerance))
        .collect::<Result<_>>()?;

    let mut scores = vec![0.0; pairs.len()];
    for (run, _) in &runs {
        scores.iter_mut().zip(run).for_each(|(s, r)| *s += r);
    }
    let reps = params.repetitions as f64;
    scores.iter_mut().for_each(|s| *s /= reps);

    let mut recorded = serde_json::to_value(params)?;
    recorded["degeneracy"] = serde_json::to_value(runs.iter().map(|(_, d)| *d).collect::<Vec<_>>())?;
    ScoreTable::new("SPM", recorded, Some(seed), graph, pairs.to_vec(), scores)
}
