//! Library-versus-oracle equivalence suites. Each returns the largest
//! discrepancy it saw together with the tolerance it must stay under.

use std::fmt;

use bilink::eval::{aupr, auroc};
use bilink::features::{betweenness_centrality, FeatureMatrix};
use bilink::learners::{fit_gbdt_matrix, GbdtConfig};
use bilink::recsys::{triplet_loss_and_grad, EmbeddingTable, Propagator, Triplet};
use bilink::scores::spm::reconstruct;
use bilink::scores::{score_katz, score_lp, score_path_index, KatzParams, PathNormalization};
use bilink::{BipartiteGraph, Pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracles;
use crate::{all_pairs, random_graph};

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} cases, max error {:.3e} (tolerance {:.0e})",
            self.name, self.cases, self.max_error, self.tolerance
        )
    }
}

type Outcome = Result<SuiteResult, String>;

fn err(e: bilink::Error) -> String {
    e.to_string()
}

fn graph_sized(rng: &mut ChaCha8Rng, max_left: usize, max_right: usize) -> BipartiteGraph {
    let left = rng.gen_range(1..=max_left);
    let right = rng.gen_range(1..=max_right);
    let p = rng.gen_range(0.15..0.85);
    random_graph(rng, left, right, p)
}

/// L3, L5, L7 (both normalizations) and LP against explicit walk
/// enumeration on graphs of at most 12 nodes. Errors are relative to
/// `max(1, |oracle|)` since unnormalized walk counts reach the tens of thousands.
pub fn path_indices(graphs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    let epsilon = 0.001;
    for _ in 0..graphs {
        let g = graph_sized(&mut rng, 6, 6);
        let pairs = all_pairs(&g);
        for norm in [PathNormalization::SqrtDegree, PathNormalization::None] {
            for length in [3, 5, 7] {
                let got = score_path_index(&g, &pairs, length, norm).map_err(err)?;
                for u in 0..g.left_count() {
                    let want = oracles::walk_scores(&g, u, length, norm);
                    for (p, s) in pairs.iter().zip(&got.scores).filter(|(p, _)| p.left as usize == u) {
                        let w = want[p.right as usize];
                        max_error = max_error.max((s - w).abs() / w.abs().max(1.0));
                    }
                }
            }
        }
        let lp = score_lp(&g, epsilon, &pairs).map_err(err)?;
        for u in 0..g.left_count() {
            let want = oracles::walk_scores(&g, u, 3, PathNormalization::None);
            for (p, s) in pairs.iter().zip(&lp.scores).filter(|(p, _)| p.left as usize == u) {
                let w = epsilon * want[p.right as usize];
                max_error = max_error.max((s - w).abs() / w.abs().max(1.0));
            }
        }
    }
    Ok(SuiteResult {
        name: "L3/L5/L7/LP vs walk enumeration",
        cases: graphs,
        max_error,
        tolerance: 1e-12,
    })
}

/// Katz against the dense `(I - αA)^-1 - I` on graphs of at most 15 nodes.
pub fn katz(graphs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    for _ in 0..graphs {
        let g = graph_sized(&mut rng, 7, 8);
        let rho = oracles::spectral_radius(&g);
        let alpha = if rho > 0.0 { rng.gen_range(0.1..0.6) / rho } else { 0.3 };
        let params = KatzParams {
            alpha,
            max_length: 201,
            tolerance: 1e-15,
        };
        let pairs = all_pairs(&g);
        let got = score_katz(&g, &params, &pairs).map_err(err)?;
        let want = oracles::katz_matrix(&g, alpha);
        let nl = g.left_count();
        for (p, s) in pairs.iter().zip(&got.scores) {
            max_error = max_error.max((s - want[(p.left as usize, nl + p.right as usize)]).abs());
        }
    }
    Ok(SuiteResult {
        name: "Katz vs dense inverse",
        cases: graphs,
        max_error,
        tolerance: 1e-8,
    })
}

/// With nothing removed the reconstruction must return the adjacency.
pub fn spm_zero_perturbation(graphs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    for _ in 0..graphs {
        let g = graph_sized(&mut rng, 8, 8);
        let pairs = all_pairs(&g);
        let (scores, _) = reconstruct(&g, &[], &pairs, 1e-10).map_err(err)?;
        for (p, s) in pairs.iter().zip(scores) {
            let a = f64::from(u8::from(g.has_edge(p.left as usize, p.right as usize)));
            max_error = max_error.max((s - a).abs());
        }
    }
    Ok(SuiteResult {
        name: "SPM zero-perturbation residual",
        cases: graphs,
        max_error,
        tolerance: 1e-8,
    })
}

/// Perturbed reconstruction against a dense oracle on 10-node graphs.
pub fn spm_dense(graphs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    let mut cases = 0;
    while cases < graphs {
        let left = rng.gen_range(3..=7);
        let p = rng.gen_range(0.3..0.8);
        let g = random_graph(&mut rng, left, 10 - left, p);
        let edges: Vec<Pair> = g.edges().collect();
        if edges.len() < 2 {
            continue;
        }
        cases += 1;
        let k = rng.gen_range(1..=edges.len().min(4));
        let removed: Vec<Pair> = rand::seq::index::sample(&mut rng, edges.len(), k)
            .into_iter()
            .map(|i| edges[i])
            .collect();
        let pairs = all_pairs(&g);
        let (scores, _) = reconstruct(&g, &removed, &pairs, 1e-10).map_err(err)?;
        let removed_ids: Vec<(usize, usize)> = removed.iter().map(|p| (p.left as usize, p.right as usize)).collect();
        let want = oracles::spm_matrix(&g, &removed_ids, 1e-10);
        let nl = g.left_count();
        for (p, s) in pairs.iter().zip(scores) {
            max_error = max_error.max((s - want[(p.left as usize, nl + p.right as usize)]).abs());
        }
    }
    Ok(SuiteResult {
        name: "SPM vs dense oracle (10 nodes)",
        cases,
        max_error,
        tolerance: 1e-8,
    })
}

/// AUROC and AUPR against pairwise counting and a threshold sweep, with
/// heavy ties in half of the instances.
pub fn metrics(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    for i in 0..instances {
        let n = rng.gen_range(2..=200);
        let levels = if i % 2 == 0 { rng.gen_range(1..6) } else { 0 };
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if levels > 0 {
                    f64::from(rng.gen_range(0..levels))
                } else {
                    rng.gen()
                }
            })
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let a = auroc(&scores, &labels).map_err(err)?;
        let p = aupr(&scores, &labels).map_err(err)?;
        max_error = max_error
            .max((a - oracles::pairwise_auroc(&scores, &labels)).abs())
            .max((p - oracles::threshold_aupr(&scores, &labels)).abs());
    }
    Ok(SuiteResult {
        name: "AUROC/AUPR vs pairwise and threshold oracles",
        cases: instances,
        max_error,
        tolerance: 1e-12,
    })
}

/// Brandes betweenness against all-pairs path counting, graphs of at most 10 nodes.
pub fn betweenness(graphs: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    for _ in 0..graphs {
        let g = graph_sized(&mut rng, 5, 5);
        let got = betweenness_centrality(&g);
        let want = oracles::all_pairs_betweenness(&g);
        for (a, b) in got.iter().zip(&want) {
            max_error = max_error.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    Ok(SuiteResult {
        name: "Brandes betweenness vs all-pairs oracle",
        cases: graphs,
        max_error,
        tolerance: 1e-12,
    })
}

fn relative_gradient_error(
    g: &BipartiteGraph,
    dim: usize,
    layers: usize,
    triplets: &[Triplet],
    rng: &mut ChaCha8Rng,
) -> Result<f64, String> {
    let propagator = Propagator::new(g);
    let (nl, nr) = (g.left_count(), g.right_count());
    let params: Vec<f64> = (0..(nl + nr) * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let table = |x: &[f64]| EmbeddingTable::new(dim, x[..nl * dim].to_vec(), x[nl * dim..].to_vec()).expect("shape");
    let l2 = 0.01;
    let (_, grad) = triplet_loss_and_grad(&propagator, &table(&params), layers, triplets, l2);
    let analytic: Vec<f64> = grad.values().collect();
    let numeric = oracles::finite_difference(
        |x| triplet_loss_and_grad(&propagator, &table(x), layers, triplets, l2).0,
        &params,
        1e-5,
    );
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    Ok(norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12))
}

fn random_triplets(g: &BipartiteGraph, count: usize, rng: &mut ChaCha8Rng) -> Vec<Triplet> {
    (0..count)
        .map(|_| Triplet {
            user: rng.gen_range(0..g.left_count()) as u32,
            positive: rng.gen_range(0..g.right_count()) as u32,
            negative: rng.gen_range(0..g.right_count()) as u32,
        })
        .collect()
}

/// Analytic BPR (no propagation) and LightGCN gradients against central
/// finite differences; the error is relative in the Euclidean norm.
pub fn gradients(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    for case in 0..cases {
        // BPR on a small random graph
        let g = random_graph(&mut rng, 3, 4, 0.6);
        let triplets = random_triplets(&g, 5, &mut rng);
        max_error = max_error.max(relative_gradient_error(&g, 3, 0, &triplets, &mut rng)?);

        // LightGCN on a 4-node graph with d = 2
        let square =
            BipartiteGraph::from_edges(2, 2, [Pair::new(0, 0), Pair::new(0, 1), Pair::new(1, 1)]).map_err(err)?;
        let triplets = random_triplets(&square, 3, &mut rng);
        max_error = max_error.max(relative_gradient_error(&square, 2, 1 + case % 3, &triplets, &mut rng)?);

        // LightGCN on a larger random graph
        let g = random_graph(&mut rng, 4, 5, 0.5);
        let triplets = random_triplets(&g, 6, &mut rng);
        max_error = max_error.max(relative_gradient_error(&g, 3, 3, &triplets, &mut rng)?);
    }
    Ok(SuiteResult {
        name: "BPR/LightGCN gradients vs finite differences",
        cases: 3 * cases,
        max_error,
        tolerance: 1e-4,
    })
}

/// Training loss after every boosting round never exceeds the previous one.
/// The reported error is the largest increase seen.
pub fn gbdt_monotone(fits: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0_f64;
    for fit in 0..fits {
        let rows = rng.gen_range(20..300);
        let cols = rng.gen_range(1..6);
        let values: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = FeatureMatrix::new(rows, cols, values).map_err(err)?;
        let mut labels: Vec<bool> = (0..rows)
            .map(|i| x.row(i).iter().sum::<f64>() + rng.gen_range(-0.5..0.5) > 0.0)
            .collect();
        labels[0] = true;
        labels[1] = false;
        let config = GbdtConfig {
            n_trees: rng.gen_range(1..60),
            max_depth: rng.gen_range(1..6),
            learning_rate: rng.gen_range(0.05..0.5),
            l2: if fit % 2 == 0 { 1.0 } else { 0.0 },
            min_child_weight: if fit % 3 == 0 { 0.0 } else { 1.0 },
            ..GbdtConfig::default()
        };
        let model = fit_gbdt_matrix(&x, &labels, &config, seed).map_err(err)?;
        for w in model.train_loss.windows(2) {
            max_error = max_error.max(w[1] - w[0]);
        }
    }
    Ok(SuiteResult {
        name: "GBDT loss non-increasing per round",
        cases: fits,
        max_error,
        tolerance: 0.0,
    })
}

/// Every suite at the sizes the reproduction checks call for.
pub fn all(seed: u64) -> Vec<(&'static str, Outcome)> {
    vec![
        ("paths", path_indices(200, seed)),
        ("katz", katz(100, seed)),
        ("spm-zero", spm_zero_perturbation(50, seed)),
        ("spm-dense", spm_dense(50, seed)),
        ("metrics", metrics(100, seed)),
        ("betweenness", betweenness(50, seed)),
        ("gradients", gradients(20, seed)),
        ("gbdt", gbdt_monotone(50, seed)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(outcome: Outcome) {
        let r = outcome.unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn paths_match_walks() {
        check(path_indices(200, 1));
    }

    #[test]
    fn katz_matches_inverse() {
        check(katz(100, 2));
    }

    #[test]
    fn spm_matches_dense() {
        check(spm_zero_perturbation(50, 3));
        check(spm_dense(50, 3));
    }

    #[test]
    fn metrics_match_oracles() {
        check(metrics(100, 4));
    }

    #[test]
    fn betweenness_matches_all_pairs() {
        check(betweenness(50, 5));
    }

    #[test]
    fn gradients_match_finite_differences() {
        check(gradients(20, 6));
    }

    #[test]
    fn gbdt_loss_is_monotone() {
        check(gbdt_monotone(50, 7));
    }
}
