//! Reference computations written for clarity, not speed.

use std::collections::VecDeque;

use bilink::scores::PathNormalization;
use bilink::BipartiteGraph;
use nalgebra::{DMatrix, SymmetricEigen};

/// Dense symmetric adjacency, left nodes first.
pub fn adjacency(graph: &BipartiteGraph) -> DMatrix<f64> {
    let nl = graph.left_count();
    let n = graph.node_count();
    let mut a = DMatrix::zeros(n, n);
    for e in graph.edges() {
        let (i, j) = (e.left as usize, nl + e.right as usize);
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

fn degrees(graph: &BipartiteGraph) -> Vec<usize> {
    let mut d = graph.left_degrees();
    d.extend(graph.right_degrees());
    d
}

/// For left node `u`, the sum over every walk of `length` edges ending at
/// each right node, each walk weighted by `1/sqrt(product of intermediate
/// degrees)` (or 1). Walks are enumerated one by one.
pub fn walk_scores(graph: &BipartiteGraph, u: usize, length: usize, norm: PathNormalization) -> Vec<f64> {
    let nl = graph.left_count();
    let deg = degrees(graph);
    let neighbours = |x: usize| -> Vec<usize> {
        if x < nl {
            graph.left_neighbors(x).iter().map(|&v| nl + v as usize).collect()
        } else {
            graph.right_neighbors(x - nl).iter().map(|&w| w as usize).collect()
        }
    };
    let mut scores = vec![0.0; graph.right_count()];
    // (current node, steps taken, product of intermediate degrees)
    let mut stack = vec![(u, 0, 1.0_f64)];
    while let Some((node, steps, product)) = stack.pop() {
        if steps == length {
            if node >= nl {
                scores[node - nl] += 1.0 / product.sqrt();
            }
            continue;
        }
        for next in neighbours(node) {
            let intermediate = steps + 1 < length;
            let factor = match (intermediate, norm) {
                (true, PathNormalization::SqrtDegree) => deg[next] as f64,
                _ => 1.0,
            };
            stack.push((next, steps + 1, product * factor));
        }
    }
    scores
}

/// Largest adjacency eigenvalue.
pub fn spectral_radius(graph: &BipartiteGraph) -> f64 {
    let eig = SymmetricEigen::new(adjacency(graph));
    eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()))
}

/// `(I - αA)^-1 - I` by dense inversion.
pub fn katz_matrix(graph: &BipartiteGraph, alpha: f64) -> DMatrix<f64> {
    let n = graph.node_count();
    let id = DMatrix::<f64>::identity(n, n);
    let m = &id - adjacency(graph) * alpha;
    m.try_inverse().expect("I - αA is invertible below 1/ρ") - id
}

/// Dense perturbed matrix after removing `removed` (left, right) links,
/// with corrections averaged inside eigenvalue clusters closer than `tol`.
pub fn spm_matrix(graph: &BipartiteGraph, removed: &[(usize, usize)], tol: f64) -> DMatrix<f64> {
    let nl = graph.left_count();
    let n = graph.node_count();
    let mut delta_a = DMatrix::zeros(n, n);
    for &(u, v) in removed {
        delta_a[(u, nl + v)] = 1.0;
        delta_a[(nl + v, u)] = 1.0;
    }
    let residual = adjacency(graph) - &delta_a;
    let eig = SymmetricEigen::new(residual);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambda: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors: Vec<_> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    let mut shift: Vec<f64> = vectors.iter().map(|x| (x.transpose() * &delta_a * x)[(0, 0)]).collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && lambda[end] - lambda[end - 1] < tol {
            end += 1;
        }
        let mean = shift[start..end].iter().sum::<f64>() / (end - start) as f64;
        shift[start..end].iter_mut().for_each(|s| *s = mean);
        start = end;
    }
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        out += &vectors[k] * vectors[k].transpose() * (lambda[k] + shift[k]);
    }
    out
}

/// `P(s+ > s-) + P(s+ = s-)/2` over all positive/negative pairs.
pub fn pairwise_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &a) in scores.iter().enumerate() {
        for (j, &b) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if a > b {
                    wins += 1.0;
                } else if a == b {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Step-wise area under the precision-recall curve, recomputing precision
/// and recall from scratch at every distinct score threshold.
pub fn threshold_aupr(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let mut area = 0.0;
    let mut last_recall = 0.0;
    for t in thresholds {
        let selected: Vec<bool> = scores.iter().map(|&s| s >= t).collect();
        let tp = selected.iter().zip(labels).filter(|(&s, &l)| s && l).count() as f64;
        let predicted = selected.iter().filter(|&&s| s).count() as f64;
        let recall = tp / positives;
        area += (recall - last_recall) * (tp / predicted);
        last_recall = recall;
    }
    area
}

/// Breadth-first distances from `source` over the unified node ids.
fn distances(a: &DMatrix<f64>, source: usize) -> Vec<Option<usize>> {
    let n = a.nrows();
    let mut dist = vec![None; n];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if a[(x, y)] != 0.0 && dist[y].is_none() {
                dist[y] = Some(dist[x].unwrap() + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Betweenness over unordered source/target pairs, from explicit
/// shortest-path counts between all node pairs.
pub fn all_pairs_betweenness(graph: &BipartiteGraph) -> Vec<f64> {
    let a = adjacency(graph);
    let n = a.nrows();
    let dist: Vec<Vec<Option<usize>>> = (0..n).map(|s| distances(&a, s)).collect();
    // sigma[s][t]: number of shortest s-t paths
    let mut sigma = vec![vec![0.0_f64; n]; n];
    for s in 0..n {
        let mut by_distance: Vec<usize> = (0..n).filter(|&t| dist[s][t].is_some()).collect();
        by_distance.sort_by_key(|&t| dist[s][t]);
        for &t in &by_distance {
            sigma[s][t] = if t == s {
                1.0
            } else {
                (0..n)
                    .filter(|&w| a[(w, t)] != 0.0 && dist[s][w].is_some_and(|d| d + 1 == dist[s][t].unwrap()))
                    .map(|w| sigma[s][w])
                    .sum()
            };
        }
    }
    (0..n)
        .map(|v| {
            let mut total = 0.0;
            for s in 0..n {
                for t in s + 1..n {
                    if s == v || t == v {
                        continue;
                    }
                    if let (Some(st), Some(sv), Some(vt)) = (dist[s][t], dist[s][v], dist[v][t]) {
                        if sv + vt == st {
                            total += sigma[s][v] * sigma[v][t] / sigma[s][t];
                        }
                    }
                }
            }
            total
        })
        .collect()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use bilink::Pair;

    fn example() -> BipartiteGraph {
        // u0-v0, u0-v1, u1-v1, u1-v2
        let edges = [(0, 0), (0, 1), (1, 1), (1, 2)];
        BipartiteGraph::from_edges(2, 3, edges.iter().map(|&(u, v)| Pair::new(u, v))).unwrap()
    }

    #[test]
    fn walk_oracle_by_hand() {
        // u0 - v1 - u1 - v2: intermediate degrees 2 and 2
        assert!((walk_scores(&example(), 0, 3, PathNormalization::SqrtDegree)[2] - 0.5).abs() < 1e-15);
        assert_eq!(walk_scores(&example(), 0, 3, PathNormalization::None)[2], 1.0);
    }

    #[test]
    fn metric_oracles_by_hand() {
        assert_eq!(pairwise_auroc(&[0.9, 0.8, 0.1], &[true, false, false]), 1.0);
        assert_eq!(
            threshold_aupr(&[4.0, 3.0, 2.0, 1.0], &[false, false, false, true]),
            0.25
        );
        assert_eq!(threshold_aupr(&[1.0; 5], &[true, true, false, false, false]), 0.4);
    }

    #[test]
    fn star_betweenness_by_hand() {
        let star = BipartiteGraph::from_edges(1, 4, (0..4).map(|v| Pair::new(0, v))).unwrap();
        assert_eq!(all_pairs_betweenness(&star), vec![6.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn katz_oracle_single_edge() {
        let g = BipartiteGraph::from_edges(1, 1, [Pair::new(0, 0)]).unwrap();
        // α / (1 - α²) at α = 0.5
        assert!((katz_matrix(&g, 0.5)[(0, 1)] - 2.0 / 3.0).abs() < 1e-15);
    }
}
