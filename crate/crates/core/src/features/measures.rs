//! Node centralities over the bipartite graph viewed as one undirected
//! graph on `|U| + |V|` nodes (left node `u` is node `u`, right node `v`
//! is node `|U| + v`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::scores::check_katz_alpha;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureConfig {
    pub damping: f64,
    pub pagerank_tolerance: f64,
    pub eigenvector_tolerance: f64,
    pub katz_alpha: f64,
    pub katz_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            damping: 0.85,
            pagerank_tolerance: 1e-9,
            eigenvector_tolerance: 1e-12,
            katz_alpha: 0.001,
            katz_tolerance: 1e-12,
            max_iterations: 10_000,
        }
    }
}

/// Six centralities per node, indexed in unified node order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeMeasures {
    pub pagerank: Vec<f64>,
    pub degree: Vec<f64>,
    pub closeness: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub katz: Vec<f64>,
}

pub const MEASURE_NAMES: [&str; 6] = ["pagerank", "degree", "closeness", "betweenness", "eigenvector", "katz"];

impl NodeMeasures {
    pub fn node_count(&self) -> usize {
        self.pagerank.len()
    }

    /// The six values for one node, in [`MEASURE_NAMES`] order.
    pub fn row(&self, node: usize) -> [f64; 6] {
        [
            self.pagerank[node],
            self.degree[node],
            self.closeness[node],
            self.betweenness[node],
            self.eigenvector[node],
            self.katz[node],
        ]
    }
}

/// Undirected adjacency over unified node ids.
pub(crate) struct Unified {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Unified {
    pub(crate) fn new(graph: &BipartiteGraph) -> Self {
        let nl = graph.left_count();
        let n = graph.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * graph.edge_count());
        offsets.push(0);
        for u in 0..nl {
            targets.extend(graph.left_neighbors(u).iter().map(|&v| nl as u32 + v));
            offsets.push(targets.len());
        }
        for v in 0..graph.right_count() {
            targets.extend_from_slice(graph.right_neighbors(v));
            offsets.push(targets.len());
        }
        Unified { offsets, targets }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn neighbors(&self, node: usize) -> &[u32] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.neighbors(i).iter().map(|&j| x[j as usize]).sum())
            .collect()
    }
}

pub fn compute_node_measures(graph: &BipartiteGraph, config: &MeasureConfig) -> Result<NodeMeasures> {
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph("no nodes to measure".into()));
    }
    let adj = Unified::new(graph);
    let (betweenness, closeness) = shortest_path_measures(&adj);
    Ok(NodeMeasures {
        pagerank: pagerank(&adj, config)?,
        degree: degree_centrality(&adj),
        closeness,
        betweenness,
        eigenvector: eigenvector_centrality(&adj, config)?,
        katz: katz_centrality(graph, &adj, config)?,
    })
}

fn pagerank(adj: &Unified, config: &MeasureConfig) -> Result<Vec<f64>> {
    let n = adj.len();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..config.max_iterations {
        let dangling: f64 = (0..n).filter(|&i| adj.degree(i) == 0).map(|i| x[i]).sum();
        let share: Vec<f64> = (0..n)
            .map(|i| match adj.degree(i) {
                0 => 0.0,
                k => x[i] / k as f64,
            })
            .collect();
        let base = (1.0 - config.damping) / nf + config.damping * dangling / nf;
        let next: Vec<f64> = (0..n)
            .map(|i| base + config.damping * adj.neighbors(i).iter().map(|&j| share[j as usize]).sum::<f64>())
            .collect();
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < config.pagerank_tolerance {
            let total: f64 = x.iter().sum();
            return Ok(x.into_iter().map(|v| v / total).collect());
        }
    }
    Err(Error::Convergence("pagerank", config.max_iterations))
}

fn degree_centrality(adj: &Unified) -> Vec<f64> {
    let n = adj.len();
    let scale = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    (0..n).map(|i| adj.degree(i) as f64 * scale).collect()
}

/// Brandes dependency accumulation from one source. Returns the source's
/// contribution to every node's betweenness and its closeness.
fn single_source(adj: &Unified, source: usize, delta_out: &mut [f64]) -> f64 {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut sigma = vec![0.0_f64; n];
    let mut order = Vec::with_capacity(n);
    dist[source] = 0;
    sigma[source] = 1.0;
    order.push(source);
    let mut head = 0;
    while head < order.len() {
        let w = order[head];
        head += 1;
        for &t in adj.neighbors(w) {
            let t = t as usize;
            if dist[t] == usize::MAX {
                dist[t] = dist[w] + 1;
                order.push(t);
            }
            if dist[t] == dist[w] + 1 {
                sigma[t] += sigma[w];
            }
        }
    }
    let mut delta = vec![0.0_f64; n];
    for &w in order.iter().rev() {
        for &p in adj.neighbors(w) {
            let p = p as usize;
            if dist[p] != usize::MAX && dist[p] + 1 == dist[w] {
                delta[p] += sigma[p] / sigma[w] * (1.0 + delta[w]);
            }
        }
        if w != source {
            delta_out[w] += delta[w];
        }
    }

    // Wasserman-Faust: (r / (n-1)) * (r / sum of distances)
    let reachable = order.len() - 1;
    let total: usize = order.iter().map(|&w| dist[w]).sum();
    if total == 0 || n < 2 {
        0.0
    } else {
        let r = reachable as f64;
        (r / (n - 1) as f64) * (r / total as f64)
    }
}

const SOURCE_CHUNK: usize = 64;

/// Betweenness (unnormalized, each unordered pair counted once) and
/// closeness for every node. Sources are processed in fixed chunks and
/// reduced in chunk order, so the result does not depend on scheduling.
fn shortest_path_measures(adj: &Unified) -> (Vec<f64>, Vec<f64>) {
    let n = adj.len();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let closeness = chunk.iter().map(|&s| single_source(adj, s, &mut acc)).collect();
            (acc, closeness)
        })
        .collect();
    let mut betweenness = vec![0.0; n];
    let mut closeness = Vec::with_capacity(n);
    for (acc, c) in partials {
        betweenness.iter_mut().zip(acc).for_each(|(b, a)| *b += a);
        closeness.extend(c);
    }
    betweenness.iter_mut().for_each(|b| *b /= 2.0);
    (betweenness, closeness)
}

pub fn betweenness_centrality(graph: &BipartiteGraph) -> Vec<f64> {
    shortest_path_measures(&Unified::new(graph)).0
}

pub fn closeness_centrality(graph: &BipartiteGraph) -> Vec<f64> {
    shortest_path_measures(&Unified::new(graph)).1
}

fn normalize_l2(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Dominant eigenvector of `A`, found by power iteration on `A + I`
/// (a bipartite `A` has `-ρ` in its spectrum, which would make plain power
/// iteration oscillate). Unit L2 norm, largest-magnitude entry positive.
fn eigenvector_centrality(adj: &Unified, config: &MeasureConfig) -> Result<Vec<f64>> {
    let n = adj.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..config.max_iterations {
        let ax = adj.apply(&x);
        let mut next: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a + b).collect();
        normalize_l2(&mut next);
        let change = next.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        x = next;
        if change < config.eigenvector_tolerance {
            let pivot = x
                .iter()
                .copied()
                .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if pivot < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(x);
        }
    }
    Err(Error::Convergence("eigenvector centrality", config.max_iterations))
}

/// Fixed point of `x = alpha A x + 1`, scaled to unit L2 norm.
fn katz_centrality(graph: &BipartiteGraph, adj: &Unified, config: &MeasureConfig) -> Result<Vec<f64>> {
    check_katz_alpha(graph, config.katz_alpha)?;
    let n = adj.len();
    let mut x = vec![0.0; n];
    for _ in 0..config.max_iterations {
        let next: Vec<f64> = adj.apply(&x).into_iter().map(|a| config.katz_alpha * a + 1.0).collect();
        let change = next.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        x = next;
        if change < config.katz_tolerance {
            normalize_l2(&mut x);
            return Ok(x);
        }
    }
    Err(Error::Convergence("katz centrality", config.max_iterations))
}
