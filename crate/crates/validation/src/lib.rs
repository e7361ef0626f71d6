//! Slow, direct reference implementations used to check the `bilink`
//! library, and the equivalence suites built on them.

pub mod oracles;
pub mod suites;

use bilink::{BipartiteGraph, Pair};
use rand::Rng;

/// Random bipartite graph with the given side sizes; each pair is an edge
/// with probability `p`.
pub fn random_graph(rng: &mut impl Rng, left: usize, right: usize, p: f64) -> BipartiteGraph {
    let edges: Vec<Pair> = (0..left)
        .flat_map(|u| (0..right).map(move |v| Pair::new(u, v)))
        .filter(|_| rng.gen::<f64>() < p)
        .collect();
    BipartiteGraph::from_edges(left, right, edges).expect("valid edges")
}

/// Every cross-side pair `(u, v)` in ascending order.
pub fn all_pairs(graph: &BipartiteGraph) -> Vec<Pair> {
    (0..graph.left_count())
        .flat_map(|u| (0..graph.right_count()).map(move |v| Pair::new(u, v)))
        .collect()
}
