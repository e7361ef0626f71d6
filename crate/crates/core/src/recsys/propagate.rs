use rayon::prelude::*;

use super::embedding::EmbeddingTable;
use crate::error::Result;
use crate::graph::BipartiteGraph;

/// The symmetric normalized adjacency `D^-1/2 A D^-1/2` of the bipartite
/// graph, acting on embedding tables. Zero-degree nodes map to zero.
#[derive(Clone, Debug)]
pub struct Propagator {
    left_count: usize,
    right_count: usize,
    left_offsets: Vec<usize>,
    left_targets: Vec<u32>,
    left_weights: Vec<f64>,
    right_offsets: Vec<usize>,
    right_targets: Vec<u32>,
    right_weights: Vec<f64>,
}

fn inv_sqrt(d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        1.0 / (d as f64).sqrt()
    }
}

impl Propagator {
    pub fn new(graph: &BipartiteGraph) -> Self {
        let (nl, nr) = (graph.left_count(), graph.right_count());
        let mut p = Propagator {
            left_count: nl,
            right_count: nr,
            left_offsets: vec![0],
            left_targets: Vec::with_capacity(graph.edge_count()),
            left_weights: Vec::with_capacity(graph.edge_count()),
            right_offsets: vec![0],
            right_targets: Vec::with_capacity(graph.edge_count()),
            right_weights: Vec::with_capacity(graph.edge_count()),
        };
        for u in 0..nl {
            let du = inv_sqrt(graph.left_degree(u));
            for &v in graph.left_neighbors(u) {
                p.left_targets.push(v);
                p.left_weights.push(du * inv_sqrt(graph.right_degree(v as usize)));
            }
            p.left_offsets.push(p.left_targets.len());
        }
        for v in 0..nr {
            let dv = inv_sqrt(graph.right_degree(v));
            for &u in graph.right_neighbors(v) {
                p.right_targets.push(u);
                p.right_weights.push(dv * inv_sqrt(graph.left_degree(u as usize)));
            }
            p.right_offsets.push(p.right_targets.len());
        }
        p
    }

    fn check(&self, e: &EmbeddingTable) {
        assert_eq!(
            e.left_count(),
            self.left_count,
            "embedding left side does not match graph"
        );
        assert_eq!(
            e.right_count(),
            self.right_count,
            "embedding right side does not match graph"
        );
    }

    /// `P · E`, each output row gathered from its neighbours.
    pub fn apply(&self, e: &EmbeddingTable) -> EmbeddingTable {
        self.check(e);
        let d = e.dim();
        let mut out = EmbeddingTable::zeros(self.left_count, self.right_count, d);
        gather(
            &self.left_offsets,
            &self.left_targets,
            &self.left_weights,
            e.right_values(),
            out.left_mut(),
            d,
        );
        gather(
            &self.right_offsets,
            &self.right_targets,
            &self.right_weights,
            e.left_values(),
            out.right_mut(),
            d,
        );
        out
    }

    /// `Pᵀ · G`, each input row scattered to its neighbours.
    pub fn apply_transpose(&self, g: &EmbeddingTable) -> EmbeddingTable {
        self.check(g);
        let d = g.dim();
        let mut out = EmbeddingTable::zeros(self.left_count, self.right_count, d);
        scatter(
            &self.left_offsets,
            &self.left_targets,
            &self.left_weights,
            g.left_values(),
            out.right_mut(),
            d,
        );
        scatter(
            &self.right_offsets,
            &self.right_targets,
            &self.right_weights,
            g.right_values(),
            out.left_mut(),
            d,
        );
        out
    }
}

fn gather(offsets: &[usize], targets: &[u32], weights: &[f64], src: &[f64], dst: &mut [f64], d: usize) {
    dst.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
        for k in offsets[i]..offsets[i + 1] {
            let t = targets[k] as usize;
            let w = weights[k];
            row.iter_mut()
                .zip(&src[t * d..(t + 1) * d])
                .for_each(|(r, s)| *r += w * s);
        }
    });
}

fn scatter(offsets: &[usize], targets: &[u32], weights: &[f64], src: &[f64], dst: &mut [f64], d: usize) {
    for i in 0..offsets.len() - 1 {
        let row = &src[i * d..(i + 1) * d];
        for k in offsets[i]..offsets[i + 1] {
            let t = targets[k] as usize;
            let w = weights[k];
            dst[t * d..(t + 1) * d]
                .iter_mut()
                .zip(row)
                .for_each(|(o, s)| *o += w * s);
        }
    }
}

/// Mean of `E, P·E, ..., P^L·E`.
pub fn propagate_lightgcn(
    embeddings: &EmbeddingTable,
    graph: &BipartiteGraph,
    layers: usize,
) -> Result<EmbeddingTable> {
    Ok(propagate_with(&Propagator::new(graph), embeddings, layers))
}

pub(crate) fn propagate_with(p: &Propagator, e: &EmbeddingTable, layers: usize) -> EmbeddingTable {
    if layers == 0 {
        return e.clone();
    }
    let mut sum = e.clone();
    let mut current = e.clone();
    for _ in 0..layers {
        current = p.apply(&current);
        sum.values_mut().zip(current.values()).for_each(|(s, c)| *s += c);
    }
    let scale = 1.0 / (layers + 1) as f64;
    sum.values_mut().for_each(|s| *s *= scale);
    sum
}

/// Adjoint of [`propagate_with`]: maps a gradient on the output back to the input.
pub(crate) fn propagate_adjoint(p: &Propagator, g: &EmbeddingTable, layers: usize) -> EmbeddingTable {
    if layers == 0 {
        return g.clone();
    }
    let mut sum = g.clone();
    let mut current = g.clone();
    for _ in 0..layers {
        current = p.apply_transpose(&current);
        sum.values_mut().zip(current.values()).for_each(|(s, c)| *s += c);
    }
    let scale = 1.0 / (layers + 1) as f64;
    sum.values_mut().for_each(|s| *s *= scale);
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Pair;

    #[test]
    fn single_edge_hand_propagation() {
        let g = BipartiteGraph::from_edges(1, 1, [Pair::new(0, 0)]).unwrap();
        let e = EmbeddingTable::new(1, vec![1.0], vec![0.0]).unwrap();
        let one = Propagator::new(&g).apply(&e);
        assert_eq!((one.left_values()[0], one.right_values()[0]), (0.0, 1.0));
        let out = propagate_lightgcn(&e, &g, 1).unwrap();
        assert_eq!(out.left_values(), &[0.5]);
        assert_eq!(out.right_values(), &[0.5]);
    }

    #[test]
    fn zero_layers_is_identity() {
        let g = BipartiteGraph::from_edges(2, 1, [Pair::new(0, 0)]).unwrap();
        let e = EmbeddingTable::new(2, vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0]).unwrap();
        assert_eq!(propagate_lightgcn(&e, &g, 0).unwrap(), e);
    }

    #[test]
    fn isolated_nodes_propagate_zero() {
        let g = BipartiteGraph::from_edges(2, 2, [Pair::new(0, 0)]).unwrap();
        let e = EmbeddingTable::new(1, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let out = Propagator::new(&g).apply(&e);
        assert_eq!(out.left_values(), &[1.0, 0.0]);
        assert_eq!(out.right_values(), &[1.0, 0.0]);
    }
}
