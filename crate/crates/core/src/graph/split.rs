use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{load, write_pairs_tsv, BipartiteGraph, EdgeFormat, Pair};
use crate::error::{Error, Result};

/// Observed links partitioned into a training part and a held-out part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train_edges: Vec<Pair>,
    pub test_edges: Vec<Pair>,
    pub seed: u64,
    pub test_fraction: f64,
}

#[derive(Serialize, Deserialize)]
struct SplitSidecar {
    seed: u64,
    test_fraction: f64,
    train_count: usize,
    test_count: usize,
    graph_fingerprint: String,
}

/// Number of held-out edges for a left node of degree `degree`:
/// `clamp(round(fraction * degree), 1, degree - 1)`.
pub fn test_count_for_degree(degree: usize, fraction: f64) -> usize {
    let raw = (fraction * degree as f64).round() as usize;
    raw.clamp(1, degree.saturating_sub(1).max(1))
}

/// Holds out a fraction of the links of every left node, so that each left
/// node keeps at least one link on both sides of the split.
pub fn split_per_left_node(graph: &BipartiteGraph, test_fraction: f64, seed: u64) -> Result<EdgeSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if let Some(u) = (0..graph.left_count()).find(|&u| graph.left_degree(u) < 2) {
        return Err(Error::SplitInfeasible {
            node: graph.left_label(u).to_string(),
            degree: graph.left_degree(u),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_edges = Vec::with_capacity(graph.edge_count());
    let mut test_edges = Vec::new();
    let mut scratch: Vec<u32> = Vec::new();
    for u in 0..graph.left_count() {
        scratch.clear();
        scratch.extend_from_slice(graph.left_neighbors(u));
        let n_test = test_count_for_degree(scratch.len(), test_fraction);
        let (held, kept) = scratch.partial_shuffle(&mut rng, n_test);
        test_edges.extend(held.iter().map(|&v| Pair {
            left: u as u32,
            right: v,
        }));
        train_edges.extend(kept.iter().map(|&v| Pair {
            left: u as u32,
            right: v,
        }));
    }
    train_edges.sort_unstable();
    test_edges.sort_unstable();

    Ok(EdgeSplit {
        train_edges,
        test_edges,
        seed,
        test_fraction,
    })
}

impl EdgeSplit {
    /// The training graph over the full node sets of `graph`.
    pub fn train_graph(&self, graph: &BipartiteGraph) -> Result<BipartiteGraph> {
        graph.with_edges(self.train_edges.iter().copied())
    }

    /// Writes `train.tsv`, `test.tsv` and `split.json` into `dir`.
    pub fn save(&self, graph: &BipartiteGraph, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_pairs_tsv(graph, self.train_edges.iter().copied(), &dir.join("train.tsv"))?;
        write_pairs_tsv(graph, self.test_edges.iter().copied(), &dir.join("test.tsv"))?;
        let sidecar = SplitSidecar {
            seed: self.seed,
            test_fraction: self.test_fraction,
            train_count: self.train_edges.len(),
            test_count: self.test_edges.len(),
            graph_fingerprint: graph.fingerprint(),
        };
        let path = dir.join("split.json");
        fs::write(&path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&path, e))
    }

    /// Reads a split written by [`EdgeSplit::save`] against the graph it
    /// was made from.
    pub fn load(graph: &BipartiteGraph, dir: &Path) -> Result<Self> {
        let path = dir.join("split.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let sidecar: SplitSidecar = serde_json::from_str(&text)?;
        if sidecar.graph_fingerprint != graph.fingerprint() {
            return Err(Error::Precondition(format!(
                "split was made from graph {}, not {}",
                sidecar.graph_fingerprint,
                graph.fingerprint()
            )));
        }
        let left_ids: HashMap<&str, u32> = graph
            .left_labels()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let right_ids: HashMap<&str, u32> = graph
            .right_labels()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let read_side = |name: &str| -> Result<Vec<Pair>> {
            let path = dir.join(name);
            let side = load::load_edge_list(&path, EdgeFormat::TsvPair);
            // an empty side is legal only when the sidecar says so
            let side = match side {
                Err(Error::EmptyGraph(_)) => return Ok(Vec::new()),
                other => other?,
            };
            let mut pairs = side
                .edges()
                .map(|e| {
                    let l = side.left_label(e.left as usize);
                    let r = side.right_label(e.right as usize);
                    match (left_ids.get(l), right_ids.get(r)) {
                        (Some(&left), Some(&right)) => Ok(Pair { left, right }),
                        _ => Err(Error::Precondition(format!("{name}: unknown edge {l} -> {r}"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            pairs.sort_unstable();
            Ok(pairs)
        };
        let split = EdgeSplit {
            train_edges: read_side("train.tsv")?,
            test_edges: read_side("test.tsv")?,
            seed: sidecar.seed,
            test_fraction: sidecar.test_fraction,
        };
        if split.train_edges.len() != sidecar.train_count || split.test_edges.len() != sidecar.test_count {
            return Err(Error::Precondition(
                "split files disagree with split.json counts".into(),
            ));
        }
        Ok(split)
    }
}

/// Every cross-side pair that is not a training edge: the held-out links
/// plus all pairs never observed.
pub fn candidate_pairs(graph: &BipartiteGraph, split: &EdgeSplit) -> Vec<Pair> {
    let (left_count, right_count) = (graph.left_count(), graph.right_count());
    let mut out = Vec::with_capacity((left_count * right_count).saturating_sub(split.train_edges.len()));
    let mut train = split.train_edges.iter().peekable();
    for u in 0..left_count {
        for v in 0..right_count {
            let pair = Pair::new(u, v);
            while train.peek().is_some_and(|&&t| t < pair) {
                train.next();
            }
            if train.peek() == Some(&&pair) {
                continue;
            }
            out.push(pair);
        }
    }
    out
}
