//! Two-sided graph storage.
//!
//! Edges always connect a left node (user) to a right node (item). Both
//! orientations are kept in compressed sparse row form with sorted
//! neighbor lists, so degree lookups, neighbor scans and membership tests
//! are cheap from either side.

mod load;
mod split;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use load::{load_edge_list, parse_edge_list, EdgeFormat};
pub use split::{candidate_pairs, split_per_left_node, test_count_for_degree, EdgeSplit};

/// A cross-side node pair `(left, right)`. Ordering is lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub left: u32,
    pub right: u32,
}

impl Pair {
    pub fn new(left: usize, right: usize) -> Self {
        Pair {
            left: left as u32,
            right: right as u32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    left_offsets: Vec<usize>,
    left_targets: Vec<u32>,
    right_offsets: Vec<usize>,
    right_targets: Vec<u32>,
    left_labels: Vec<String>,
    right_labels: Vec<String>,
}

/// Average-degree figures under the two common conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegreeStats {
    /// `|L| / |U|`
    pub mean_left_degree: f64,
    /// `|L| / |V|`
    pub mean_right_degree: f64,
    /// `2|L| / (|U| + |V|)`
    pub mean_degree: f64,
    pub min_left_degree: usize,
    pub max_left_degree: usize,
}

fn build_csr(count: usize, edges: impl Iterator<Item = (u32, u32)> + Clone) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; count + 1];
    for (src, _) in edges.clone() {
        offsets[src as usize + 1] += 1;
    }
    for i in 0..count {
        offsets[i + 1] += offsets[i];
    }
    let mut targets = vec![0u32; offsets[count]];
    let mut cursor = offsets[..count].to_vec();
    for (src, dst) in edges {
        targets[cursor[src as usize]] = dst;
        cursor[src as usize] += 1;
    }
    (offsets, targets)
}

impl BipartiteGraph {
    /// Builds a graph from an edge list. Duplicate edges collapse to one.
    /// Nodes are labelled by their index.
    pub fn from_edges(left_count: usize, right_count: usize, edges: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let left_labels = (0..left_count).map(|i| i.to_string()).collect();
        let right_labels = (0..right_count).map(|i| i.to_string()).collect();
        Self::from_labelled_edges(left_labels, right_labels, edges)
    }

    pub fn from_labelled_edges(
        left_labels: Vec<String>,
        right_labels: Vec<String>,
        edges: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        let left_count = left_labels.len();
        let right_count = right_labels.len();
        let mut edges: Vec<Pair> = edges.into_iter().collect();
        for e in &edges {
            if e.left as usize >= left_count || e.right as usize >= right_count {
                return Err(Error::IdOutOfRange {
                    left: e.left as usize,
                    right: e.right as usize,
                    left_count,
                    right_count,
                });
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let (left_offsets, left_targets) = build_csr(left_count, edges.iter().map(|e| (e.left, e.right)));
        // edges are sorted by (left, right), so each right list comes out sorted by left
        let (right_offsets, right_targets) = build_csr(right_count, edges.iter().map(|e| (e.right, e.left)));

        Ok(BipartiteGraph {
            left_offsets,
            left_targets,
            right_offsets,
            right_targets,
            left_labels,
            right_labels,
        })
    }

    /// Same node sets and labels, different edges.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = Pair>) -> Result<Self> {
        Self::from_labelled_edges(self.left_labels.clone(), self.right_labels.clone(), edges)
    }

    pub fn left_count(&self) -> usize {
        self.left_offsets.len() - 1
    }

    pub fn right_count(&self) -> usize {
        self.right_offsets.len() - 1
    }

    /// `|U| + |V|`
    pub fn node_count(&self) -> usize {
        self.left_count() + self.right_count()
    }

    pub fn edge_count(&self) -> usize {
        self.left_targets.len()
    }

    pub fn left_neighbors(&self, left: usize) -> &[u32] {
        &self.left_targets[self.left_offsets[left]..self.left_offsets[left + 1]]
    }

    pub fn right_neighbors(&self, right: usize) -> &[u32] {
        &self.right_targets[self.right_offsets[right]..self.right_offsets[right + 1]]
    }

    pub fn left_degree(&self, left: usize) -> usize {
        self.left_offsets[left + 1] - self.left_offsets[left]
    }

    pub fn right_degree(&self, right: usize) -> usize {
        self.right_offsets[right + 1] - self.right_offsets[right]
    }

    pub fn left_degrees(&self) -> Vec<usize> {
        (0..self.left_count()).map(|u| self.left_degree(u)).collect()
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        (0..self.right_count()).map(|v| self.right_degree(v)).collect()
    }

    pub fn has_edge(&self, left: usize, right: usize) -> bool {
        self.left_neighbors(left).binary_search(&(right as u32)).is_ok()
    }

    /// All edges in ascending `(left, right)` order.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.left_count()).flat_map(move |u| {
            self.left_neighbors(u).iter().map(move |&v| Pair {
                left: u as u32,
                right: v,
            })
        })
    }

    pub fn left_label(&self, left: usize) -> &str {
        &self.left_labels[left]
    }

    pub fn right_label(&self, right: usize) -> &str {
        &self.right_labels[right]
    }

    pub fn left_labels(&self) -> &[String] {
        &self.left_labels
    }

    pub fn right_labels(&self) -> &[String] {
        &self.right_labels
    }

    /// `|L| / (|U| * |V|)`
    pub fn density(&self) -> Result<f64> {
        let (left, right) = (self.left_count(), self.right_count());
        if left == 0 || right == 0 {
            return Err(Error::UndefinedDensity { left, right });
        }
        Ok(self.edge_count() as f64 / (left as f64 * right as f64))
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let edges = self.edge_count() as f64;
        let degrees = self.left_degrees();
        DegreeStats {
            mean_left_degree: edges / self.left_count().max(1) as f64,
            mean_right_degree: edges / self.right_count().max(1) as f64,
            mean_degree: 2.0 * edges / self.node_count().max(1) as f64,
            min_left_degree: degrees.iter().copied().min().unwrap_or(0),
            max_left_degree: degrees.iter().copied().max().unwrap_or(0),
        }
    }

    /// Short content hash over the node counts and the edge set.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.left_count() as u64).to_le_bytes());
        hasher.update((self.right_count() as u64).to_le_bytes());
        for e in self.edges() {
            hasher.update(e.left.to_le_bytes());
            hasher.update(e.right.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Drops left nodes whose degree is below `min_left_degree`, then any
    /// right node left without edges. Single pass; ids are re-densified in
    /// their previous relative order.
    pub fn min_degree_filter(&self, min_left_degree: usize) -> Result<Self> {
        let mut left_map = vec![u32::MAX; self.left_count()];
        let mut left_labels = Vec::new();
        for (u, slot) in left_map.iter_mut().enumerate() {
            if self.left_degree(u) >= min_left_degree {
                *slot = left_labels.len() as u32;
                left_labels.push(self.left_labels[u].clone());
            }
        }
        if left_labels.is_empty() {
            return Err(Error::EmptyGraph(format!(
                "no left node has degree >= {min_left_degree}"
            )));
        }
        let mut right_used = vec![false; self.right_count()];
        for e in self.edges().filter(|e| left_map[e.left as usize] != u32::MAX) {
            right_used[e.right as usize] = true;
        }
        let mut right_map = vec![u32::MAX; self.right_count()];
        let mut right_labels = Vec::new();
        for v in 0..self.right_count() {
            if right_used[v] {
                right_map[v] = right_labels.len() as u32;
                right_labels.push(self.right_labels[v].clone());
            }
        }
        let edges: Vec<Pair> = self
            .edges()
            .filter(|e| left_map[e.left as usize] != u32::MAX)
            .map(|e| Pair {
                left: left_map[e.left as usize],
                right: right_map[e.right as usize],
            })
            .collect();
        Self::from_labelled_edges(left_labels, right_labels, edges)
    }

    /// Writes the edge set as `tsv_pair` using the original node labels.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        write_pairs_tsv(self, self.edges(), path)
    }
}

pub(crate) fn write_pairs_tsv(graph: &BipartiteGraph, pairs: impl Iterator<Item = Pair>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in pairs {
        writeln!(
            out,
            "{}\t{}",
            graph.left_label(p.left as usize),
            graph.right_label(p.right as usize)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
