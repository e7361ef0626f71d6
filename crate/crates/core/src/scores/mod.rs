//! Heuristic link scores and the score table they produce.
//!
//! Every scorer except SPM works one left node at a time: it computes a
//! dense row over the right side for that node and reads off the queried
//! pairs, so the full `|U| x |V|` score matrix is never materialized.

mod paths;
mod simple;
pub mod spm;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Pair};

pub(crate) use paths::check_katz_alpha;
pub use paths::{score_katz, score_lp, score_path_index, spectral_radius, KatzParams, PathNormalization};
pub use simple::{score_dist, score_pa};
pub use spm::{score_spm, SpmParams};

/// Scores assigned by one method to a set of candidate pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub method: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub graph_fingerprint: String,
    pub pairs: Vec<Pair>,
    pub scores: Vec<f64>,
}

impl ScoreTable {
    /// Checks that pairs and scores line up, pairs are unique and every
    /// score is finite.
    pub fn new(
        method: impl Into<String>,
        params: serde_json::Value,
        seed: Option<u64>,
        graph: &BipartiteGraph,
        pairs: Vec<Pair>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        if pairs.len() != scores.len() {
            return Err(Error::Precondition(format!(
                "{} pairs but {} scores",
                pairs.len(),
                scores.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteScore(i));
        }
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("score table pairs are not unique".into()));
        }
        Ok(ScoreTable {
            method: method.into(),
            params,
            seed,
            graph_fingerprint: graph.fingerprint(),
            pairs,
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Writes `<left>\t<right>\t<score>` lines under a `#` header carrying
    /// the method, its parameters, the seed and the graph fingerprint.
    pub fn write_tsv(&self, graph: &BipartiteGraph, path: &Path) -> Result<()> {
        self.write_tsv_annotated(graph, path, &[])
    }

    /// As [`ScoreTable::write_tsv`], with extra `# key: value` header lines.
    pub fn write_tsv_annotated(&self, graph: &BipartiteGraph, path: &Path, notes: &[(&str, &str)]) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "# method: {}", self.method).map_err(io)?;
        writeln!(out, "# params: {}", self.params).map_err(io)?;
        match self.seed {
            Some(seed) => writeln!(out, "# seed: {seed}").map_err(io)?,
            None => writeln!(out, "# seed: none").map_err(io)?,
        }
        writeln!(out, "# graph: {}", self.graph_fingerprint).map_err(io)?;
        for (key, value) in notes {
            writeln!(out, "# {key}: {value}").map_err(io)?;
        }
        for (p, s) in self.pairs.iter().zip(&self.scores) {
            writeln!(
                out,
                "{}\t{}\t{}",
                graph.left_label(p.left as usize),
                graph.right_label(p.right as usize),
                s
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// The `n` highest-scoring pairs. Ties go to the smaller `(left, right)`.
pub fn rank_and_select(table: &ScoreTable, n: usize) -> Result<Vec<Pair>> {
    if n > table.len() {
        return Err(Error::Capacity {
            requested: n,
            available: table.len(),
        });
    }
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        table.scores[b]
            .total_cmp(&table.scores[a])
            .then(table.pairs[a].cmp(&table.pairs[b]))
    });
    Ok(order[..n].iter().map(|&i| table.pairs[i]).collect())
}

/// Computes one dense right-side row per distinct left node in `pairs` and
/// gathers the requested entries. `row` receives a zeroed buffer of
/// length `right_count`.
pub(crate) fn score_per_left<F>(pairs: &[Pair], right_count: usize, row: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_unstable_by_key(|&i| pairs[i]);
    let groups: Vec<&[usize]> = order.chunk_by(|&a, &b| pairs[a].left == pairs[b].left).collect();

    let gathered: Vec<Vec<f64>> = groups
        .par_iter()
        .map_init(
            || vec![0.0; right_count],
            |buf, idxs| {
                buf.iter_mut().for_each(|x| *x = 0.0);
                row(pairs[idxs[0]].left as usize, buf)?;
                Ok(idxs.iter().map(|&i| buf[pairs[i].right as usize]).collect())
            },
        )
        .collect::<Result<_>>()?;

    let mut scores = vec![0.0; pairs.len()];
    for (idxs, values) in groups.iter().zip(gathered) {
        for (&i, v) in idxs.iter().zip(values) {
            scores[i] = v;
        }
    }
    Ok(scores)
}

pub(crate) fn check_pairs(graph: &BipartiteGraph, pairs: &[Pair]) -> Result<()> {
    match pairs
        .iter()
        .find(|p| p.left as usize >= graph.left_count() || p.right as usize >= graph.right_count())
    {
        Some(p) => Err(Error::IdOutOfRange {
            left: p.left as usize,
            right: p.right as usize,
            left_count: graph.left_count(),
            right_count: graph.right_count(),
        }),
        None => Ok(()),
    }
}
