use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Pair};
use crate::scores::ScoreTable;

/// Row-major latent vectors for both sides of the graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dim must be at least 1".into()));
        }
        for side in [&left, &right] {
            if side.len() % dim != 0 {
                return Err(Error::Schema {
                    expected: side.len().div_ceil(dim) * dim,
                    actual: side.len(),
                });
            }
        }
        if left.iter().chain(&right).any(|x| !x.is_finite()) {
            return Err(Error::DegenerateData("embedding has a non-finite entry".into()));
        }
        Ok(EmbeddingTable { dim, left, right })
    }

    pub fn zeros(left_count: usize, right_count: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            left: vec![0.0; left_count * dim],
            right: vec![0.0; right_count * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn left_count(&self) -> usize {
        self.left.len() / self.dim
    }

    pub fn right_count(&self) -> usize {
        self.right.len() / self.dim
    }

    pub fn left_vector(&self, u: usize) -> &[f64] {
        &self.left[u * self.dim..(u + 1) * self.dim]
    }

    pub fn right_vector(&self, v: usize) -> &[f64] {
        &self.right[v * self.dim..(v + 1) * self.dim]
    }

    pub fn left_values(&self) -> &[f64] {
        &self.left
    }

    pub fn right_values(&self) -> &[f64] {
        &self.right
    }

    pub(crate) fn left_mut(&mut self) -> &mut [f64] {
        &mut self.left
    }

    pub(crate) fn right_mut(&mut self) -> &mut [f64] {
        &mut self.right
    }

    /// All parameters, left side first.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.left.iter().chain(&self.right).copied()
    }

    pub(crate) fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.left.iter_mut().chain(self.right.iter_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn score(&self, u: usize, v: usize) -> f64 {
        dot(self.left_vector(u), self.right_vector(v))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &EmbeddingTable, b: f64) -> Result<EmbeddingTable> {
        self.check_shape(other)?;
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Ok(EmbeddingTable {
            dim: self.dim,
            left: mix(&self.left, &other.left),
            right: mix(&self.right, &other.right),
        })
    }

    pub(crate) fn check_shape(&self, other: &EmbeddingTable) -> Result<()> {
        if self.dim != other.dim || self.left.len() != other.left.len() || self.right.len() != other.right.len() {
            return Err(Error::Schema {
                expected: self.parameter_count(),
                actual: other.parameter_count(),
            });
        }
        Ok(())
    }

    /// TSV dump: a `# dim left right` header, then one `L|R\tindex\tvalues...` row per node.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "# {} {} {}", self.dim, self.left_count(), self.right_count()).map_err(io)?;
        for (tag, side) in [("L", &self.left), ("R", &self.right)] {
            for (i, row) in side.chunks(self.dim).enumerate() {
                write!(out, "{tag}\t{i}").map_err(io)?;
                for x in row {
                    write!(out, "\t{x:?}").map_err(io)?;
                }
                writeln!(out).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?
            .map_err(|e| Error::io(path, e))?;
        let dims: Vec<usize> = header
            .trim_start_matches('#')
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(1, format!("bad header: {e}")))?;
        let [dim, nl, nr] = dims[..] else {
            return Err(parse_err(1, "header needs dim, left and right counts".into()));
        };
        let mut left = Vec::with_capacity(nl * dim);
        let mut right = Vec::with_capacity(nr * dim);
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != dim + 2 {
                return Err(parse_err(line_no, format!("expected {} fields", dim + 2)));
            }
            let side = match fields[0] {
                "L" => &mut left,
                "R" => &mut right,
                other => return Err(parse_err(line_no, format!("unknown side {other:?}"))),
            };
            let index: usize = fields[1].parse().map_err(|e| parse_err(line_no, format!("{e}")))?;
            if index * dim != side.len() {
                return Err(parse_err(line_no, "rows out of order".into()));
            }
            for f in &fields[2..] {
                side.push(f.parse().map_err(|e| parse_err(line_no, format!("{e}")))?);
            }
        }
        if left.len() != nl * dim || right.len() != nr * dim {
            return Err(parse_err(0, "row count does not match header".into()));
        }
        EmbeddingTable::new(dim, left, right)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨e_u, e_v⟩` for each pair.
pub fn embedding_scores(embeddings: &EmbeddingTable, pairs: &[Pair]) -> Result<Vec<f64>> {
    let (nl, nr) = (embeddings.left_count(), embeddings.right_count());
    if let Some(p) = pairs.iter().find(|p| p.left as usize >= nl || p.right as usize >= nr) {
        let (id, count) = if p.left as usize >= nl {
            (p.left as usize, nl)
        } else {
            (p.right as usize, nr)
        };
        return Err(Error::Bounds { id, count });
    }
    Ok(pairs
        .par_iter()
        .map(|p| embeddings.score(p.left as usize, p.right as usize))
        .collect())
}

pub fn scores_from_embeddings(
    embeddings: &EmbeddingTable,
    graph: &BipartiteGraph,
    pairs: Vec<Pair>,
    method: &str,
    params: serde_json::Value,
    seed: Option<u64>,
) -> Result<ScoreTable> {
    let scores = embedding_scores(embeddings, &pairs)?;
    ScoreTable::new(method, params, seed, graph, pairs, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_and_parallel_vectors() {
        let e = EmbeddingTable::new(2, vec![1.0, 0.0, 0.6, 0.8], vec![0.0, 1.0, 0.6, 0.8]).unwrap();
        let s = embedding_scores(&e, &[Pair::new(0, 0), Pair::new(1, 1)]).unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_ids() {
        let e = EmbeddingTable::zeros(2, 3, 4);
        assert!(matches!(
            embedding_scores(&e, &[Pair::new(2, 0)]),
            Err(Error::Bounds { id: 2, count: 2 })
        ));
        assert!(matches!(
            embedding_scores(&e, &[Pair::new(0, 3)]),
            Err(Error::Bounds { id: 3, count: 3 })
        ));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(EmbeddingTable::new(0, vec![], vec![]).is_err());
        assert!(EmbeddingTable::new(2, vec![1.0], vec![]).is_err());
        assert!(EmbeddingTable::new(1, vec![f64::NAN], vec![]).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.tsv");
        let e = EmbeddingTable::new(2, vec![0.1, -2.5e-17, 3.0, 4.0], vec![1.0 / 3.0, 7.0]).unwrap();
        e.write_tsv(&path).unwrap();
        assert_eq!(EmbeddingTable::read_tsv(&path).unwrap(), e);
    }
}
