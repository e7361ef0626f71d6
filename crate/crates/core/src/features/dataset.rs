use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::measures::{NodeMeasures, MEASURE_NAMES};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Pair};

/// Dense row-major matrix of feature rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Schema {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        Ok(FeatureMatrix { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Schema {
                    expected: cols,
                    actual: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }
}

/// Labelled pair features: six measures of each endpoint plus the
/// preferential-attachment score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    pub pairs: Vec<Pair>,
    pub features: FeatureMatrix,
    pub labels: Vec<bool>,
    pub feature_names: Vec<String>,
}

pub const PAIR_FEATURE_WIDTH: usize = 13;

pub fn pair_feature_names() -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(PAIR_FEATURE_WIDTH);
    for side in ["left", "right"] {
        names.extend(MEASURE_NAMES.iter().map(|m| format!("{side}_{m}")));
    }
    names.push("pa".into());
    names
}

/// Feature rows for arbitrary pairs. `measures` must come from `graph`.
pub fn pair_features(graph: &BipartiteGraph, measures: &NodeMeasures, pairs: &[Pair]) -> Result<FeatureMatrix> {
    if measures.node_count() != graph.node_count() {
        return Err(Error::Precondition(format!(
            "measures cover {} nodes, graph has {}",
            measures.node_count(),
            graph.node_count()
        )));
    }
    let nl = graph.left_count();
    let mut values = Vec::with_capacity(pairs.len() * PAIR_FEATURE_WIDTH);
    for p in pairs {
        let (u, v) = (p.left as usize, p.right as usize);
        values.extend(measures.row(u));
        values.extend(measures.row(nl + v));
        values.push((graph.left_degree(u) * graph.right_degree(v)) as f64);
    }
    FeatureMatrix::new(pairs.len(), PAIR_FEATURE_WIDTH, values)
}

/// `n` distinct uniformly random cross-side non-edges.
pub fn negative_sample(graph: &BipartiteGraph, n: usize, seed: u64) -> Result<Vec<Pair>> {
    let (nl, nr) = (graph.left_count(), graph.right_count());
    let available = nl * nr - graph.edge_count();
    if n > available {
        return Err(Error::Capacity {
            requested: n,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // rejection sampling stays cheap while at most half the non-edges are wanted
    if 2 * n <= available {
        let cap = 50 * n + 1_000;
        let mut chosen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n && attempts < cap {
            attempts += 1;
            let pair = Pair::new(rng.gen_range(0..nl), rng.gen_range(0..nr));
            if !graph.has_edge(pair.left as usize, pair.right as usize) && chosen.insert(pair) {
                out.push(pair);
            }
        }
        if out.len() == n {
            return Ok(out);
        }
    }

    let mut all: Vec<Pair> = (0..nl)
        .flat_map(|u| (0..nr).map(move |v| Pair::new(u, v)))
        .filter(|p| !graph.has_edge(p.left as usize, p.right as usize))
        .collect();
    let (picked, _) = all.partial_shuffle(&mut rng, n);
    Ok(picked.to_vec())
}

/// Every training edge as a positive and an equal number of sampled
/// non-edges as negatives, rows shuffled by `seed`.
pub fn build_pair_dataset(graph: &BipartiteGraph, measures: &NodeMeasures, seed: u64) -> Result<PairFeatures> {
    let positives: Vec<Pair> = graph.edges().collect();
    let negatives = negative_sample(graph, positives.len(), seed)?;
    let mut rows: Vec<(Pair, bool)> = positives
        .into_iter()
        .map(|p| (p, true))
        .chain(negatives.into_iter().map(|p| (p, false)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    rows.shuffle(&mut rng);

    let pairs: Vec<Pair> = rows.iter().map(|r| r.0).collect();
    let labels = rows.iter().map(|r| r.1).collect();
    let features = pair_features(graph, measures, &pairs)?;
    Ok(PairFeatures {
        pairs,
        features,
        labels,
        feature_names: pair_feature_names(),
    })
}

impl PairFeatures {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// CSV with a header; node labels first, label column last.
    pub fn write_csv(&self, graph: &BipartiteGraph, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec!["left".to_string(), "right".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push("label".into());
        writer.write_record(&header).map_err(|e| csv_error(path, e))?;
        for (i, p) in self.pairs.iter().enumerate() {
            let mut record = vec![
                graph.left_label(p.left as usize).to_string(),
                graph.right_label(p.right as usize).to_string(),
            ];
            record.extend(self.features.row(i).iter().map(f64::to_string));
            record.push(u8::from(self.labels[i]).to_string());
            writer.write_record(&record).map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Precondition(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_node_measures, MeasureConfig};
    use crate::scores::score_pa;

    fn sample_graph() -> BipartiteGraph {
        let edges = [
            (0, 0),
            (0, 1),
            (1, 1),
            (1, 2),
            (2, 2),
            (2, 3),
            (3, 0),
            (3, 3),
            (4, 4),
            (4, 1),
        ];
        BipartiteGraph::from_edges(5, 5, edges.iter().map(|&(u, v)| Pair::new(u, v))).unwrap()
    }

    #[test]
    fn complete_graph_has_no_negatives() {
        let g = BipartiteGraph::from_edges(2, 2, (0..2).flat_map(|u| (0..2).map(move |v| Pair::new(u, v)))).unwrap();
        assert!(matches!(negative_sample(&g, 1, 0), Err(Error::Capacity { .. })));
        assert!(negative_sample(&g, 0, 0).unwrap().is_empty());
    }

    #[test]
    fn negatives_are_distinct_non_edges() {
        let g = sample_graph();
        for n in [1, 5, 15] {
            let s = negative_sample(&g, n, 3).unwrap();
            assert_eq!(s.len(), n);
            assert!(s.iter().all(|p| !g.has_edge(p.left as usize, p.right as usize)));
            assert_eq!(s.iter().collect::<HashSet<_>>().len(), n);
        }
        assert_eq!(negative_sample(&g, 15, 3).unwrap(), negative_sample(&g, 15, 3).unwrap());
    }

    #[test]
    fn balanced_dataset_layout() {
        let g = sample_graph();
        let m = compute_node_measures(&g, &MeasureConfig::default()).unwrap();
        let data = build_pair_dataset(&g, &m, 1).unwrap();
        assert_eq!(data.pairs.len(), 20);
        assert_eq!(data.positives(), 10);
        assert_eq!(data.features.cols(), 13);
        assert_eq!(data.feature_names.len(), 13);

        let pa = score_pa(&g, &data.pairs).unwrap();
        let column: Vec<f64> = data.features.column(12).collect();
        assert_eq!(column, pa.scores);
        for (i, p) in data.pairs.iter().enumerate() {
            assert_eq!(data.labels[i], g.has_edge(p.left as usize, p.right as usize));
        }
    }
}
