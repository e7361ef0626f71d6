//! Ranking evaluation of scorers on held-out links, and the benchmark
//! harness that runs a whole dataset x method x seed matrix.

mod benchmark;
mod metrics;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::graph::{candidate_pairs, BipartiteGraph, EdgeSplit, Pair};
use crate::method::Method;
use crate::scores::ScoreTable;

pub use benchmark::{
    benchmark_run, read_results_csv, render_markdown, BenchmarkReport, CellResult, RESULTS_FILE, RUNTIMES_FILE,
    SUMMARY_FILE, WORKERS_ENV,
};
pub use metrics::{aupr, auroc};

/// Anything that can rank candidate pairs given only the training graph.
pub trait LinkScorer: Sync {
    fn name(&self) -> &str;
    /// Everything that determines the scores apart from graph and seed.
    fn params(&self) -> serde_json::Value;
    fn score(&self, train: &BipartiteGraph, pairs: Vec<Pair>, seed: u64) -> Result<ScoreTable>;
}

impl LinkScorer for Method {
    fn name(&self) -> &str {
        Method::name(self)
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("method serializes")
    }

    fn score(&self, train: &BipartiteGraph, pairs: Vec<Pair>, seed: u64) -> Result<ScoreTable> {
        Method::score(self, train, pairs, seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method_name: String,
    pub dataset_name: String,
    pub seed: u64,
    pub aupr: f64,
    pub auroc: f64,
    /// Wall-clock time of the scoring call alone.
    pub runtime_seconds: f64,
    pub n_positives: usize,
    pub n_candidates: usize,
    pub config_digest: String,
}

/// A split ready for scoring: the training graph, every candidate pair and
/// whether each candidate is a held-out link.
pub struct EvalContext {
    pub dataset_name: String,
    pub graph_fingerprint: String,
    pub seed: u64,
    pub test_fraction: f64,
    pub train: BipartiteGraph,
    pub candidates: Vec<Pair>,
    test_edges: Vec<Pair>,
}

impl EvalContext {
    pub fn new(dataset_name: &str, graph: &BipartiteGraph, split: &EdgeSplit) -> Result<Self> {
        let mut test_edges = split.test_edges.clone();
        test_edges.sort_unstable();
        Ok(EvalContext {
            dataset_name: dataset_name.to_string(),
            graph_fingerprint: graph.fingerprint(),
            seed: split.seed,
            test_fraction: split.test_fraction,
            train: split.train_graph(graph)?,
            candidates: candidate_pairs(graph, split),
            test_edges,
        })
    }

    pub fn is_test_edge(&self, pair: &Pair) -> bool {
        self.test_edges.binary_search(pair).is_ok()
    }

    pub fn digest(&self, scorer: &dyn LinkScorer) -> String {
        digest(&serde_json::json!({
            "dataset": self.dataset_name,
            "graph": self.graph_fingerprint,
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "method": scorer.name(),
            "params": scorer.params(),
        }))
    }

    /// Scores every candidate and compares the ranking with the held-out links.
    pub fn evaluate(&self, scorer: &dyn LinkScorer) -> Result<(EvalReport, ScoreTable)> {
        let start = Instant::now();
        let table = scorer.score(&self.train, self.candidates.clone(), self.seed)?;
        let runtime_seconds = start.elapsed().as_secs_f64();
        let labels: Vec<bool> = table.pairs.iter().map(|p| self.is_test_edge(p)).collect();
        let report = EvalReport {
            method_name: scorer.name().to_string(),
            dataset_name: self.dataset_name.clone(),
            seed: self.seed,
            aupr: aupr(&table.scores, &labels)?,
            auroc: auroc(&table.scores, &labels)?,
            runtime_seconds,
            n_positives: labels.iter().filter(|&&l| l).count(),
            n_candidates: labels.len(),
            config_digest: self.digest(scorer),
        };
        Ok((report, table))
    }
}

pub fn evaluate_method(
    dataset_name: &str,
    graph: &BipartiteGraph,
    split: &EdgeSplit,
    scorer: &dyn LinkScorer,
) -> Result<(EvalReport, ScoreTable)> {
    EvalContext::new(dataset_name, graph, split)?.evaluate(scorer)
}

/// First 16 hex digits of the SHA-256 of a JSON value's compact form.
pub fn digest(value: &serde_json::Value) -> String {
    let hash = Sha256::digest(value.to_string().as_bytes());
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}
