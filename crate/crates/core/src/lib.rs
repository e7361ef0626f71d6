//! Link prediction on bipartite graphs.
//!
//! The crate covers the whole experimental loop: loading and splitting a
//! two-sided graph, scoring candidate pairs with path-based heuristics,
//! spectral perturbation, topological-feature learners or trained
//! recommendation embeddings, and evaluating the rankings with AUPR and
//! AUROC.

pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod learners;
pub mod method;
pub mod recsys;
pub mod scores;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, EdgeSplit, Pair};
pub use method::Method;
