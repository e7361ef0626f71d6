//! Recommendation models whose user–item scores double as link scores.
//!
//! Both models score a pair by the inner product of its two embedding
//! vectors. BPR trains the vectors directly; LightGCN trains base vectors
//! and scores with their layer-averaged propagation over the graph.

mod embedding;
mod propagate;
mod train;

pub use embedding::{embedding_scores, scores_from_embeddings, EmbeddingTable};
pub use propagate::{propagate_lightgcn, Propagator};
pub use train::{train_bpr, train_lightgcn, triplet_loss_and_grad, Optimizer, TrainConfig, TrainedEmbeddings, Triplet};
