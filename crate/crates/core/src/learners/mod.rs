//! Supervised scorers over pair features.

mod gbdt;
mod reduction;

pub use gbdt::{fit_gbdt, fit_gbdt_matrix, predict_gbdt, GbdtConfig, GbdtModel, TreeNode};
pub use reduction::{fit_reduction, fit_reduction_matrix, score_reduction, LinearReduction, ReductionKind};
