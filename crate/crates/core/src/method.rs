//! Every link scorer behind one serializable enum.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{build_pair_dataset, compute_node_measures, pair_features, MeasureConfig};
use crate::graph::{BipartiteGraph, Pair};
use crate::learners::{fit_gbdt, fit_reduction, predict_gbdt, score_reduction, GbdtConfig, ReductionKind};
use crate::recsys::{embedding_scores, train_bpr, train_lightgcn, TrainConfig};
use crate::scores::{
    score_dist, score_katz, score_lp, score_pa, score_path_index, score_spm, KatzParams, PathNormalization, ScoreTable,
    SpmParams,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathParams {
    pub normalization: PathNormalization,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LpParams {
    pub epsilon: f64,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams { epsilon: 0.001 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub model: GbdtConfig,
    pub measures: MeasureConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionParams {
    pub measures: MeasureConfig,
}

/// A scoring method and its parameters, e.g. `{"method": "katz", "alpha": 0.001}`.
///
/// Methods that draw random numbers (SPM, the feature learners' negative
/// sampling, embedding training) use the seed passed to [`Method::score`];
/// the `seed` field of an embedding [`TrainConfig`] is overwritten by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Katz(KatzParams),
    L3(PathParams),
    L5(PathParams),
    L7(PathParams),
    Lp(LpParams),
    Pa,
    Dist,
    Spm(SpmParams),
    Gbdt(GbdtParams),
    Pca(ReductionParams),
    Lda(ReductionParams),
    Bpr(TrainConfig),
    #[serde(rename = "lightgcn")]
    LightGcn(TrainConfig),
}

impl Method {
    /// Default-parameter method for a name as used in configs and on the command line.
    pub fn from_name(name: &str) -> Option<Method> {
        serde_json::from_value(serde_json::json!({ "method": name.to_ascii_lowercase() })).ok()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Katz(_) => "katz",
            Method::L3(_) => "l3",
            Method::L5(_) => "l5",
            Method::L7(_) => "l7",
            Method::Lp(_) => "lp",
            Method::Pa => "pa",
            Method::Dist => "dist",
            Method::Spm(_) => "spm",
            Method::Gbdt(_) => "gbdt",
            Method::Pca(_) => "pca",
            Method::Lda(_) => "lda",
            Method::Bpr(_) => "bpr",
            Method::LightGcn(_) => "lightgcn",
        }
    }

    pub fn uses_seed(&self) -> bool {
        matches!(
            self,
            Method::Spm(_) | Method::Gbdt(_) | Method::Pca(_) | Method::Lda(_) | Method::Bpr(_) | Method::LightGcn(_)
        )
    }

    /// Scores `pairs` using only `train`.
    pub fn score(&self, train: &BipartiteGraph, pairs: Vec<Pair>, seed: u64) -> Result<ScoreTable> {
        let scores = match self {
            Method::Katz(p) => score_katz(train, p, &pairs)?.scores,
            Method::L3(p) => score_path_index(train, &pairs, 3, p.normalization)?.scores,
            Method::L5(p) => score_path_index(train, &pairs, 5, p.normalization)?.scores,
            Method::L7(p) => score_path_index(train, &pairs, 7, p.normalization)?.scores,
            Method::Lp(p) => score_lp(train, p.epsilon, &pairs)?.scores,
            Method::Pa => score_pa(train, &pairs)?.scores,
            Method::Dist => score_dist(train, &pairs)?.scores,
            Method::Spm(p) => score_spm(train, p, &pairs, seed)?.scores,
            Method::Gbdt(p) => {
                let measures = compute_node_measures(train, &p.measures)?;
                let data = build_pair_dataset(train, &measures, seed)?;
                let model = fit_gbdt(&data, &p.model, seed)?;
                predict_gbdt(&model, &pair_features(train, &measures, &pairs)?)?
            }
            Method::Pca(p) | Method::Lda(p) => {
                let kind = if matches!(self, Method::Pca(_)) {
                    ReductionKind::Pca
                } else {
                    ReductionKind::Lda
                };
                let measures = compute_node_measures(train, &p.measures)?;
                let data = build_pair_dataset(train, &measures, seed)?;
                let model = fit_reduction(&data, kind)?;
                score_reduction(&model, &pair_features(train, &measures, &pairs)?)?
            }
            Method::Bpr(c) => {
                let trained = train_bpr(train, &TrainConfig { seed, ..c.clone() })?;
                embedding_scores(&trained.propagated, &pairs)?
            }
            Method::LightGcn(c) => {
                let trained = train_lightgcn(train, &TrainConfig { seed, ..c.clone() })?;
                embedding_scores(&trained.propagated, &pairs)?
            }
        };
        let seed = self.uses_seed().then_some(seed);
        ScoreTable::new(self.name(), serde_json::to_value(self)?, seed, train, pairs, scores)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in [
            "katz", "l3", "l5", "l7", "lp", "pa", "dist", "spm", "gbdt", "pca", "lda", "bpr", "lightgcn",
        ] {
            assert_eq!(Method::from_name(name).unwrap().name(), name);
        }
        assert!(Method::from_name("xgb").is_none());
    }

    #[test]
    fn parameters_parse_beside_the_tag() {
        let m: Method = serde_json::from_str(r#"{"method": "lp", "epsilon": 0.5}"#).unwrap();
        assert_eq!(m, Method::Lp(LpParams { epsilon: 0.5 }));
        let m: Method = serde_json::from_str(r#"{"method": "lightgcn", "layers": 0, "dim": 8}"#).unwrap();
        let Method::LightGcn(c) = m else { panic!() };
        assert_eq!((c.layers, c.dim, c.epochs), (0, 8, 300));
    }

    #[test]
    fn table_carries_method_and_seed() {
        let g = BipartiteGraph::from_edges(2, 2, [Pair::new(0, 0), Pair::new(1, 1), Pair::new(0, 1)]).unwrap();
        let t = Method::Pa.score(&g, vec![Pair::new(1, 0)], 9).unwrap();
        assert_eq!((t.method.as_str(), t.seed, t.scores[0]), ("pa", None, 1.0));
    }
}
