//! Topological features for supervised link prediction: node centralities,
//! negative sampling and balanced pair datasets.

mod dataset;
mod measures;

pub use dataset::{
    build_pair_dataset, negative_sample, pair_feature_names, pair_features, FeatureMatrix, PairFeatures,
    PAIR_FEATURE_WIDTH,
};
pub use measures::{
    betweenness_centrality, closeness_centrality, compute_node_measures, MeasureConfig, NodeMeasures, MEASURE_NAMES,
};
