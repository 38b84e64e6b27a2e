//! SHAP attributions, global importance, top-k selection and tree export.
//!
//! Attributions live in margin (log-odds) space, where they add up exactly to
//! the model output.

mod export;
mod ranking;
mod treeshap;

pub use export::{explanation_meta_json, write_explanations_csv, write_ranking_csv, write_tree_csv, ExplanationMeta};
pub use ranking::{
    explain_rows, mean_abs_shap, ranking_from_explanations, representative_tree, top_k_features, tree_table,
    FeatureRanking, RepresentativeTree, TreeTableRow,
};
pub use treeshap::{child_fraction, expected_value, tree_shap, tree_shap_single, ShapExplanation, TreeExplainer};
