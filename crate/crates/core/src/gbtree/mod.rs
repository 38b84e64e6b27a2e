//! Second-order gradient-boosted decision trees for binary logistic classification.

mod ensemble;
mod format;
mod objective;
mod params;
mod tree;

pub use ensemble::{fingerprint, sample_round, sample_size, train_ensemble, FeatureRange, GBTModel, TrainingMeta};
pub use format::{from_json, load_model, save_model, to_json, FORMAT_NAME, FORMAT_VERSION};
pub use objective::{
    admissible, leaf_weight, logistic_grad_hess, logit, mean_logloss, sigmoid, soft_threshold, split_gain, GradHess,
};
pub use params::{Hyperparams, PARAM_NAMES};
pub use tree::{find_best_split, train_tree, Direction, Node, SplitCandidate, Tree};
