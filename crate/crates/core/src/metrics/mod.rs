//! Classification metrics, ROC/PR curves, repeated stratified cross-validation
//! and grid search.

mod confusion;
mod curves;
mod cv;
mod export;
mod grid;

pub use confusion::{confusion, scalar_metrics, threshold_scores, ConfusionMatrix, MetricsReport};
pub use curves::{pr_curve, roc_auc, roc_curve, Curve, CurveKind, CurvePoint};
pub use cv::{repeated_stratified_cv, stratified_folds, CvConfig, CvReport, FoldScore, Interval};
pub use export::{cv_summary, write_curve_csv, write_cv_csv, write_grid_csv, write_metrics_csv};
pub use grid::{expand_grid, grid_search, parse_grid, Grid, GridCandidate, GridPoint, GridSearchResult, SelectionRule};
