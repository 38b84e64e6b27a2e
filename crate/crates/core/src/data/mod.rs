//! Cohort ingestion, cleaning, encoding, labelling and sampling.

mod clean;
mod cohort;
mod matrix;
mod sampling;
mod schema;

pub use clean::{drop_missing, select_biomarker_subset, DEFAULT_MIN_COVERAGE};
pub use cohort::{is_missing_token, load_csv, read_cohort, Cohort, PatientRecord, Stratum, AGE, GENDER};
pub use matrix::{derive_labels, encode, Dataset, EncodeOptions, FeatureMatrix, LabelVector, Task, SYMPTOM_PREFIX};
pub use sampling::{
    apportion, default_undersample_targets, format_targets, parse_targets, stratified_split, undersample_majority,
    StratumTargets,
};
pub use schema::{FeatureKind, FeatureSpec, Schema};
