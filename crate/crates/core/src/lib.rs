//! Triage toolkit: boosted-tree severity and mortality models for COVID-19
//! admission data, with exact TreeSHAP explanations, an imbalance-aware data
//! pipeline, evaluation/cross-validation harness, mixed-type clustering and an
//! HTTP prediction service.

pub mod cluster;
pub mod data;
pub mod error;
pub mod explain;
pub mod gbtree;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod service;
pub mod synth;

pub use error::{Error, Result};
