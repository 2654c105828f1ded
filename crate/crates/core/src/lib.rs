//! Benchmarking toolkit for agricultural downstream tasks.
//!
//! Builds predictor tables from remote-sensing and embedding inputs, then
//! trains tree ensembles on them and scores the models under grouped
//! cross-validation or transfer splits.

pub mod cli;
pub mod climate;
pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod featurize;
pub mod harmonics;
pub mod indices;
pub mod models;
pub mod numeric;
pub mod seed;
pub mod synth;
