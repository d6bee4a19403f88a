//! Web spam classification with small feed-forward networks.

pub mod cli;
pub mod dataset;
pub mod experiment;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod model_file;
pub mod network;
pub mod trainers;
