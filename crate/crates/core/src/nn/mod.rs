//! Classifier built from structure-element layers and a dense head.

mod config;
mod model;
mod train;

pub use config::{Activation, BranchConfig, BranchKind, ModelConfig};
pub use model::{argmax, softmax, Branch, Dense, Model, Sample};
pub use train::{
    evaluate, repeated_runs, train, train_on_split, Checkpoint, Dataset, EpochMetrics,
};
