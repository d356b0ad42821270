//! Dense networks, losses and training for the site classifier, the
//! plausibility ranker and the pair scorer.

pub mod io;
pub mod loss;
pub mod mlp;
pub mod optim;
pub mod train;

use thiserror::Error;

pub use io::{load_model, read_model, save_model, write_model, ContrastiveModel, ModelFile, ModelMeta, TrainedModel};
pub use loss::{contrastive_loss, pair_score, sigmoid, siamese_loss, PointLoss};
pub use mlp::{Activation, Grads, Layer, Mlp, NetworkSpec};
pub use optim::Adam;
pub use train::{
    contrastive_gradients, gradients, siamese_gradients, train_classifier, train_contrastive, train_siamese,
    EpochRecord, LearningCurve, TrainConfig,
};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("input has dimension {found}, network expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("no training examples")]
    EmptyData,
    #[error("model format version {found} is not supported (expected {supported})")]
    Version { found: u32, supported: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Derives a sub-seed for a purpose (epoch, batch, network) from a run seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let bytes: Vec<u8> = parts.iter().flat_map(|p| p.to_le_bytes()).collect();
    crate::featurize::fnv1a(seed, &bytes)
}
