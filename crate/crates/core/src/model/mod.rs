//! Multilayer perceptron: initialization, training, evaluation, persistence.

mod artifact;
mod metrics;
mod mlp;
mod train;

pub use artifact::{
    digest_hex, load_artifact, save_artifact, ModelArtifact, TrainingMetadata, FORMAT_NAME,
    FORMAT_VERSION,
};
pub use metrics::{evaluate, Metrics};
pub use mlp::{
    backward, batch_loss, forward, init_model, loss_bce, sigmoid, validate_dims, Activation, Dense,
    Gradients, MlpModel, DEFAULT_DIMS, LOSS_EPS,
};
pub use train::{
    predict_class, stratified_split, train, EpochRecord, History, Labeled, TrainConfig,
};
