//! The biased-attention transformer: configuration, parameters, forward and
//! backward passes, Adam, training and prediction.

mod adam;
mod checkpoint;
mod config;
mod network;
mod params;
mod train;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use checkpoint::{Checkpoint, CheckpointHeader, TensorEntry};
pub use config::ModelConfig;
pub use network::{
    backward, biased_softmax, forward, forward_unbiased, forward_with_similarity, loss, mean_loss,
    scaled_scores, ForwardTrace,
};
pub use params::{positional_encoding, Gradients, LayerParams, Parameters};
pub use train::{
    predict, prediction_starts, train, train_with, training_windows, windows_at, EpochRecord,
    Prediction, TrainLog, Window, WindowTrace,
};
