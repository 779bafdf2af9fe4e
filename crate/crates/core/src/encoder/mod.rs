//! Desk-scale journal-classification encoder: signed hashed bag-of-words
//! features, one ReLU hidden layer whose activations are the document
//! representation, and a softmax head over journal classes trained with
//! plain cross-entropy.

pub mod featurize;
mod model;
mod train;

pub use featurize::{featurize, hash_token, tokenize, SparseVector};
pub use model::{
    ce_loss, loss_and_gradients, mean_loss, softmax, ClassProbabilities, Forward, Gradients, ToyEncoderParams,
    CHECKPOINT_MAGIC, PROB_FLOOR,
};
pub use train::{extract, initial_params, record_features, train, TrainConfig, TrainOutput};
