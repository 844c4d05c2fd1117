//! Multilingual LSTM language model with per-language embedding vectors.

mod checkpoint;
mod config;
mod model;
mod train;
mod vocab;

pub use checkpoint::{load_model, parse_vectors_csv, save_model, vectors_csv, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::TrainConfig;
pub use model::{Layout, ModelShape, ParamBlock};
pub use train::{
    embedding_distance, grad_check, train, train_model, Example, LanguageModel, TrainedModel,
    GRAD_CHECK_COORDINATES, GRAD_CHECK_FLOOR,
};
pub use vocab::{Vocab, EOS_ID, UNK, UNK_ID};
