use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the multilingual language model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Dimension of the language vectors.
    pub lang_dim: usize,
    pub symbol_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Sequences per gradient step.
    pub batch_size: usize,
    /// Longest unrolled window; longer sentences are cut into windows that
    /// each start from a zero state.
    pub seq_len: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    /// Standard deviation of the Gaussian language-vector initialization.
    pub lang_init_std: f64,
    /// Feed the language vector to the second layer as well.
    pub lang_all_layers: bool,
    /// Minimum frequency for a symbol to get its own id at the raw level.
    pub raw_min_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lang_dim: 64,
            symbol_dim: 128,
            hidden_dim: 256,
            learning_rate: 0.5,
            batch_size: 16,
            seq_len: 64,
            epochs: 10,
            seed: 1,
            clip_norm: 5.0,
            lang_init_std: 0.1,
            lang_all_layers: false,
            raw_min_count: 2,
        }
    }
}

impl TrainConfig {
    /// Small model for desk-scale experiments and tests.
    pub fn desk() -> Self {
        TrainConfig {
            lang_dim: 8,
            symbol_dim: 16,
            hidden_dim: 32,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("lang_dim", self.lang_dim),
            ("symbol_dim", self.symbol_dim),
            ("hidden_dim", self.hidden_dim),
            ("batch_size", self.batch_size),
            ("seq_len", self.seq_len),
            ("epochs", self.epochs),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Validation(format!("train.{name} must be positive")));
            }
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("clip_norm", self.clip_norm),
            ("lang_init_std", self.lang_init_std),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("train.{name} must be positive")));
            }
        }
        Ok(())
    }
}
