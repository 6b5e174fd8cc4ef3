use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GiatError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    /// Window length `L`.
    pub seq_len: usize,
    pub n_curves: usize,
    pub n_classes: usize,
    pub lambda: f64,
    pub lambda_trainable: bool,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Add the bias in every encoder layer, or only the first.
    pub apply_bias_all_layers: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 128,
            seq_len: 64,
            n_curves: 3,
            n_classes: 3,
            lambda: 1.0,
            lambda_trainable: false,
            learning_rate: 1e-4,
            max_epochs: 200,
            patience: 10,
            seed: 0,
            apply_bias_all_layers: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GiatError::Config(m.to_string()));
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return bad("d_model, n_heads, n_layers and d_ff must be positive");
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be divisible by n_heads");
        }
        if self.seq_len == 0 || self.n_curves == 0 || self.n_classes == 0 {
            return bad("seq_len, n_curves and n_classes must be positive");
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad("lambda must be finite and ≥ 0");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be > 0");
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return bad("max_epochs and patience must be positive");
        }
        Ok(())
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Whether layer `layer` receives the additive bias.
    pub fn layer_is_biased(&self, layer: usize) -> bool {
        self.apply_bias_all_layers || layer == 0
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
