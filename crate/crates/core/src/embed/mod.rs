//! GloVe word embeddings trained from scratch.
//!
//! Pipeline: [`build_cooc`] accumulates distance-weighted co-occurrences,
//! [`train_glove`] fits the weighted least-squares objective with per-cell
//! AdaGrad, and [`WordVectors::most_similar`] answers cosine queries on the
//! summed main + context vectors.

mod cooc;
mod glove;
mod vectors;

pub use cooc::{build_cooc, CoocMatrix, EmbedVocab, MAX_WINDOW};
pub use glove::{glove_loss, glove_weight, train_glove, GloveGrad, GloveModel, GloveTrainLog, GloveTrainer, TrainMode};
pub use vectors::WordVectors;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum EmbedError {
    #[error("'{0}' is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("'{0}' has a zero vector")]
    ZeroVector(String),
    #[error("co-occurrence matrix is empty")]
    EmptyCooc,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// GloVe training settings. Only `window` and `min_sentence_len` vary across
/// the augmentation ensemble; the rest are shared defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GloveHyperparams {
    pub window: usize,
    pub min_sentence_len: usize,
    pub dim: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Words rarer than this are left out of the vocabulary.
    pub min_count: usize,
}

impl Default for GloveHyperparams {
    fn default() -> Self {
        GloveHyperparams {
            window: 5,
            min_sentence_len: 3,
            dim: 100,
            iterations: 50,
            learning_rate: 0.05,
            x_max: 100.0,
            alpha: 0.75,
            seed: 0,
            min_count: 1,
        }
    }
}

impl GloveHyperparams {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::InvalidHyperparams(m.into()));
        if self.window == 0 || self.window > MAX_WINDOW {
            return bad(&format!("window must be in 1..={MAX_WINDOW}"));
        }
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.x_max > 0.0) {
            return bad("x_max must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.min_count == 0 || self.min_sentence_len == 0 {
            return bad("min_count and min_sentence_len must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        GloveHyperparams::default().validate().unwrap();
        let h = GloveHyperparams { alpha: 0.0, ..Default::default() };
        assert!(h.validate().is_err());
        let h = GloveHyperparams { window: 0, ..Default::default() };
        assert!(h.validate().is_err());
        let h = GloveHyperparams { dim: 0, ..Default::default() };
        assert!(h.validate().is_err());
    }
}
