//! Toolkit for low-resource Manchu-Korean machine translation.
//!
//! The crate is organised as one module per pipeline stage:
//!
//! - [`translit`]: table-driven Yale (Hangul) and Abkai (Manchu) romanization.
//! - [`corpus`]: TSV loading, length filtering, seeded shuffling, 8:1:1 splits.
//! - [`embed`]: GloVe training from scratch and cosine nearest-neighbour queries.
//! - [`augment`]: ten-model synonym voting and full/half augmentation.
//! - [`nmt`]: bi-GRU encoder, additive attention, GRU decoder, hand-written BPTT.
//! - [`eval`]: corpus BLEU (no smoothing) and token-level perplexity.
//! - [`pipeline`]: the cached, deterministic end-to-end experiment runner.
//!
//! Data-parallel inner loops go through [`exec::Exec`]. With the `parallel`
//! feature (default) [`exec::Exec::Parallel`] uses rayon; without it every
//! mode runs sequentially. Reductions are ordered so both modes produce
//! bit-identical results wherever the docs promise determinism.

pub mod augment;
pub mod corpus;
pub mod embed;
pub mod eval;
pub mod exec;
pub mod nmt;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod translit;

pub use augment::{SynonymTable, EnsembleSpec};
pub use corpus::{Origin, ParallelPair, Sentence, SplitSpec};
pub use embed::{CoocMatrix, GloveHyperparams, GloveModel, WordVectors};
pub use eval::EvalReport;
pub use exec::Exec;
pub use nmt::{Seq2Seq, TrainConfig, Vocab};
