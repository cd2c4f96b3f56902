//! Bi-directional GRU encoder, additive attention, GRU decoder.
//!
//! All arithmetic is `f64` and every gradient is written out by hand in
//! [`model::backward_row`]. Rows are processed over their true lengths, so
//! padding has no effect on any value, not even at the last bit.

pub mod attention;
pub mod checkpoint;
pub mod gru;
pub mod model;
pub mod optim;
pub mod params;
pub mod tensor;
pub mod train;
pub mod vocab;

pub use attention::{attention, masked_softmax};
pub use checkpoint::{Seq2Seq, Translation};
pub use gru::gru_cell;
pub use model::{backward, encode, forward_loss, loss_and_grad, Batch, Forcing, LossStats};
pub use optim::Adam;
pub use params::{ModelDims, Seq2SeqParams};
pub use tensor::Tensor;
pub use train::{train, EpochLog, Selection, TrainConfig, TrainLog};
pub use vocab::{Vocab, EOS, PAD, SOS, UNK};

use std::io;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum NmtError {
    #[error("attention row has no real positions")]
    AllMasked,
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("loss became non-finite in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("{0} set is empty")]
    EmptyData(&'static str),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}
