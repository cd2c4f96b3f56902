//! Minibatch training with per-epoch validation and best-epoch selection.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checkpoint::Seq2Seq;
use super::model::{loss_and_grad, Batch, Forcing, LossStats};
use super::optim::{Adam, AdamConfig};
use super::vocab::Vocab;
use super::NmtError;
use crate::corpus::{self, ParallelPair, Sentence};
use crate::eval;
use crate::exec::Exec;
use crate::rng::derive_seed;

/// Which validation figure picks the returned epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    ValidLoss,
    ValidBleu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub embed: usize,
    pub hidden: usize,
    pub min_freq: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub teacher_forcing: f64,
    pub seed: u64,
    pub select_by: Selection,
    /// Decoding cap for BLEU-based selection and evaluation.
    pub max_decode_len: usize,
    /// Reshuffle the training pairs every epoch.
    pub shuffle: bool,
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed: 256,
            hidden: 512,
            min_freq: 1,
            batch_size: 64,
            epochs: 5,
            learning_rate: 1e-3,
            clip_norm: 1.0,
            teacher_forcing: 1.0,
            seed: 0,
            select_by: Selection::ValidLoss,
            max_decode_len: 100,
            shuffle: true,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NmtError> {
        let bad = |m: &str| Err(NmtError::InvalidConfig(m.into()));
        if self.embed == 0 || self.hidden == 0 {
            return bad("embed and hidden must be positive");
        }
        if self.min_freq == 0 {
            return bad("min_freq must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing) {
            return bad("teacher_forcing must be in [0, 1]");
        }
        if !(self.clip_norm >= 0.0) {
            return bad("clip_norm must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Token-mean loss of the epoch's batches, each measured before its update.
    pub train_loss: f64,
    pub valid_loss: f64,
    pub valid_bleu: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub initial_valid_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// 0 means no epoch beat the initial parameters (or no epochs ran).
    pub best_epoch: usize,
}

impl TrainLog {
    /// `epoch,train_loss,valid_loss,seconds` records, one per epoch.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,valid_loss,seconds\n");
        for e in &self.epochs {
            writeln!(s, "{},{},{},{:.3}", e.epoch, e.train_loss, e.valid_loss, e.seconds).unwrap();
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Seq2Seq,
    pub log: TrainLog,
}

/// Builds vocabularies from `train_set`, initialises a model and trains it.
pub fn train(train_set: &[ParallelPair], valid_set: &[ParallelPair], config: &TrainConfig) -> Result<TrainOutcome, NmtError> {
    train_with(train_set, valid_set, config, |_| {})
}

pub fn train_with(train_set: &[ParallelPair], valid_set: &[ParallelPair], config: &TrainConfig, on_epoch: impl FnMut(&EpochLog)) -> Result<TrainOutcome, NmtError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(NmtError::EmptyData("training"));
    }
    let src_vocab = Vocab::build(train_set.iter().map(|p| &p.source), config.min_freq);
    let tgt_vocab = Vocab::build(train_set.iter().map(|p| &p.target), config.min_freq);
    let model = Seq2Seq::new(src_vocab, tgt_vocab, config.embed, config.hidden, derive_seed(config.seed, "nmt/init"));
    continue_training(model, train_set, valid_set, config, on_epoch)
}

/// Trains an existing model; returns the snapshot of the best epoch.
pub fn continue_training(
    mut model: Seq2Seq,
    train_set: &[ParallelPair],
    valid_set: &[ParallelPair],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, NmtError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(NmtError::EmptyData("training"));
    }
    if valid_set.is_empty() {
        return Err(NmtError::EmptyData("validation"));
    }
    let exec = config.exec;
    let mut opt = Adam::new(
        &model.params,
        AdamConfig { learning_rate: config.learning_rate, clip_norm: config.clip_norm, ..AdamConfig::default() },
    );
    let validate = |m: &Seq2Seq| -> Result<(f64, Option<f64>), NmtError> {
        let loss = m.corpus_loss(valid_set, exec)?.mean();
        let bleu = match config.select_by {
            Selection::ValidLoss => None,
            Selection::ValidBleu => Some(valid_bleu(m, valid_set, config.max_decode_len, exec)?),
        };
        Ok((loss, bleu))
    };
    let (initial_valid_loss, initial_bleu) = validate(&model)?;
    let mut best = (0usize, selection_key(config.select_by, initial_valid_loss, initial_bleu), model.clone());
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        let order = if config.shuffle {
            corpus::shuffle(train_set, derive_seed(config.seed, &format!("nmt/epoch/{epoch}")))
        } else {
            train_set.to_vec()
        };
        let mut stats = LossStats::default();
        for (b, batch) in model.batches(&order, config.batch_size).iter().enumerate() {
            let forcing = Forcing { ratio: config.teacher_forcing, seed: derive_seed(config.seed, &format!("nmt/forcing/{epoch}/{b}")) };
            let (s, mut grad) = step_grad(&model, batch, forcing, exec)?;
            if !s.loss_sum.is_finite() || !grad.all_finite() {
                return Err(NmtError::NonFiniteLoss { epoch, batch: b });
            }
            opt.update(&mut model.params, &mut grad);
            stats = stats.merge(s);
        }
        let (valid_loss, valid_bleu) = validate(&model)?;
        if !valid_loss.is_finite() {
            return Err(NmtError::NonFiniteLoss { epoch, batch: usize::MAX });
        }
        let log = EpochLog { epoch, train_loss: stats.mean(), valid_loss, valid_bleu, seconds: start.elapsed().as_secs_f64() };
        on_epoch(&log);
        let key = selection_key(config.select_by, valid_loss, valid_bleu);
        if key < best.1 {
            best = (epoch, key, model.clone());
        }
        epochs.push(log);
    }
    Ok(TrainOutcome { model: best.2, log: TrainLog { initial_valid_loss, epochs, best_epoch: best.0 } })
}

fn step_grad(model: &Seq2Seq, batch: &Batch, forcing: Forcing, exec: Exec) -> Result<(LossStats, super::Seq2SeqParams), NmtError> {
    loss_and_grad(&model.params, batch, forcing, exec)
}

/// Lower is better.
fn selection_key(select: Selection, loss: f64, bleu: Option<f64>) -> f64 {
    match select {
        Selection::ValidLoss => loss,
        Selection::ValidBleu => -bleu.unwrap_or(0.0),
    }
}

fn valid_bleu(model: &Seq2Seq, pairs: &[ParallelPair], max_len: usize, exec: Exec) -> Result<f64, NmtError> {
    let sources: Vec<Sentence> = pairs.iter().map(|p| p.source.clone()).collect();
    let hyps = model.translate_all(&sources, max_len, exec)?;
    let refs: Vec<&[String]> = pairs.iter().map(|p| p.target.tokens()).collect();
    Ok(eval::bleu(&hyps, &refs).map(|s| s.bleu).unwrap_or(0.0))
}
