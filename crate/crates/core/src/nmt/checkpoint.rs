//! A trained translator: vocabularies plus parameters, saved as versioned JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{batch_loss, greedy_decode, Batch, LossStats};
use super::params::{ModelDims, Seq2SeqParams};
use super::vocab::Vocab;
use super::NmtError;
use crate::corpus::{ParallelPair, Sentence};
use crate::exec::Exec;

const FORMAT: &str = "mergen-seq2seq";
const VERSION: u32 = 1;

/// Rows per batch when scoring a whole corpus.
pub const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2Seq {
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
    pub params: Seq2SeqParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub tokens: Vec<String>,
    /// Generated steps x source length.
    pub attention: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    dims: ModelDims,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    params: Seq2SeqParams,
}

impl Seq2Seq {
    pub fn new(src_vocab: Vocab, tgt_vocab: Vocab, embed: usize, hidden: usize, seed: u64) -> Self {
        let dims = ModelDims { src_vocab: src_vocab.len(), tgt_vocab: tgt_vocab.len(), embed, hidden };
        Seq2Seq { src_vocab, tgt_vocab, params: Seq2SeqParams::init(dims, seed) }
    }

    pub fn dims(&self) -> ModelDims {
        self.params.dims()
    }

    pub fn encode_pair(&self, pair: &ParallelPair) -> (Vec<u32>, Vec<u32>) {
        (self.src_vocab.encode(&pair.source), self.tgt_vocab.encode(&pair.target))
    }

    /// Consecutive batches of at most `size` pairs, in input order.
    pub fn batches(&self, pairs: &[ParallelPair], size: usize) -> Vec<Batch> {
        pairs
            .chunks(size.max(1))
            .map(|c| Batch::from_ids(&c.iter().map(|p| self.encode_pair(p)).collect::<Vec<_>>()))
            .collect()
    }

    /// Teacher-forced cross-entropy summed over every target token of `pairs`.
    pub fn corpus_loss(&self, pairs: &[ParallelPair], exec: Exec) -> Result<LossStats, NmtError> {
        self.batches(pairs, EVAL_BATCH)
            .iter()
            .try_fold(LossStats::default(), |acc, b| Ok(acc.merge(batch_loss(&self.params, b, exec)?)))
    }

    /// Greedy translation; source tokens outside the vocabulary become UNK.
    pub fn translate(&self, source: &Sentence, max_len: usize) -> Result<Translation, NmtError> {
        if source.is_empty() {
            return Ok(Translation { tokens: Vec::new(), attention: Vec::new() });
        }
        let ids = self.src_vocab.encode(source);
        let d = greedy_decode(&self.params, &ids, ids.len(), max_len)?;
        Ok(Translation { tokens: self.tgt_vocab.decode(&d.ids), attention: d.attention })
    }

    pub fn translate_all(&self, sources: &[Sentence], max_len: usize, exec: Exec) -> Result<Vec<Sentence>, NmtError> {
        exec.map(sources, |s| self.translate(s, max_len).map(|t| Sentence::from_tokens(t.tokens)))
            .into_iter()
            .collect()
    }

    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            dims: self.dims(),
            src_vocab: self.src_vocab.clone(),
            tgt_vocab: self.tgt_vocab.clone(),
            params: self.params.clone(),
        };
        serde_json::to_string(&ck).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, NmtError> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| NmtError::Checkpoint(e.to_string()))?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(NmtError::Checkpoint(format!("unsupported format {} v{}", ck.format, ck.version)));
        }
        let dims = ck.params.dims();
        if dims != ck.dims || dims.src_vocab != ck.src_vocab.len() || dims.tgt_vocab != ck.tgt_vocab.len() {
            return Err(NmtError::Checkpoint("dimensions disagree with vocabularies".into()));
        }
        ck.params.check_shapes().map_err(NmtError::Checkpoint)?;
        if !ck.params.all_finite() {
            return Err(NmtError::Checkpoint("non-finite parameter".into()));
        }
        Ok(Seq2Seq { src_vocab: ck.src_vocab, tgt_vocab: ck.tgt_vocab, params: ck.params })
    }

    pub fn save(&self, path: &Path) -> Result<(), NmtError> {
        std::fs::write(path, self.to_json()).map_err(|source| NmtError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, NmtError> {
        let text = std::fs::read_to_string(path).map_err(|source| NmtError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}
