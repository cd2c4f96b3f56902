//! Synonym voting over a ten-model GloVe ensemble and single-word
//! substitution augmentation of parallel corpora.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ParallelPair, Sentence};
use crate::embed::{build_cooc, train_glove, EmbedError, GloveHyperparams, TrainMode, WordVectors};
use crate::exec::Exec;
use crate::rng;

#[derive(Error, Debug)]
pub enum AugmentError {
    #[error("ensemble must have exactly 10 distinct (min_len, window) variants, found {0}")]
    BadEnsemble(usize),
    #[error("synonym table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub const ENSEMBLE_MIN_LENS: [usize; 2] = [3, 5];
pub const ENSEMBLE_WINDOWS: [usize; 5] = [1, 3, 5, 7, 10];

/// The ten GloVe variants: {min_len 3, 5} x {window 1, 3, 5, 7, 10}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    variants: Vec<GloveHyperparams>,
}

impl EnsembleSpec {
    /// Cross product over `base`; each variant gets its own seed stream.
    pub fn from_base(base: &GloveHyperparams) -> Self {
        let variants = ENSEMBLE_MIN_LENS
            .iter()
            .flat_map(|&min_len| ENSEMBLE_WINDOWS.iter().map(move |&window| (min_len, window)))
            .map(|(min_sentence_len, window)| GloveHyperparams {
                min_sentence_len,
                window,
                seed: rng::derive_seed(base.seed, &format!("glove-l{min_sentence_len}-w{window}")),
                ..base.clone()
            })
            .collect();
        EnsembleSpec { variants }
    }

    pub fn new(variants: Vec<GloveHyperparams>) -> Result<Self, AugmentError> {
        let keys: BTreeSet<(usize, usize)> = variants.iter().map(|v| (v.min_sentence_len, v.window)).collect();
        if variants.len() != 10 || keys.len() != 10 {
            return Err(AugmentError::BadEnsemble(keys.len()));
        }
        Ok(EnsembleSpec { variants })
    }

    pub fn variants(&self) -> &[GloveHyperparams] {
        &self.variants
    }

    /// File stem for a variant, e.g. `glove-l3-w5`.
    pub fn variant_name(h: &GloveHyperparams) -> String {
        format!("glove-l{}-w{}", h.min_sentence_len, h.window)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    pub synonym: String,
    pub votes: usize,
    pub cosine_sum: f64,
}

/// Majority vote over each model's top-1 neighbour of `word`.
///
/// Models where the word is out of vocabulary (or has a zero vector, or no
/// other nonzero word) abstain. Ties go to the higher summed cosine, then to
/// the lexicographically smaller candidate.
pub fn vote_synonym(word: &str, models: &[WordVectors]) -> Option<Vote> {
    let mut tally: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for m in models {
        if let Ok(top) = m.most_similar(word, 1) {
            if let Some((cand, cos)) = top.into_iter().next() {
                let e = tally.entry(cand).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += cos;
            }
        }
    }
    // BTreeMap iteration is ascending, so strict comparisons keep the
    // lexicographically smallest among exact ties.
    let mut best: Option<Vote> = None;
    for (cand, (votes, cosine_sum)) in tally {
        let better = match &best {
            None => true,
            Some(b) => votes > b.votes || (votes == b.votes && cosine_sum > b.cosine_sum),
        };
        if better {
            best = Some(Vote { synonym: cand, votes, cosine_sum });
        }
    }
    best
}

/// word -> (synonym, votes). Words without an elected synonym, or whose
/// winner is the word itself, are kept in `skipped`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymTable {
    entries: BTreeMap<String, (String, usize)>,
    skipped: BTreeSet<String>,
}

impl SynonymTable {
    pub fn get(&self, word: &str) -> Option<&str> {
        self.entries.get(word).map(|(s, _)| s.as_str())
    }

    pub fn votes(&self, word: &str) -> Option<usize> {
        self.entries.get(word).map(|e| e.1)
    }

    pub fn entries(&self) -> &BTreeMap<String, (String, usize)> {
        &self.entries
    }

    pub fn skipped(&self) -> &BTreeSet<String> {
        &self.skipped
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, word: &str, synonym: &str, votes: usize) {
        if word == synonym {
            self.entries.remove(word);
            self.skipped.insert(word.to_string());
        } else {
            self.skipped.remove(word);
            self.entries.insert(word.to_string(), (synonym.to_string(), votes));
        }
    }

    /// TSV `word<TAB>synonym<TAB>votes`, one line per entry.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (w, (s, v)) in &self.entries {
            writeln!(out, "{w}\t{s}\t{v}").expect("string write");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, AugmentError> {
        let mut t = SynonymTable::default();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| AugmentError::Parse { line: idx + 1, message: m.into() };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(err("expected word<TAB>synonym<TAB>votes"));
            }
            let votes: usize = f[2].trim().parse().map_err(|_| err("votes must be an integer"))?;
            if !(1..=10).contains(&votes) || f[0] == f[1] || f[0].is_empty() || f[1].is_empty() {
                return Err(err("invalid entry"));
            }
            t.insert(f[0], f[1], votes);
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<(), AugmentError> {
        std::fs::write(path, self.to_tsv()).map_err(|source| AugmentError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, AugmentError> {
        let text = std::fs::read_to_string(path).map_err(|source| AugmentError::Io { path: path.display().to_string(), source })?;
        Self::from_tsv(&text)
    }
}

/// One vote per vocabulary word; independent votes run under `exec`.
pub fn build_synonym_table(vocab: &BTreeSet<String>, models: &[WordVectors], exec: Exec) -> SynonymTable {
    let words: Vec<&String> = vocab.iter().collect();
    let votes = exec.map(&words, |w| vote_synonym(w, models));
    let mut table = SynonymTable::default();
    for (w, v) in words.into_iter().zip(votes) {
        match v {
            Some(v) => table.insert(w, &v.synonym, v.votes),
            None => {
                table.skipped.insert(w.clone());
            }
        }
    }
    table
}

/// Trains every ensemble variant on `corpus` (sentences shorter than the
/// variant's `min_sentence_len` are dropped first) and returns the summed
/// word vectors in variant order. Members train concurrently under
/// `Exec::Parallel`; each is deterministic on its own. A member whose
/// filtered corpus has no co-occurrences comes back empty.
pub fn train_ensemble(corpus: &[Sentence], spec: &EnsembleSpec, exec: Exec) -> Result<Vec<WordVectors>, EmbedError> {
    let members = exec.map(spec.variants(), |h| -> Result<WordVectors, EmbedError> {
        let kept = crate::corpus::filter_sentences_min_len(corpus, h.min_sentence_len);
        let cooc = build_cooc(&kept, h, Exec::Sequential)?;
        if cooc.is_empty() {
            // nothing survived the length filter: this member abstains
            return WordVectors::new(Vec::new(), h.dim, Vec::new());
        }
        let (model, _) = train_glove(&cooc, h, TrainMode::Deterministic)?;
        Ok(model.word_vectors())
    });
    members.into_iter().collect()
}

/// Source-side word set of a parallel corpus.
pub fn source_vocab(pairs: &[ParallelPair]) -> BTreeSet<String> {
    pairs.iter().flat_map(|p| p.source.tokens().iter().cloned()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    #[default]
    None,
    Half,
    Full,
}

impl AugmentMode {
    pub const ALL: [AugmentMode; 3] = [AugmentMode::None, AugmentMode::Half, AugmentMode::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentMode::None => "none",
            AugmentMode::Half => "half",
            AugmentMode::Full => "full",
        }
    }
}

impl std::str::FromStr for AugmentMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(AugmentMode::None),
            "half" => Ok(AugmentMode::Half),
            "full" => Ok(AugmentMode::Full),
            other => Err(format!("unknown augmentation mode '{other}' (none|half|full)")),
        }
    }
}

/// Source positions whose word has a synonym.
pub fn replaceable_positions(source: &Sentence, table: &SynonymTable) -> Vec<usize> {
    source.tokens().iter().enumerate().filter(|(_, t)| table.get(t).is_some()).map(|(i, _)| i).collect()
}

/// The (pair index, position) sites that get a variant, ordered by pair then
/// position. Half mode draws `floor(R/2)` of the `R` replaceable positions
/// uniformly from the pair's own seed stream.
pub fn plan_variants(pairs: &[ParallelPair], table: &SynonymTable, mode: AugmentMode, seed: u64, exec: Exec) -> Vec<(usize, usize)> {
    let per_pair = exec.map_range(pairs.len(), |i| {
        let r = replaceable_positions(&pairs[i].source, table);
        let chosen = match mode {
            AugmentMode::None => Vec::new(),
            AugmentMode::Full => r,
            AugmentMode::Half => {
                let mut g = rng::rng_stream(seed, i as u64);
                let mut picked: Vec<usize> = index::sample(&mut g, r.len(), r.len() / 2).into_iter().map(|k| r[k]).collect();
                picked.sort_unstable();
                picked
            }
        };
        chosen.into_iter().map(move |p| (i, p)).collect::<Vec<_>>()
    });
    per_pair.into_iter().flatten().collect()
}

/// Originals followed by one single-substitution variant per planned site.
/// Targets and origin tags are copied unchanged.
pub fn augment(pairs: &[ParallelPair], table: &SynonymTable, mode: AugmentMode, seed: u64, exec: Exec) -> Vec<ParallelPair> {
    let plan = plan_variants(pairs, table, mode, seed, exec);
    let variants = exec.map(&plan, |&(i, pos)| {
        let p = &pairs[i];
        let syn = table.get(&p.source.tokens()[pos]).expect("planned positions are replaceable");
        ParallelPair { source: p.source.with_replacement(pos, syn), target: p.target.clone(), origin: p.origin }
    });
    let mut out = pairs.to_vec();
    out.extend(variants);
    out
}

pub fn augment_full(pairs: &[ParallelPair], table: &SynonymTable) -> Vec<ParallelPair> {
    augment(pairs, table, AugmentMode::Full, 0, Exec::Sequential)
}

pub fn augment_half(pairs: &[ParallelPair], table: &SynonymTable, seed: u64) -> Vec<ParallelPair> {
    augment(pairs, table, AugmentMode::Half, seed, Exec::Sequential)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub sentences_before: usize,
    pub sentences_after: usize,
    pub vocab_before: usize,
    pub vocab_after: usize,
}

pub fn augmentation_report(before: &[ParallelPair], after: &[ParallelPair]) -> AugmentationReport {
    AugmentationReport {
        sentences_before: before.len(),
        sentences_after: after.len(),
        vocab_before: source_vocab(before).len(),
        vocab_after: source_vocab(after).len(),
    }
}

/// Counts how often each source word would be substituted; handy for
/// inspecting a table against a corpus.
pub fn substitution_counts(pairs: &[ParallelPair], table: &SynonymTable) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for p in pairs {
        for t in p.source.tokens() {
            if table.get(t).is_some() {
                *m.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    m
}
