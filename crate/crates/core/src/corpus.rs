//! Parallel/monolingual corpus loading, filtering, shuffling and splitting.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Error, Debug)]
pub enum CorpusError {
    #[error("{path}: line {line}: expected 'source<TAB>target', found {fields} field(s)")]
    MalformedLine { path: String, line: usize, fields: usize },
    #[error("{path}: line {line}: empty {side} side")]
    EmptySide { path: String, line: usize, side: &'static str },
    #[error("{path}: line {line}: unknown origin tag '{tag}'")]
    UnknownOrigin { path: String, line: usize, tag: String },
    #[error("cannot split {0} pairs 8:1:1; need at least 10")]
    TooSmall(usize),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Whitespace-tokenized sentence. Tokens are never empty and never contain
/// whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sentence(Vec<String>);

impl Sentence {
    pub fn parse(text: &str) -> Self {
        Sentence(text.split_whitespace().map(str::to_string).collect())
    }

    /// Builds from tokens, splitting any that carry whitespace and dropping
    /// empty ones so the invariant holds.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Sentence(
            tokens
                .into_iter()
                .flat_map(|t| t.as_ref().split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with the token at `pos` replaced.
    pub fn with_replacement(&self, pos: usize, word: &str) -> Self {
        let mut t = self.0.clone();
        t[pos] = word.to_string();
        Sentence(t)
    }
}

impl AsRef<[String]> for Sentence {
    fn as_ref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Laodang,
    Dictionary,
    #[default]
    Synthetic,
}

impl Origin {
    pub const ALL: [Origin; 3] = [Origin::Laodang, Origin::Dictionary, Origin::Synthetic];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Laodang => "laodang",
            Origin::Dictionary => "dictionary",
            Origin::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Origin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Origin::ALL.into_iter().find(|o| o.as_str() == s).ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParallelPair {
    pub source: Sentence,
    pub target: Sentence,
    pub origin: Origin,
}

impl ParallelPair {
    pub fn new(source: &str, target: &str, origin: Origin) -> Self {
        ParallelPair { source: Sentence::parse(source), target: Sentence::parse(target), origin }
    }
}

/// Fixed 8:1:1 split with the seed of the shuffle that preceded it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
}

impl SplitSpec {
    pub const RATIOS: (usize, usize, usize) = (8, 1, 1);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<ParallelPair>,
    pub valid: Vec<ParallelPair>,
    pub test: Vec<ParallelPair>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

/// Reads `source<TAB>target` lines. An optional third column carries the
/// origin tag; without it every pair gets `default_origin`.
pub fn load_parallel(path: &Path, default_origin: Origin) -> Result<Vec<ParallelPair>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_parallel(&text, &path.display().to_string(), default_origin)
}

pub fn parse_parallel(text: &str, name: &str, default_origin: Origin) -> Result<Vec<ParallelPair>, CorpusError> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(CorpusError::MalformedLine { path: name.into(), line: line_no, fields: fields.len() });
        }
        let source = Sentence::parse(fields[0]);
        let target = Sentence::parse(fields[1]);
        for (side, s) in [("source", &source), ("target", &target)] {
            if s.is_empty() {
                return Err(CorpusError::EmptySide { path: name.into(), line: line_no, side });
            }
        }
        let origin = match fields.get(2) {
            Some(tag) => tag.trim().parse().map_err(|tag| CorpusError::UnknownOrigin {
                path: name.into(),
                line: line_no,
                tag,
            })?,
            None => default_origin,
        };
        pairs.push(ParallelPair { source, target, origin });
    }
    Ok(pairs)
}

/// Writes pairs as TSV. With `with_origin` a third column records the tag.
pub fn write_parallel(path: &Path, pairs: &[ParallelPair], with_origin: bool) -> Result<(), CorpusError> {
    let mut buf = Vec::new();
    for p in pairs {
        if with_origin {
            writeln!(buf, "{}\t{}\t{}", p.source, p.target, p.origin)
        } else {
            writeln!(buf, "{}\t{}", p.source, p.target)
        }
        .expect("writing to a Vec cannot fail");
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// One sentence per line; blank lines are skipped.
pub fn load_monolingual(path: &Path) -> Result<Vec<Sentence>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(Sentence::parse).filter(|s| !s.is_empty()).collect())
}

pub fn write_monolingual(path: &Path, sentences: &[Sentence]) -> Result<(), CorpusError> {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Keeps pairs whose source has at least `n` tokens.
pub fn filter_min_len(pairs: &[ParallelPair], n: usize) -> Vec<ParallelPair> {
    pairs.iter().filter(|p| p.source.len() >= n).cloned().collect()
}

pub fn filter_sentences_min_len(sentences: &[Sentence], n: usize) -> Vec<Sentence> {
    sentences.iter().filter(|s| s.len() >= n).cloned().collect()
}

/// Seeded Fisher-Yates permutation.
pub fn shuffle<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut rng::rng(seed));
    v
}

/// Contiguous train/valid/test slices: valid and test get `N / 10` each
/// (floor), train keeps the remainder. Does not reshuffle.
pub fn split(pairs: &[ParallelPair], _spec: SplitSpec) -> Result<Split, CorpusError> {
    let n = pairs.len();
    if n < 10 {
        return Err(CorpusError::TooSmall(n));
    }
    let held = n / 10;
    let train_end = n - 2 * held;
    Ok(Split {
        train: pairs[..train_end].to_vec(),
        valid: pairs[train_end..train_end + held].to_vec(),
        test: pairs[train_end + held..].to_vec(),
    })
}
