use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Sentence;
use crate::exec::Exec;

use super::{EmbedError, GloveHyperparams};

/// Largest supported window. Weights are accumulated exactly as integer
/// multiples of 1/lcm(1..=window), which must fit comfortably in u128.
pub const MAX_WINDOW: usize = 32;

const SHARD: usize = 256;

/// Word/id bijection; ids are assigned by descending frequency, ties in
/// ascending lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmbedVocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl EmbedVocab {
    pub fn build(sentences: &[Sentence], min_count: usize) -> Self {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in sentences {
            for t in s.tokens() {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut items: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count as u64).collect();
        items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let words: Vec<String> = items.iter().map(|(w, _)| w.to_string()).collect();
        let counts = items.iter().map(|&(_, c)| c).collect();
        Self::from_parts(words, counts)
    }

    pub fn from_words(words: Vec<String>) -> Self {
        let counts = vec![0; words.len()];
        Self::from_parts(words, counts)
    }

    fn from_parts(words: Vec<String>, counts: Vec<u64>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        EmbedVocab { words, counts, index }
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Symmetric sparse co-occurrence matrix with no diagonal and no zero cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocMatrix {
    pub vocab: EmbedVocab,
    entries: BTreeMap<(u32, u32), f64>,
}

impl CoocMatrix {
    pub fn from_entries(vocab: EmbedVocab, entries: BTreeMap<(u32, u32), f64>) -> Self {
        CoocMatrix { vocab, entries }
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.entries
    }

    /// Nonzero cells in (i, j) order.
    pub fn cells(&self) -> Vec<(u32, u32, f64)> {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x)).collect()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks up a cell by words.
    pub fn weight(&self, a: &str, b: &str) -> f64 {
        match (self.vocab.id(a), self.vocab.id(b)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => 0.0,
        }
    }

    /// Text cache: `vocab N`, N word lines, then `i j weight` triples.
    pub fn to_text(&self) -> String {
        let mut out = format!("vocab {}\n", self.vocab.len());
        for w in self.vocab.words() {
            out.push_str(w);
            out.push('\n');
        }
        for (&(i, j), &x) in &self.entries {
            writeln!(out, "{i} {j} {x}").expect("string write");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EmbedError> {
        let perr = |line: usize, m: &str| EmbedError::Parse { line, message: m.into() };
        let mut lines = text.lines().enumerate();
        let n: usize = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix("vocab "))
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| perr(1, "expected 'vocab N' header"))?;
        let mut words = Vec::with_capacity(n);
        for _ in 0..n {
            let (_, w) = lines.next().ok_or_else(|| perr(0, "truncated vocabulary"))?;
            words.push(w.to_string());
        }
        let mut entries = BTreeMap::new();
        for (idx, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            let parsed = (f.len() == 3)
                .then(|| Some((f[0].parse::<u32>().ok()?, f[1].parse::<u32>().ok()?, f[2].parse::<f64>().ok()?)))
                .flatten();
            let (i, j, x) = parsed.ok_or_else(|| perr(idx + 1, "expected 'i j weight'"))?;
            if i as usize >= n || j as usize >= n || !(x > 0.0) {
                return Err(perr(idx + 1, "triple out of range"));
            }
            entries.insert((i, j), x);
        }
        Ok(CoocMatrix { vocab: EmbedVocab::from_words(words), entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        std::fs::write(path, self.to_text()).map_err(|source| EmbedError::Io { path: path.display().to_string(), source })
    }
}

fn lcm_upto(n: usize) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    (1..=n as u128).fold(1, |acc, k| acc / gcd(acc, k) * k)
}

/// Accumulates `1/d` for every token pair at distance `d <= window` within a
/// sentence, into both `(i, j)` and `(j, i)`. Sentences never share windows.
///
/// Sentences are sharded across workers; each shard counts in exact integer
/// units of `1/lcm(1..=window)`, so the merge is associative and the result
/// is identical for any shard order.
pub fn build_cooc(sentences: &[Sentence], hyper: &GloveHyperparams, exec: Exec) -> Result<CoocMatrix, EmbedError> {
    hyper.validate()?;
    let vocab = EmbedVocab::build(sentences, hyper.min_count);
    let window = hyper.window;
    let unit = lcm_upto(window);
    let partials = exec.map_chunks(sentences, SHARD, |chunk| {
        let mut acc: HashMap<(u32, u32), u128> = HashMap::new();
        let mut ids = Vec::new();
        for s in chunk {
            ids.clear();
            ids.extend(s.tokens().iter().filter_map(|t| vocab.id(t)));
            for (p, &a) in ids.iter().enumerate() {
                for d in 1..=window.min(ids.len() - 1 - p) {
                    let b = ids[p + d];
                    if a == b {
                        continue;
                    }
                    let w = unit / d as u128;
                    *acc.entry((a, b)).or_default() += w;
                    *acc.entry((b, a)).or_default() += w;
                }
            }
        }
        acc
    });
    let mut total: BTreeMap<(u32, u32), u128> = BTreeMap::new();
    for part in partials {
        for (k, v) in part {
            *total.entry(k).or_default() += v;
        }
    }
    let denom = unit as f64;
    let entries = total.into_iter().map(|(k, v)| (k, v as f64 / denom)).collect();
    Ok(CoocMatrix { vocab, entries })
}
