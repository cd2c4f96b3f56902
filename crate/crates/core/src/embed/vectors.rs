use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EmbedError;

/// Final word vectors (main + context) with cached norms, the input to
/// similarity queries and synonym voting. Also the on-disk embedding format:
/// one `word v1 ... v_dim` line per word.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl WordVectors {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self, EmbedError> {
        if data.len() != words.len() * dim {
            return Err(EmbedError::Parse { line: 0, message: "vector data does not match vocabulary size".into() });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbedError::Parse { line: i + 1, message: format!("duplicate word '{w}'") });
            }
        }
        let norms = if dim == 0 { vec![0.0; words.len()] } else { data.chunks(dim).map(norm).collect() };
        Ok(WordVectors { words, index, dim, data, norms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Result<&[f64], EmbedError> {
        let i = *self.index.get(word).ok_or_else(|| EmbedError::OutOfVocabulary(word.to_string()))?;
        Ok(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|x| x * factor).collect();
        WordVectors::new(self.words.clone(), self.dim, data).expect("same shape")
    }

    /// The `k` words with highest cosine similarity to `word`, excluding
    /// `word` itself and zero vectors. Descending cosine, ties by ascending
    /// word.
    pub fn most_similar(&self, word: &str, k: usize) -> Result<Vec<(String, f64)>, EmbedError> {
        let qi = *self.index.get(word).ok_or_else(|| EmbedError::OutOfVocabulary(word.to_string()))?;
        let qn = self.norms[qi];
        if qn == 0.0 {
            return Err(EmbedError::ZeroVector(word.to_string()));
        }
        let q = &self.data[qi * self.dim..(qi + 1) * self.dim];
        let mut scored: Vec<(usize, f64)> = (0..self.words.len())
            .filter(|&i| i != qi && self.norms[i] > 0.0)
            .map(|i| {
                let v = &self.data[i * self.dim..(i + 1) * self.dim];
                let d: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
                (i, d / (qn * self.norms[i]))
            })
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then_with(|| self.words[a.0].cmp(&self.words[b.0]));
        if k < scored.len() {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored.into_iter().map(|(i, c)| (self.words[i].clone(), c)).collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {x}").expect("string write");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EmbedError> {
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (idx, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let vals = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbedError::Parse { line: idx + 1, message: e.to_string() })?;
            match dim {
                None => dim = Some(vals.len()),
                Some(d) if d != vals.len() => {
                    return Err(EmbedError::Parse { line: idx + 1, message: format!("expected {d} values, found {}", vals.len()) })
                }
                _ => {}
            }
            words.push(word.to_string());
            data.extend(vals);
        }
        WordVectors::new(words, dim.unwrap_or(0), data)
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        std::fs::write(path, self.to_text()).map_err(|source| EmbedError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let text = std::fs::read_to_string(path).map_err(|source| EmbedError::Io { path: path.display().to_string(), source })?;
        Self::from_text(&text)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
