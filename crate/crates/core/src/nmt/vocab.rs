use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const SOS: u32 = 2;
pub const EOS: u32 = 3;
pub const RESERVED: [&str; 4] = ["<PAD>", "<UNK>", "<SOS>", "<EOS>"];

/// Token/id bijection with the four reserved ids first, then corpus tokens
/// by descending frequency (ties lexicographic).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    min_freq: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    min_freq: usize,
    tokens: Vec<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_tokens(r.tokens, r.min_freq)
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { min_freq: v.min_freq, tokens: v.tokens }
    }
}

impl Vocab {
    pub fn build<'a, I>(sentences: I, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        let min_freq = min_freq.max(1);
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for s in sentences {
            for t in s.tokens() {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut items: Vec<(&str, usize)> = freq
            .into_iter()
            .filter(|&(t, c)| c >= min_freq && !RESERVED.contains(&t))
            .collect();
        items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens = RESERVED.iter().map(|s| s.to_string()).chain(items.into_iter().map(|(t, _)| t.to_string())).collect();
        Vocab::from_tokens(tokens, min_freq)
    }

    fn from_tokens(tokens: Vec<String>, min_freq: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocab { tokens, index, min_freq }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= RESERVED.len()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        self.tokens.get(id as usize).map_or(RESERVED[UNK as usize], String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, s: &Sentence) -> Vec<u32> {
        s.tokens().iter().map(|t| self.id(t)).collect()
    }

    /// Ids to tokens, dropping reserved ids other than UNK.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&i| i == UNK || i as usize >= RESERVED.len())
            .map(|&i| self.token(i).to_string())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_then_frequency() {
        let c = [Sentence::parse("a a b")];
        let v = Vocab::build(&c, 1);
        assert_eq!(v.tokens(), &["<PAD>", "<UNK>", "<SOS>", "<EOS>", "a", "b"]);
        assert_eq!((v.id("a"), v.id("b")), (4, 5));
        let v2 = Vocab::build(&c, 2);
        assert_eq!(v2.len(), 5);
        assert_eq!(v2.id("b"), UNK);
        assert_eq!(v2.encode(&Sentence::parse("a b zz")), vec![4, UNK, UNK]);
    }

    #[test]
    fn reserved_tokens_appear_once() {
        let v = Vocab::build(&[Sentence::parse("<UNK> x <PAD>")], 1);
        assert_eq!(v.tokens().iter().filter(|t| *t == "<UNK>").count(), 1);
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocab::build(&[Sentence::parse("c b a b")], 1);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocab>(&s).unwrap(), v);
    }
}
