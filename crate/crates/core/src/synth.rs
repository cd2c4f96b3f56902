//! Synthetic corpora with known structure, used by tests, benches and the
//! `synth` subcommand.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{Origin, ParallelPair, Sentence};
use crate::rng;

/// `n` distinct pairs over a 20-word source vocabulary; the target maps each
/// source word to its own target word, in order.
pub fn toy_parallel(n: usize, seed: u64) -> Vec<ParallelPair> {
    let mut g = rng::rng(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = g.gen_range(3..=6);
        let ids: Vec<usize> = (0..len).map(|_| g.gen_range(0..20)).collect();
        if !seen.insert(ids.clone()) {
            continue;
        }
        let src: Vec<String> = ids.iter().map(|i| format!("s{i}")).collect();
        let tgt: Vec<String> = ids.iter().map(|i| format!("t{i}")).collect();
        out.push(ParallelPair { source: Sentence::from_tokens(src), target: Sentence::from_tokens(tgt), origin: Origin::Synthetic });
    }
    out
}

pub const TWIN_A: &str = "twin_a";
pub const TWIN_B: &str = "twin_b";

/// Walks over a ring of 24 words (`r0`..`r23`, steps of 1 or 2) in which
/// [`TWIN_B`] occurs exactly where [`TWIN_A`] does: `r0` is spelled A, and
/// every sentence containing A is repeated with A replaced by B, so the two
/// words have identical co-occurrence rows.
pub fn context_twins(n: usize, seed: u64) -> Vec<Sentence> {
    const RING: usize = 24;
    let mut g = rng::rng(seed);
    let mut out = Vec::with_capacity(n * 2);
    for _ in 0..n {
        let mut c = g.gen_range(0..RING);
        let mut words = Vec::with_capacity(6);
        for _ in 0..6 {
            words.push(if c == 0 { TWIN_A.to_string() } else { format!("r{c}") });
            c = (c + g.gen_range(1..=2)) % RING;
        }
        let s = Sentence::from_tokens(words);
        let twin = s.tokens().iter().any(|t| t == TWIN_A).then(|| {
            Sentence::from_tokens(s.tokens().iter().map(|t| if t == TWIN_A { TWIN_B } else { t.as_str() }))
        });
        out.push(s);
        out.extend(twin);
    }
    out
}

/// A synonym-rich toy language. Concepts sit on a ring; a sentence walks
/// forward from a random concept in steps of 1..=`max_step`. Every concept
/// has a common and a rare source spelling (`xa{c}` / `xb{c}`) that are used
/// interchangeably in monolingual text, while parallel text uses the rare one
/// only with probability `rare_prob`. Targets spell each concept `ko{c}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingSpec {
    pub concepts: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub max_step: usize,
    pub pairs: usize,
    pub monolingual: usize,
    pub rare_prob: f64,
}

impl Default for RingSpec {
    fn default() -> Self {
        RingSpec { concepts: 40, min_len: 4, max_len: 7, max_step: 2, pairs: 250, monolingual: 4000, rare_prob: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingCorpus {
    pub parallel: Vec<ParallelPair>,
    pub monolingual: Vec<Sentence>,
}

pub fn ring_language(spec: &RingSpec, seed: u64) -> RingCorpus {
    let mut g = rng::rng(seed);
    let walk = |g: &mut rng::Rng| -> Vec<usize> {
        let len = g.gen_range(spec.min_len..=spec.max_len);
        let mut c = g.gen_range(0..spec.concepts);
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(c);
            c = (c + g.gen_range(1..=spec.max_step)) % spec.concepts;
        }
        v
    };
    let spell = |g: &mut rng::Rng, c: usize, rare: f64| if g.gen::<f64>() < rare { format!("xb{c}") } else { format!("xa{c}") };
    let mut parallel = Vec::with_capacity(spec.pairs);
    for _ in 0..spec.pairs {
        let w = walk(&mut g);
        let src: Vec<String> = w.iter().map(|&c| spell(&mut g, c, spec.rare_prob)).collect();
        let tgt: Vec<String> = w.iter().map(|c| format!("ko{c}")).collect();
        parallel.push(ParallelPair { source: Sentence::from_tokens(src), target: Sentence::from_tokens(tgt), origin: Origin::Synthetic });
    }
    let mut monolingual = Vec::with_capacity(spec.monolingual);
    for _ in 0..spec.monolingual {
        let w = walk(&mut g);
        monolingual.push(Sentence::from_tokens(w.iter().map(|&c| spell(&mut g, c, 0.5))));
    }
    parallel.shuffle(&mut g);
    RingCorpus { parallel, monolingual }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_pairs_are_distinct_and_aligned() {
        let p = toy_parallel(50, 1);
        let set: std::collections::BTreeSet<_> = p.iter().map(|x| x.source.clone()).collect();
        assert_eq!(set.len(), 50);
        assert!(p.iter().all(|x| x.source.len() == x.target.len()));
        assert_eq!(p, toy_parallel(50, 1));
    }

    #[test]
    fn twins_share_contexts() {
        let s = context_twins(200, 3);
        let with = |w: &str| s.iter().filter(|x| x.tokens().iter().any(|t| t == w)).count();
        assert!(with(TWIN_A) > 0);
        assert_eq!(with(TWIN_A), with(TWIN_B));
    }

    #[test]
    fn ring_shapes() {
        let spec = RingSpec { pairs: 30, monolingual: 50, ..RingSpec::default() };
        let r = ring_language(&spec, 9);
        assert_eq!(r.parallel.len(), 30);
        assert_eq!(r.monolingual.len(), 50);
        for p in &r.parallel {
            assert!((spec.min_len..=spec.max_len).contains(&p.source.len()));
            for (s, t) in p.source.tokens().iter().zip(p.target.tokens()) {
                assert_eq!(&s[2..], &t[2..]);
            }
        }
    }
}
