//! Corpus BLEU (no smoothing) and token-level perplexity.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ParallelPair, Sentence};
use crate::exec::Exec;
use crate::nmt::{NmtError, Seq2Seq};

pub const MAX_ORDER: usize = 4;

#[derive(Error, Debug)]
pub enum EvalError {
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Nmt(#[from] NmtError),
}

/// Sufficient statistics for corpus BLEU; merging is plain addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn of_pair(hyp: &[String], reference: &[String]) -> Self {
        let mut s = BleuStats { hyp_len: hyp.len() as u64, ref_len: reference.len() as u64, ..Default::default() };
        for n in 1..=MAX_ORDER {
            if hyp.len() < n {
                continue;
            }
            let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
            for g in reference.windows(n) {
                *ref_counts.entry(g).or_default() += 1;
            }
            let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
            for g in hyp.windows(n) {
                *hyp_counts.entry(g).or_default() += 1;
            }
            s.totals[n - 1] = (hyp.len() + 1 - n) as u64;
            s.matches[n - 1] = hyp_counts.iter().map(|(g, c)| (*c).min(ref_counts.get(g).copied().unwrap_or(0))).sum();
        }
        s
    }

    pub fn merge(mut self, o: BleuStats) -> Self {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }

    pub fn score(&self) -> BleuScore {
        let precisions: [f64; MAX_ORDER] = std::array::from_fn(|n| {
            if self.totals[n] == 0 {
                0.0
            } else {
                self.matches[n] as f64 / self.totals[n] as f64
            }
        });
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let brevity_penalty = if c > r {
            1.0
        } else if c == 0.0 {
            0.0
        } else {
            (1.0 - r / c).exp()
        };
        let bleu = if precisions.contains(&0.0) {
            0.0
        } else {
            100.0 * brevity_penalty * (precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64).exp()
        };
        BleuScore { bleu, brevity_penalty, precisions, hyp_len: self.hyp_len, ref_len: self.ref_len }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0..=100
    pub bleu: f64,
    pub brevity_penalty: f64,
    pub precisions: [f64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

pub fn bleu<H, R>(hyps: &[H], refs: &[R]) -> Result<BleuScore, EvalError>
where
    H: AsRef<[String]> + Sync,
    R: AsRef<[String]> + Sync,
{
    bleu_with(hyps, refs, Exec::Sequential)
}

pub fn bleu_with<H, R>(hyps: &[H], refs: &[R], exec: Exec) -> Result<BleuScore, EvalError>
where
    H: AsRef<[String]> + Sync,
    R: AsRef<[String]> + Sync,
{
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch { hyps: hyps.len(), refs: refs.len() });
    }
    if hyps.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let stats = exec.map_range(hyps.len(), |i| BleuStats::of_pair(hyps[i].as_ref(), refs[i].as_ref()));
    Ok(stats.into_iter().fold(BleuStats::default(), BleuStats::merge).score())
}

/// `exp` of the teacher-forced cross-entropy averaged over every target
/// token (EOS included) of the corpus.
pub fn perplexity(model: &Seq2Seq, pairs: &[ParallelPair], exec: Exec) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(model.corpus_loss(pairs, exec)?.mean().exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu: f64,
    pub ppl: f64,
    pub n_sentences: usize,
    pub brevity_penalty: f64,
    pub precisions: [f64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl EvalReport {
    pub fn new(score: BleuScore, ppl: f64, n_sentences: usize) -> Self {
        EvalReport {
            bleu: score.bleu,
            ppl,
            n_sentences,
            brevity_penalty: score.brevity_penalty,
            precisions: score.precisions,
            hyp_len: score.hyp_len,
            ref_len: score.ref_len,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "sentences  {}", self.n_sentences).unwrap();
        writeln!(s, "BLEU       {:.2}", self.bleu).unwrap();
        writeln!(s, "PPL        {:.2}", self.ppl).unwrap();
        writeln!(s, "BP         {:.4} (hyp {} / ref {})", self.brevity_penalty, self.hyp_len, self.ref_len).unwrap();
        let p: Vec<String> = self.precisions.iter().map(|p| format!("{:.4}", p)).collect();
        writeln!(s, "p1..p4     {}", p.join(" ")).unwrap();
        s
    }

    /// Writes `<stem>.json` and `<stem>.txt` next to each other.
    pub fn save(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json())?;
        std::fs::write(dir.join(format!("{stem}.txt")), self.to_text())
    }
}

/// Translates every source, scores against the targets, and computes
/// perplexity on the same pairs. Returns the report and the hypotheses.
pub fn evaluate(model: &Seq2Seq, pairs: &[ParallelPair], max_len: usize, exec: Exec) -> Result<(EvalReport, Vec<Sentence>), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let sources: Vec<Sentence> = pairs.iter().map(|p| p.source.clone()).collect();
    let hyps = model.translate_all(&sources, max_len, exec)?;
    let refs: Vec<&Sentence> = pairs.iter().map(|p| &p.target).collect();
    let refs: Vec<&[String]> = refs.iter().map(|s| s.tokens()).collect();
    let score = bleu_with(&hyps, &refs, exec)?;
    let ppl = perplexity(model, pairs, exec)?;
    Ok((EvalReport::new(score, ppl, pairs.len()), hyps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn perfect_match() {
        let h = vec![toks("a b c d e"), toks("x y z w")];
        let s = bleu(&h, &h).unwrap();
        assert_eq!(s.bleu, 100.0);
        assert_eq!(s.brevity_penalty, 1.0);
        assert_eq!(s.precisions, [1.0; 4]);
    }

    #[test]
    fn empty_hypotheses_score_zero() {
        let h = vec![toks(""), toks("")];
        let r = vec![toks("a b"), toks("c")];
        assert_eq!(bleu(&h, &r).unwrap().bleu, 0.0);
    }

    #[test]
    fn clipping() {
        let s = bleu(&[toks("the the the")], &[toks("the cat")]).unwrap();
        assert!((s.precisions[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.precisions[1], 0.0);
        assert_eq!(s.bleu, 0.0);
    }

    #[test]
    fn brevity_penalty_uses_corpus_totals() {
        let s = bleu(&[toks("a b c d")], &[toks("a b c d e f")]).unwrap();
        assert!((s.brevity_penalty - (1.0f64 - 6.0 / 4.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(bleu(&[toks("a")], &Vec::<Vec<String>>::new()), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(bleu(&Vec::<Vec<String>>::new(), &Vec::<Vec<String>>::new()), Err(EvalError::EmptyCorpus)));
    }

    #[test]
    fn modes_agree() {
        let h: Vec<Vec<String>> = (0..50).map(|i| toks(&format!("w{} w{} w{} w{} w{}", i % 3, i % 5, i % 2, i % 7, i % 4))).collect();
        let r: Vec<Vec<String>> = (0..50).map(|i| toks(&format!("w{} w{} w{} w{} w{}", i % 3, i % 5, i % 4, i % 7, i % 2))).collect();
        assert_eq!(bleu_with(&h, &r, Exec::Parallel).unwrap(), bleu_with(&h, &r, Exec::Sequential).unwrap());
    }
}
