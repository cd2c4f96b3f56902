//! Forward pass, analytic backward pass and greedy decoding.
//!
//! Every row of a batch is processed over its true length only, so padding
//! never reaches an arithmetic operation. Gradients are accumulated as sums
//! over fixed row shards, the shards are added in order, and the total is
//! divided by the number of predicted target tokens.

use serde::{Deserialize, Serialize};

use super::attention::{attend, attend_backward, masked_softmax, project_annotations, AttentionStep};
use super::gru::{gru_backward, gru_forward, GruStep};
use super::params::Seq2SeqParams;
use super::tensor::{axpy, gemv_add, gemv_t_add, outer_add};
use super::vocab::{EOS, PAD, SOS};
use super::NmtError;
use crate::exec::Exec;
use crate::rng;
use rand::Rng as _;

/// Rows per gradient shard are `ceil(B / GRAD_SHARDS)`; the assignment is
/// independent of thread count.
pub const GRAD_SHARDS: usize = 4;

/// Padded id matrices. Targets carry SOS and EOS; lengths include them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub src: Vec<u32>,
    pub src_width: usize,
    pub src_lens: Vec<usize>,
    pub tgt: Vec<u32>,
    pub tgt_width: usize,
    pub tgt_lens: Vec<usize>,
}

impl Batch {
    /// `rows` are (source ids, target ids without SOS/EOS).
    pub fn from_ids(rows: &[(Vec<u32>, Vec<u32>)]) -> Self {
        let src_width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let tgt_width = rows.iter().map(|r| r.1.len() + 2).max().unwrap_or(0);
        let mut src = vec![PAD; rows.len() * src_width];
        let mut tgt = vec![PAD; rows.len() * tgt_width];
        for (b, (s, t)) in rows.iter().enumerate() {
            src[b * src_width..b * src_width + s.len()].copy_from_slice(s);
            let row = &mut tgt[b * tgt_width..(b + 1) * tgt_width];
            row[0] = SOS;
            row[1..=t.len()].copy_from_slice(t);
            row[t.len() + 1] = EOS;
        }
        Batch {
            src,
            src_width,
            src_lens: rows.iter().map(|r| r.0.len()).collect(),
            tgt,
            tgt_width,
            tgt_lens: rows.iter().map(|r| r.1.len() + 2).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.src_lens.len()
    }

    pub fn src_row(&self, b: usize) -> &[u32] {
        &self.src[b * self.src_width..(b + 1) * self.src_width]
    }

    pub fn tgt_row(&self, b: usize) -> &[u32] {
        &self.tgt[b * self.tgt_width..(b + 1) * self.tgt_width]
    }

    /// Predicted target positions (everything after SOS).
    pub fn target_tokens(&self) -> usize {
        self.tgt_lens.iter().map(|l| l - 1).sum()
    }

    /// Copy with extra PAD columns appended to both matrices.
    pub fn with_padding(&self, extra_src: usize, extra_tgt: usize) -> Batch {
        let widen = |m: &[u32], w: usize, extra: usize| -> Vec<u32> {
            m.chunks(w.max(1)).take(self.size()).flat_map(|r| r.iter().copied().chain(std::iter::repeat_n(PAD, extra))).collect()
        };
        Batch {
            src: widen(&self.src, self.src_width, extra_src),
            src_width: self.src_width + extra_src,
            src_lens: self.src_lens.clone(),
            tgt: widen(&self.tgt, self.tgt_width, extra_tgt),
            tgt_width: self.tgt_width + extra_tgt,
            tgt_lens: self.tgt_lens.clone(),
        }
    }

    pub fn validate(&self, src_vocab: usize, tgt_vocab: usize) -> Result<(), NmtError> {
        let bad = |m: String| Err(NmtError::InvalidBatch(m));
        let b = self.size();
        if self.tgt_lens.len() != b || self.src.len() != b * self.src_width || self.tgt.len() != b * self.tgt_width {
            return bad("matrix sizes do not match lengths".into());
        }
        for r in 0..b {
            let (sl, tl) = (self.src_lens[r], self.tgt_lens[r]);
            if sl == 0 || sl > self.src_width || tl < 2 || tl > self.tgt_width {
                return bad(format!("row {r}: bad lengths ({sl}, {tl})"));
            }
            let (s, t) = (self.src_row(r), self.tgt_row(r));
            if s[..sl].iter().any(|&i| i as usize >= src_vocab) || t[..tl].iter().any(|&i| i as usize >= tgt_vocab) {
                return bad(format!("row {r}: id out of vocabulary range"));
            }
            if s[sl..].iter().chain(&t[tl..]).any(|&i| i != PAD) {
                return bad(format!("row {r}: non-PAD beyond length"));
            }
        }
        Ok(())
    }
}

/// Encoder state for one row, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct RowEncoding {
    pub fwd: Vec<GruStep>,
    /// Indexed by source position.
    pub bwd: Vec<GruStep>,
    /// width x 2H; rows at or beyond the true length are zero.
    pub annotations: Vec<f64>,
    pub mask: Vec<bool>,
    pub projected: Vec<f64>,
    pub bridge_in: Vec<f64>,
    pub initial_state: Vec<f64>,
}

pub fn encode_row(p: &Seq2SeqParams, src: &[u32], len: usize) -> RowEncoding {
    let h = p.bridge.rows;
    let width = src.len();
    let emb = |t: usize| p.src_emb.row(src[t] as usize);
    let mut fwd: Vec<GruStep> = Vec::with_capacity(len);
    let mut state = vec![0.0; h];
    for t in 0..len {
        let s = gru_forward(&p.enc_fwd, emb(t), &state);
        state.clone_from(&s.h);
        fwd.push(s);
    }
    let mut bwd_rev: Vec<GruStep> = Vec::with_capacity(len);
    let mut state = vec![0.0; h];
    for t in (0..len).rev() {
        let s = gru_forward(&p.enc_bwd, emb(t), &state);
        state.clone_from(&s.h);
        bwd_rev.push(s);
    }
    bwd_rev.reverse();
    let bwd = bwd_rev;
    let mut annotations = vec![0.0; width * 2 * h];
    for t in 0..len {
        annotations[t * 2 * h..t * 2 * h + h].copy_from_slice(&fwd[t].h);
        annotations[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&bwd[t].h);
    }
    let mask: Vec<bool> = (0..width).map(|t| t < len).collect();
    let mut bridge_in = fwd[len - 1].h.clone();
    bridge_in.extend_from_slice(&bwd[0].h);
    let mut pre = vec![0.0; h];
    gemv_add(&p.bridge, &bridge_in, &mut pre);
    let initial_state = pre.into_iter().map(f64::tanh).collect();
    let projected = project_annotations(p, &annotations, &mask);
    RowEncoding { fwd, bwd, annotations, mask, projected, bridge_in, initial_state }
}

#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// B x width x 2H
    pub annotations: Vec<f64>,
    /// B x H
    pub initial_state: Vec<f64>,
}

/// Runs both encoder directions over the true length of every row.
pub fn encode(p: &Seq2SeqParams, batch: &Batch) -> EncoderOutput {
    let mut annotations = Vec::new();
    let mut initial_state = Vec::new();
    for b in 0..batch.size() {
        let e = encode_row(p, batch.src_row(b), batch.src_lens[b]);
        annotations.extend(e.annotations);
        initial_state.extend(e.initial_state);
    }
    EncoderOutput { annotations, initial_state }
}

/// Teacher forcing: the gold previous token is fed with probability `ratio`,
/// otherwise the model's own argmax. `seed` drives the per-row coin flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub ratio: f64,
    pub seed: u64,
}

impl Forcing {
    pub const FULL: Forcing = Forcing { ratio: 1.0, seed: 0 };
}

/// One decoder step's activations.
#[derive(Debug, Clone)]
pub struct DecStep {
    pub prev: u32,
    pub target: u32,
    pub s_prev: Vec<f64>,
    pub att: AttentionStep,
    pub gru: GruStep,
    /// `[state; context; embedded previous token]`
    pub out_in: Vec<f64>,
    pub logits: Vec<f64>,
    pub log_norm: f64,
}

fn decoder_step(p: &Seq2SeqParams, enc: &RowEncoding, s_prev: &[f64], prev: u32) -> Result<(AttentionStep, GruStep, Vec<f64>, Vec<f64>), NmtError> {
    let att = attend(p, s_prev, &enc.annotations, &enc.projected, &enc.mask)?;
    let emb = p.tgt_emb.row(prev as usize);
    let mut x = emb.to_vec();
    x.extend_from_slice(&att.context);
    let gru = gru_forward(&p.dec, &x, s_prev);
    let mut out_in = gru.h.clone();
    out_in.extend_from_slice(&att.context);
    out_in.extend_from_slice(emb);
    let mut logits = p.out_b.data.clone();
    gemv_add(&p.out_w, &out_in, &mut logits);
    Ok((att, gru, out_in, logits))
}

fn argmax(v: &[f64]) -> u32 {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best as u32
}

/// Decodes one row against its gold target; returns the steps and the
/// summed cross-entropy.
pub fn decode_row(p: &Seq2SeqParams, enc: &RowEncoding, tgt: &[u32], len: usize, forcing: Forcing, row: u64) -> Result<(Vec<DecStep>, f64), NmtError> {
    let mut coin = (forcing.ratio < 1.0).then(|| rng::rng_stream(forcing.seed, row));
    let mut steps: Vec<DecStep> = Vec::with_capacity(len - 1);
    let mut s_prev = enc.initial_state.clone();
    let mut loss = 0.0;
    let mut prev = tgt[0];
    for t in 1..len {
        if t > 1 {
            let own = coin.as_mut().is_some_and(|c| c.gen::<f64>() >= forcing.ratio);
            prev = if own { argmax(&steps[t - 2].logits) } else { tgt[t - 1] };
        }
        let (att, gru, out_in, logits) = decoder_step(p, enc, &s_prev, prev)?;
        let (_, log_norm) = masked_softmax(&logits, None)?;
        let target = tgt[t];
        loss += log_norm - logits[target as usize];
        let s_next = gru.h.clone();
        steps.push(DecStep { prev, target, s_prev, att, gru, out_in, logits, log_norm });
        s_prev = s_next;
    }
    Ok((steps, loss))
}

/// Accumulates the gradient of the row's summed cross-entropy into `g`.
pub fn backward_row(p: &Seq2SeqParams, src: &[u32], enc: &RowEncoding, steps: &[DecStep], g: &mut Seq2SeqParams) {
    let h = p.bridge.rows;
    let e = p.src_emb.cols;
    let width = enc.mask.len();
    let len = enc.fwd.len();
    let mut d_ann = vec![0.0; width * 2 * h];
    let mut d_proj = vec![0.0; width * h];
    let mut ds = vec![0.0; h];
    let mut d_out_in = vec![0.0; 3 * h + e];
    let mut dx = vec![0.0; e + 2 * h];
    for st in steps.iter().rev() {
        let mut dlogits: Vec<f64> = st.logits.iter().map(|l| (l - st.log_norm).exp()).collect();
        dlogits[st.target as usize] -= 1.0;
        outer_add(&mut g.out_w, &dlogits, &st.out_in);
        axpy(1.0, &dlogits, &mut g.out_b.data);
        d_out_in.iter_mut().for_each(|x| *x = 0.0);
        gemv_t_add(&p.out_w, &dlogits, &mut d_out_in);

        let mut ds_t = ds.clone();
        axpy(1.0, &d_out_in[..h], &mut ds_t);
        let mut dc = d_out_in[h..3 * h].to_vec();
        let mut demb = d_out_in[3 * h..].to_vec();

        dx.iter_mut().for_each(|x| *x = 0.0);
        let mut ds_prev = vec![0.0; h];
        gru_backward(&p.dec, &st.gru, &ds_t, &mut g.dec, &mut dx, &mut ds_prev);
        axpy(1.0, &dx[..e], &mut demb);
        axpy(1.0, &dx[e..], &mut dc);

        attend_backward(p, &st.att, &st.s_prev, &enc.annotations, &enc.mask, &dc, g, &mut ds_prev, &mut d_ann, &mut d_proj);
        axpy(1.0, &demb, g.tgt_emb.row_mut(st.prev as usize));
        ds = ds_prev;
    }

    for j in 0..len {
        let a = &enc.annotations[j * 2 * h..(j + 1) * 2 * h];
        let dp = &d_proj[j * h..(j + 1) * h];
        outer_add(&mut g.att_u, dp, a);
        gemv_t_add(&p.att_u, dp, &mut d_ann[j * 2 * h..(j + 1) * 2 * h]);
    }

    let d_pre: Vec<f64> = ds.iter().zip(&enc.initial_state).map(|(d, s)| d * (1.0 - s * s)).collect();
    outer_add(&mut g.bridge, &d_pre, &enc.bridge_in);
    let mut d_bridge_in = vec![0.0; 2 * h];
    gemv_t_add(&p.bridge, &d_pre, &mut d_bridge_in);

    // forward direction, right to left
    let mut carry = d_bridge_in[..h].to_vec();
    let mut dxe = vec![0.0; e];
    for t in (0..len).rev() {
        let mut dh = carry;
        axpy(1.0, &d_ann[t * 2 * h..t * 2 * h + h], &mut dh);
        dxe.iter_mut().for_each(|x| *x = 0.0);
        let mut dh_prev = vec![0.0; h];
        gru_backward(&p.enc_fwd, &enc.fwd[t], &dh, &mut g.enc_fwd, &mut dxe, &mut dh_prev);
        axpy(1.0, &dxe, g.src_emb.row_mut(src[t] as usize));
        carry = dh_prev;
    }
    // backward direction, left to right
    let mut carry = d_bridge_in[h..].to_vec();
    for t in 0..len {
        let mut dh = carry;
        axpy(1.0, &d_ann[t * 2 * h + h..(t + 1) * 2 * h], &mut dh);
        dxe.iter_mut().for_each(|x| *x = 0.0);
        let mut dh_prev = vec![0.0; h];
        gru_backward(&p.enc_bwd, &enc.bwd[t], &dh, &mut g.enc_bwd, &mut dxe, &mut dh_prev);
        axpy(1.0, &dxe, g.src_emb.row_mut(src[t] as usize));
        carry = dh_prev;
    }
}

/// Summed cross-entropy and the number of predicted tokens it covers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossStats {
    pub loss_sum: f64,
    pub tokens: usize,
}

impl LossStats {
    pub fn mean(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.loss_sum / self.tokens as f64
        }
    }

    pub fn merge(self, other: LossStats) -> LossStats {
        LossStats { loss_sum: self.loss_sum + other.loss_sum, tokens: self.tokens + other.tokens }
    }
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    /// Mean cross-entropy over non-PAD target positions.
    pub loss: f64,
    pub stats: LossStats,
    /// Per row, per decoder step, the unnormalised scores over V_tgt.
    pub logits: Vec<Vec<Vec<f64>>>,
}

pub fn forward_loss(p: &Seq2SeqParams, batch: &Batch, forcing: Forcing) -> Result<LossOutput, NmtError> {
    let dims = p.dims();
    batch.validate(dims.src_vocab, dims.tgt_vocab)?;
    let mut stats = LossStats::default();
    let mut logits = Vec::with_capacity(batch.size());
    for b in 0..batch.size() {
        let enc = encode_row(p, batch.src_row(b), batch.src_lens[b]);
        let (steps, loss) = decode_row(p, &enc, batch.tgt_row(b), batch.tgt_lens[b], forcing, b as u64)?;
        stats = stats.merge(LossStats { loss_sum: loss, tokens: steps.len() });
        logits.push(steps.into_iter().map(|s| s.logits).collect());
    }
    Ok(LossOutput { loss: stats.mean(), stats, logits })
}

fn shard_len(b: usize) -> usize {
    b.div_ceil(GRAD_SHARDS).max(1)
}

/// Loss statistics and the gradient of the mean loss.
pub fn loss_and_grad(p: &Seq2SeqParams, batch: &Batch, forcing: Forcing, exec: Exec) -> Result<(LossStats, Seq2SeqParams), NmtError> {
    let dims = p.dims();
    batch.validate(dims.src_vocab, dims.tgt_vocab)?;
    let rows: Vec<usize> = (0..batch.size()).collect();
    let shards = exec.map_chunks(&rows, shard_len(rows.len()), |chunk| -> Result<(LossStats, Seq2SeqParams), NmtError> {
        let mut g = p.zeros_like();
        let mut stats = LossStats::default();
        for &b in chunk {
            let src = batch.src_row(b);
            let enc = encode_row(p, src, batch.src_lens[b]);
            let (steps, loss) = decode_row(p, &enc, batch.tgt_row(b), batch.tgt_lens[b], forcing, b as u64)?;
            backward_row(p, src, &enc, &steps, &mut g);
            stats = stats.merge(LossStats { loss_sum: loss, tokens: steps.len() });
        }
        Ok((stats, g))
    });
    let mut total = p.zeros_like();
    let mut stats = LossStats::default();
    for shard in shards {
        let (s, g) = shard?;
        total.add_assign(&g);
        stats = stats.merge(s);
    }
    if stats.tokens > 0 {
        total.scale(1.0 / stats.tokens as f64);
    }
    Ok((stats, total))
}

/// Gradient of the batch-mean loss under full teacher forcing.
pub fn backward(p: &Seq2SeqParams, batch: &Batch) -> Result<Seq2SeqParams, NmtError> {
    loss_and_grad(p, batch, Forcing::FULL, Exec::Sequential).map(|(_, g)| g)
}

/// Loss only, sharded like [`loss_and_grad`].
pub fn batch_loss(p: &Seq2SeqParams, batch: &Batch, exec: Exec) -> Result<LossStats, NmtError> {
    let dims = p.dims();
    batch.validate(dims.src_vocab, dims.tgt_vocab)?;
    let rows: Vec<usize> = (0..batch.size()).collect();
    let parts = exec.map_chunks(&rows, shard_len(rows.len()), |chunk| -> Result<LossStats, NmtError> {
        let mut stats = LossStats::default();
        for &b in chunk {
            let enc = encode_row(p, batch.src_row(b), batch.src_lens[b]);
            let (steps, loss) = decode_row(p, &enc, batch.tgt_row(b), batch.tgt_lens[b], Forcing::FULL, b as u64)?;
            stats = stats.merge(LossStats { loss_sum: loss, tokens: steps.len() });
        }
        Ok(stats)
    });
    parts.into_iter().try_fold(LossStats::default(), |acc, s| Ok(acc.merge(s?)))
}

/// Greedy output for one source row.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Generated ids, without SOS/EOS.
    pub ids: Vec<u32>,
    /// One row of attention weights (source width) per generated step,
    /// including the step that produced EOS.
    pub attention: Vec<Vec<f64>>,
}

/// Greedy decoding from SOS until EOS or `max_len` tokens.
pub fn greedy_decode(p: &Seq2SeqParams, src: &[u32], len: usize, max_len: usize) -> Result<Decoded, NmtError> {
    if len == 0 || len > src.len() {
        return Err(NmtError::InvalidBatch("source length out of range".into()));
    }
    let enc = encode_row(p, src, len);
    let mut s = enc.initial_state.clone();
    let mut prev = SOS;
    let mut out = Decoded { ids: Vec::new(), attention: Vec::new() };
    while out.ids.len() < max_len {
        let (att, gru, _, logits) = decoder_step(p, &enc, &s, prev)?;
        out.attention.push(att.weights);
        let next = argmax(&logits);
        if next == EOS {
            break;
        }
        out.ids.push(next);
        s = gru.h;
        prev = next;
    }
    Ok(out)
}

pub fn translate_batch(p: &Seq2SeqParams, batch: &Batch, max_len: usize, exec: Exec) -> Result<Vec<Decoded>, NmtError> {
    exec.map_range(batch.size(), |b| greedy_decode(p, batch.src_row(b), batch.src_lens[b], max_len))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nmt::params::ModelDims;

    const D: ModelDims = ModelDims { src_vocab: 12, tgt_vocab: 10, embed: 4, hidden: 5 };

    fn batch() -> Batch {
        Batch::from_ids(&[(vec![4, 5, 6, 7], vec![4, 5, 6]), (vec![8, 1], vec![7]), (vec![9, 10, 11], vec![8, 9, 4, 5])])
    }

    #[test]
    fn batch_layout() {
        let b = batch();
        assert_eq!(b.src_width, 4);
        assert_eq!(b.tgt_width, 6);
        assert_eq!(b.tgt_row(1), &[SOS, 7, EOS, PAD, PAD, PAD]);
        assert_eq!(b.target_tokens(), 4 + 2 + 5);
        b.validate(12, 10).unwrap();
        assert!(b.validate(11, 10).is_err());
    }

    #[test]
    fn zero_output_projection_gives_uniform_loss() {
        let mut p = Seq2SeqParams::init(D, 3);
        p.out_w.fill(0.0);
        p.out_b.fill(0.0);
        let out = forward_loss(&p, &batch(), Forcing::FULL).unwrap();
        assert!((out.loss - (10f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn unbatched_equals_batched() {
        let p = Seq2SeqParams::init(D, 4);
        let b = batch();
        let whole = encode(&p, &b);
        let single = Batch::from_ids(&[(vec![9, 10, 11], vec![8, 9, 4, 5])]);
        let one = encode(&p, &single);
        let h2 = 2 * D.hidden;
        assert_eq!(&whole.annotations[2 * 4 * h2..2 * 4 * h2 + 3 * h2], &one.annotations[..]);
        assert_eq!(&whole.initial_state[2 * D.hidden..], &one.initial_state[..]);
        // padded annotation rows are zero
        assert!(whole.annotations[4 * h2 + 2 * h2..4 * h2 + 4 * h2].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn length_one_uses_position_zero_for_both_directions() {
        let p = Seq2SeqParams::init(D, 5);
        let enc = encode_row(&p, &[6, PAD], 1);
        assert_eq!(enc.fwd.len(), 1);
        assert_eq!(enc.bwd.len(), 1);
        assert_eq!(&enc.bridge_in[..D.hidden], &enc.fwd[0].h[..]);
        assert_eq!(&enc.bridge_in[D.hidden..], &enc.bwd[0].h[..]);
    }

    #[test]
    fn gradients_match_central_differences_on_a_few_coordinates() {
        let p = Seq2SeqParams::init(D, 6);
        let b = batch();
        let g = backward(&p, &b).unwrap();
        let loss = |q: &Seq2SeqParams| forward_loss(q, &b, Forcing::FULL).unwrap().loss;
        let eps = 1e-5;
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        let grads: Vec<Vec<f64>> = g.tensors().into_iter().map(|(_, t)| t.data.clone()).collect();
        for (ti, name) in names.iter().enumerate() {
            let n = grads[ti].len();
            for k in [0, n / 2, n - 1] {
                let mut plus = p.clone();
                plus.tensors_mut()[ti].data[k] += eps;
                let mut minus = p.clone();
                minus.tensors_mut()[ti].data[k] -= eps;
                let num = (loss(&plus) - loss(&minus)) / (2.0 * eps);
                let ana = grads[ti][k];
                assert!((num - ana).abs() <= 1e-6 + 1e-4 * num.abs().max(ana.abs()), "{name}[{k}]: {ana} vs {num}");
            }
        }
    }

    #[test]
    fn sequential_and_parallel_grads_are_identical() {
        let p = Seq2SeqParams::init(D, 7);
        let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..11).map(|i| (vec![4 + i % 8, 5, 6], vec![4 + i % 6, 5])).collect();
        let b = Batch::from_ids(&rows);
        let (s1, g1) = loss_and_grad(&p, &b, Forcing::FULL, Exec::Sequential).unwrap();
        let (s2, g2) = loss_and_grad(&p, &b, Forcing::FULL, Exec::Parallel).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(g1, g2);
        assert_eq!(batch_loss(&p, &b, Exec::Parallel).unwrap(), s1);
    }

    #[test]
    fn decoding_limits() {
        let p = Seq2SeqParams::init(D, 8);
        assert!(greedy_decode(&p, &[4, 5], 2, 0).unwrap().ids.is_empty());
        let d = greedy_decode(&p, &[1, 1, 1], 3, 7).unwrap();
        assert!(d.ids.len() <= 7);
        assert!(d.attention.iter().all(|w| (w.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn partial_teacher_forcing_runs() {
        let p = Seq2SeqParams::init(D, 9);
        let (s, g) = loss_and_grad(&p, &batch(), Forcing { ratio: 0.5, seed: 3 }, Exec::Sequential).unwrap();
        assert!(s.loss_sum.is_finite() && g.all_finite());
    }
}
