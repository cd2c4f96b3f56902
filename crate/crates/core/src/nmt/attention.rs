use super::params::Seq2SeqParams;
use super::tensor::{axpy, dot, gemv_add, gemv_t_add, outer_add};
use super::NmtError;

/// Normalised distribution plus log-normaliser of `scores` restricted to
/// `mask` (all positions when `None`). Masked entries get probability 0
/// exactly and are never read. This single kernel serves both the attention
/// weights and the output distribution.
pub fn masked_softmax(scores: &[f64], mask: Option<&[bool]>) -> Result<(Vec<f64>, f64), NmtError> {
    let live = |j: usize| mask.is_none_or(|m| m[j]);
    let max = (0..scores.len()).filter(|&j| live(j)).map(|j| scores[j]).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(NmtError::AllMasked);
    }
    let mut probs = vec![0.0; scores.len()];
    let mut sum = 0.0;
    for j in (0..scores.len()).filter(|&j| live(j)) {
        let e = (scores[j] - max).exp();
        probs[j] = e;
        sum += e;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Ok((probs, max + sum.ln()))
}

/// Attention activations for one decoder step.
#[derive(Debug, Clone)]
pub struct AttentionStep {
    /// `tanh(W_a s + U_a a_j)` per live position, flattened (T x H);
    /// masked rows are left zero.
    pub hidden: Vec<f64>,
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
}

/// Precomputes `U_a a_j` for each live position (T x H, masked rows zero).
pub fn project_annotations(p: &Seq2SeqParams, annotations: &[f64], mask: &[bool]) -> Vec<f64> {
    let h = p.att_w.rows;
    let two_h = 2 * h;
    let mut out = vec![0.0; mask.len() * h];
    for (j, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        gemv_add(&p.att_u, &annotations[j * two_h..(j + 1) * two_h], &mut out[j * h..(j + 1) * h]);
    }
    out
}

/// Additive attention: `e_j = v . tanh(W_a s + U_a a_j)`, softmax over live
/// positions, context `sum_j w_j a_j`.
pub fn attend(p: &Seq2SeqParams, state: &[f64], annotations: &[f64], projected: &[f64], mask: &[bool]) -> Result<AttentionStep, NmtError> {
    let h = p.att_w.rows;
    let two_h = 2 * h;
    let t = mask.len();
    let mut q = vec![0.0; h];
    gemv_add(&p.att_w, state, &mut q);
    let mut hidden = vec![0.0; t * h];
    let mut scores = vec![f64::NEG_INFINITY; t];
    for j in (0..t).filter(|&j| mask[j]) {
        let row = &mut hidden[j * h..(j + 1) * h];
        for k in 0..h {
            row[k] = (q[k] + projected[j * h + k]).tanh();
        }
        scores[j] = dot(&p.att_v.data, row);
    }
    let (weights, _) = masked_softmax(&scores, Some(mask))?;
    let mut context = vec![0.0; two_h];
    for j in (0..t).filter(|&j| mask[j]) {
        axpy(weights[j], &annotations[j * two_h..(j + 1) * two_h], &mut context);
    }
    Ok(AttentionStep { hidden, weights, context })
}

/// Public single-call form of [`attend`].
pub fn attention(p: &Seq2SeqParams, state: &[f64], annotations: &[f64], mask: &[bool]) -> Result<(Vec<f64>, Vec<f64>), NmtError> {
    let projected = project_annotations(p, annotations, mask);
    let s = attend(p, state, annotations, &projected, mask)?;
    Ok((s.context, s.weights))
}

/// Backward through one [`attend`] call given `d_context`.
///
/// Accumulates into `g.att_w`, `g.att_v`, `d_state`, `d_annotations`, and
/// adds the pre-activation gradients into `d_projected` (T x H) so the
/// `U_a` product can be differentiated once per sentence.
#[allow(clippy::too_many_arguments)]
pub fn attend_backward(
    p: &Seq2SeqParams,
    step: &AttentionStep,
    state: &[f64],
    annotations: &[f64],
    mask: &[bool],
    d_context: &[f64],
    g: &mut Seq2SeqParams,
    d_state: &mut [f64],
    d_annotations: &mut [f64],
    d_projected: &mut [f64],
) {
    let h = p.att_w.rows;
    let two_h = 2 * h;
    let live: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    let mut d_w = vec![0.0; mask.len()];
    for &j in &live {
        let a = &annotations[j * two_h..(j + 1) * two_h];
        d_w[j] = dot(d_context, a);
        axpy(step.weights[j], d_context, &mut d_annotations[j * two_h..(j + 1) * two_h]);
    }
    let mean: f64 = live.iter().map(|&j| step.weights[j] * d_w[j]).sum();
    let mut dq = vec![0.0; h];
    for &j in &live {
        let de = step.weights[j] * (d_w[j] - mean);
        let row = &step.hidden[j * h..(j + 1) * h];
        axpy(de, row, &mut g.att_v.data);
        let dp = &mut d_projected[j * h..(j + 1) * h];
        for k in 0..h {
            let d = de * p.att_v.data[k] * (1.0 - row[k] * row[k]);
            dp[k] += d;
            dq[k] += d;
        }
    }
    outer_add(&mut g.att_w, &dq, state);
    gemv_t_add(&p.att_w, &dq, d_state);
}
