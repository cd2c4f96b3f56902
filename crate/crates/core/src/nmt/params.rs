use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::rng;

/// One GRU: input weights `w_*` (H x in), recurrent weights `u_*` (H x H)
/// and biases `b_*` (H x 1) for the update (z), reset (r) and candidate (h)
/// transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(hidden, input);
        let u = || Tensor::zeros(hidden, hidden);
        let b = || Tensor::zeros(hidden, 1);
        GruParams { w_z: w(), w_r: w(), w_h: w(), u_z: u(), u_r: u(), u_h: u(), b_z: b(), b_r: b(), b_h: b() }
    }

    pub fn init(input: usize, hidden: usize, bound: f64, r: &mut rng::Rng) -> Self {
        let w = |r: &mut rng::Rng| Tensor::uniform(hidden, input, bound, r);
        let u = |r: &mut rng::Rng| Tensor::uniform(hidden, hidden, bound, r);
        let b = || Tensor::zeros(hidden, 1);
        GruParams { w_z: w(r), w_r: w(r), w_h: w(r), u_z: u(r), u_r: u(r), u_h: u(r), b_z: b(), b_r: b(), b_h: b() }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows
    }

    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        for (n, t) in [
            ("w_z", &self.w_z),
            ("w_r", &self.w_r),
            ("w_h", &self.w_h),
            ("u_z", &self.u_z),
            ("u_r", &self.u_r),
            ("u_h", &self.u_h),
            ("b_z", &self.b_z),
            ("b_r", &self.b_r),
            ("b_h", &self.b_h),
        ] {
            out.push((format!("{prefix}.{n}"), t));
        }
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.extend([
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]);
    }
}

/// Every trainable tensor of the translator. Also used as the gradient and
/// optimizer-moment container, since those share its shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq2SeqParams {
    /// |V_src| x E
    pub src_emb: Tensor,
    /// |V_tgt| x E
    pub tgt_emb: Tensor,
    pub enc_fwd: GruParams,
    pub enc_bwd: GruParams,
    /// Input is `[embedded previous token; context]`, E + 2H.
    pub dec: GruParams,
    /// H x H, applied to the decoder state.
    pub att_w: Tensor,
    /// H x 2H, applied to each annotation.
    pub att_u: Tensor,
    /// H x 1
    pub att_v: Tensor,
    /// H x 2H, maps `[final fwd; final bwd]` to the first decoder state.
    pub bridge: Tensor,
    /// |V_tgt| x (H + 2H + E) over `[state; context; embedded previous token]`.
    pub out_w: Tensor,
    pub out_b: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

impl Seq2SeqParams {
    pub fn zeros(d: ModelDims) -> Self {
        let (e, h) = (d.embed, d.hidden);
        Seq2SeqParams {
            src_emb: Tensor::zeros(d.src_vocab, e),
            tgt_emb: Tensor::zeros(d.tgt_vocab, e),
            enc_fwd: GruParams::zeros(e, h),
            enc_bwd: GruParams::zeros(e, h),
            dec: GruParams::zeros(e + 2 * h, h),
            att_w: Tensor::zeros(h, h),
            att_u: Tensor::zeros(h, 2 * h),
            att_v: Tensor::zeros(h, 1),
            bridge: Tensor::zeros(h, 2 * h),
            out_w: Tensor::zeros(d.tgt_vocab, 3 * h + e),
            out_b: Tensor::zeros(d.tgt_vocab, 1),
        }
    }

    /// Weights uniform in (-0.08, 0.08), biases zero.
    pub fn init(d: ModelDims, seed: u64) -> Self {
        const BOUND: f64 = 0.08;
        let (e, h) = (d.embed, d.hidden);
        let mut r = rng::rng(seed);
        let r = &mut r;
        Seq2SeqParams {
            src_emb: Tensor::uniform(d.src_vocab, e, BOUND, r),
            tgt_emb: Tensor::uniform(d.tgt_vocab, e, BOUND, r),
            enc_fwd: GruParams::init(e, h, BOUND, r),
            enc_bwd: GruParams::init(e, h, BOUND, r),
            dec: GruParams::init(e + 2 * h, h, BOUND, r),
            att_w: Tensor::uniform(h, h, BOUND, r),
            att_u: Tensor::uniform(h, 2 * h, BOUND, r),
            att_v: Tensor::uniform(h, 1, BOUND, r),
            bridge: Tensor::uniform(h, 2 * h, BOUND, r),
            out_w: Tensor::uniform(d.tgt_vocab, 3 * h + e, BOUND, r),
            out_b: Tensor::zeros(d.tgt_vocab, 1),
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            src_vocab: self.src_emb.rows,
            tgt_vocab: self.tgt_emb.rows,
            embed: self.src_emb.cols,
            hidden: self.bridge.rows,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Seq2SeqParams::zeros(self.dims())
    }

    /// Checks that every tensor has the shape implied by [`Self::dims`].
    pub fn check_shapes(&self) -> Result<(), String> {
        let expected = Seq2SeqParams::zeros(self.dims());
        for ((name, a), (_, b)) in self.tensors().into_iter().zip(expected.tensors()) {
            if !a.same_shape(b) || a.data.len() != a.rows * a.cols {
                return Err(format!("{name}: {}x{} does not match {}x{}", a.rows, a.cols, b.rows, b.cols));
            }
        }
        Ok(())
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![("src_emb".to_string(), &self.src_emb), ("tgt_emb".to_string(), &self.tgt_emb)];
        self.enc_fwd.tensors("enc_fwd", &mut out);
        self.enc_bwd.tensors("enc_bwd", &mut out);
        self.dec.tensors("dec", &mut out);
        for (n, t) in [
            ("att_w", &self.att_w),
            ("att_u", &self.att_u),
            ("att_v", &self.att_v),
            ("bridge", &self.bridge),
            ("out_w", &self.out_w),
            ("out_b", &self.out_b),
        ] {
            out.push((n.to_string(), t));
        }
        out
    }

    /// Same order as [`Self::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.src_emb, &mut self.tgt_emb];
        self.enc_fwd.tensors_mut(&mut out);
        self.enc_bwd.tensors_mut(&mut out);
        self.dec.tensors_mut(&mut out);
        out.extend([
            &mut self.att_w,
            &mut self.att_u,
            &mut self.att_v,
            &mut self.bridge,
            &mut self.out_w,
            &mut self.out_b,
        ]);
        out
    }

    pub fn add_assign(&mut self, other: &Seq2SeqParams) {
        for (a, (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.tensors_mut().into_iter().for_each(|t| t.scale(s));
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors().iter().map(|(_, t)| t.sum_sq()).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.data.iter().all(|x| x.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.data.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: ModelDims = ModelDims { src_vocab: 7, tgt_vocab: 9, embed: 3, hidden: 5 };

    #[test]
    fn shapes_are_consistent() {
        let p = Seq2SeqParams::init(D, 1);
        p.check_shapes().unwrap();
        assert_eq!(p.dims(), D);
        assert_eq!(p.dec.input_dim(), 3 + 10);
        assert_eq!(p.out_w.cols, 5 + 10 + 3);
        assert_eq!(p.tensors().len(), 2 + 27 + 6);
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(Seq2SeqParams::init(D, 4), Seq2SeqParams::init(D, 4));
        assert_ne!(Seq2SeqParams::init(D, 4), Seq2SeqParams::init(D, 5));
    }

    #[test]
    fn tensors_mut_matches_tensors_order() {
        let mut p = Seq2SeqParams::init(D, 2);
        let shapes: Vec<(usize, usize)> = p.tensors().iter().map(|(_, t)| (t.rows, t.cols)).collect();
        let shapes_mut: Vec<(usize, usize)> = p.tensors_mut().iter().map(|t| (t.rows, t.cols)).collect();
        assert_eq!(shapes, shapes_mut);
    }
}
