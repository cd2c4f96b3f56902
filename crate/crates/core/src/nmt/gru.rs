use super::params::GruParams;
use super::tensor::{gemv_add, gemv_t_add, outer_add, sigmoid, Tensor};

/// Forward activations of one GRU step, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GruStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    /// `r * h_prev`
    pub rh: Vec<f64>,
    /// Candidate state.
    pub hc: Vec<f64>,
    pub h: Vec<f64>,
}

/// ```text
/// z  = sigmoid(W_z x + U_z h + b_z)
/// r  = sigmoid(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r * h) + b_h)
/// h' = (1 - z) * h + z * h~
/// ```
pub fn gru_forward(p: &GruParams, x: &[f64], h_prev: &[f64]) -> GruStep {
    let n = p.hidden_dim();
    let affine = |w: &Tensor, u: &Tensor, b: &Tensor, hv: &[f64]| {
        let mut a = b.data.clone();
        gemv_add(w, x, &mut a);
        gemv_add(u, hv, &mut a);
        a
    };
    let z: Vec<f64> = affine(&p.w_z, &p.u_z, &p.b_z, h_prev).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = affine(&p.w_r, &p.u_r, &p.b_r, h_prev).into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let hc: Vec<f64> = affine(&p.w_h, &p.u_h, &p.b_h, &rh).into_iter().map(f64::tanh).collect();
    let h = (0..n).map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * hc[k]).collect();
    GruStep { x: x.to_vec(), h_prev: h_prev.to_vec(), z, r, rh, hc, h }
}

pub fn gru_cell(p: &GruParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    gru_forward(p, x, h).h
}

/// Accumulates parameter gradients into `g` and input/state gradients into
/// `dx` and `dh_prev`, given `dh` = dL/dh'.
pub fn gru_backward(p: &GruParams, s: &GruStep, dh: &[f64], g: &mut GruParams, dx: &mut [f64], dh_prev: &mut [f64]) {
    let n = p.hidden_dim();
    let mut dz_pre = vec![0.0; n];
    let mut dhc_pre = vec![0.0; n];
    for k in 0..n {
        dh_prev[k] += dh[k] * (1.0 - s.z[k]);
        let dz = dh[k] * (s.hc[k] - s.h_prev[k]);
        dz_pre[k] = dz * s.z[k] * (1.0 - s.z[k]);
        dhc_pre[k] = dh[k] * s.z[k] * (1.0 - s.hc[k] * s.hc[k]);
    }
    // candidate
    outer_add(&mut g.w_h, &dhc_pre, &s.x);
    outer_add(&mut g.u_h, &dhc_pre, &s.rh);
    axpy_into(&mut g.b_h.data, &dhc_pre);
    gemv_t_add(&p.w_h, &dhc_pre, dx);
    let mut drh = vec![0.0; n];
    gemv_t_add(&p.u_h, &dhc_pre, &mut drh);
    let mut dr_pre = vec![0.0; n];
    for k in 0..n {
        dh_prev[k] += drh[k] * s.r[k];
        dr_pre[k] = drh[k] * s.h_prev[k] * s.r[k] * (1.0 - s.r[k]);
    }
    // gates
    for (pre, w, u, gw, gu, gb) in [
        (&dz_pre, &p.w_z, &p.u_z, &mut g.w_z, &mut g.u_z, &mut g.b_z),
        (&dr_pre, &p.w_r, &p.u_r, &mut g.w_r, &mut g.u_r, &mut g.b_r),
    ] {
        outer_add(gw, pre, &s.x);
        outer_add(gu, pre, &s.h_prev);
        axpy_into(&mut gb.data, pre);
        gemv_t_add(w, pre, dx);
        gemv_t_add(u, pre, dh_prev);
    }
}

fn axpy_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn zero_params_zero_state() {
        let p = GruParams::zeros(3, 4);
        let s = gru_forward(&p, &[1.0, -2.0, 0.5], &[0.0; 4]);
        assert!(s.z.iter().all(|&z| z == 0.5));
        assert!(s.r.iter().all(|&r| r == 0.5));
        assert!(s.hc.iter().all(|&h| h == 0.0));
        assert_eq!(s.h, vec![0.0; 4]);
    }

    /// Straight-line transcription of the GRU equations with explicit loops.
    fn reference_cell(p: &GruParams, x: &[f64], h: &[f64]) -> Vec<f64> {
        let n = h.len();
        let lin = |w: &Tensor, u: &Tensor, b: &Tensor, hv: &[f64], k: usize| {
            let mut a = b.data[k];
            for j in 0..x.len() {
                a += w.data[k * x.len() + j] * x[j];
            }
            for j in 0..n {
                a += u.data[k * n + j] * hv[j];
            }
            a
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z: Vec<f64> = (0..n).map(|k| sig(lin(&p.w_z, &p.u_z, &p.b_z, h, k))).collect();
        let r: Vec<f64> = (0..n).map(|k| sig(lin(&p.w_r, &p.u_r, &p.b_r, h, k))).collect();
        let rh: Vec<f64> = (0..n).map(|k| r[k] * h[k]).collect();
        (0..n).map(|k| (1.0 - z[k]) * h[k] + z[k] * lin(&p.w_h, &p.u_h, &p.b_h, &rh, k).tanh()).collect()
    }

    #[test]
    fn matches_reference() {
        let mut r = rng::rng(3);
        let mut p = GruParams::init(5, 6, 0.5, &mut r);
        for b in [&mut p.b_z, &mut p.b_r, &mut p.b_h] {
            *b = Tensor::uniform(6, 1, 0.5, &mut r);
        }
        let x: Vec<f64> = (0..5).map(|_| r.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = gru_cell(&p, &x, &h);
        let b = reference_cell(&p, &x, &h);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn output_bounded_by_state_and_one() {
        let mut r = rng::rng(9);
        for _ in 0..50 {
            let p = GruParams::init(3, 4, 3.0, &mut r);
            let x: Vec<f64> = (0..3).map(|_| r.gen_range(-5.0..5.0)).collect();
            let h: Vec<f64> = (0..4).map(|_| r.gen_range(-0.99..0.99)).collect();
            for (k, v) in gru_cell(&p, &x, &h).iter().enumerate() {
                assert!(v.abs() < 1.0);
                assert!(v.abs() <= h[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng::rng(5);
        let p = GruParams::init(3, 4, 0.7, &mut r);
        let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let loss = |p: &GruParams, x: &[f64], h: &[f64]| gru_cell(p, x, h).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let s = gru_forward(&p, &x, &h);
        let mut g = GruParams::zeros(3, 4);
        let mut dx = vec![0.0; 3];
        let mut dh = vec![0.0; 4];
        gru_backward(&p, &s, &w, &mut g, &mut dx, &mut dh);
        let eps = 1e-6;
        for k in 0..3 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += eps;
            xm[k] -= eps;
            let num = (loss(&p, &xp, &h) - loss(&p, &xm, &h)) / (2.0 * eps);
            assert!((num - dx[k]).abs() < 1e-8);
        }
        for k in 0..4 {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[k] += eps;
            hm[k] -= eps;
            let num = (loss(&p, &x, &hp) - loss(&p, &x, &hm)) / (2.0 * eps);
            assert!((num - dh[k]).abs() < 1e-8);
        }
        for i in 0..p.u_r.data.len() {
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp.u_r.data[i] += eps;
            pm.u_r.data[i] -= eps;
            let num = (loss(&pp, &x, &h) - loss(&pm, &x, &h)) / (2.0 * eps);
            assert!((num - g.u_r.data[i]).abs() < 1e-8);
        }
    }
}
