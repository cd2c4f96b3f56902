#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng;

use super::cooc::{CoocMatrix, EmbedVocab};
use super::{EmbedError, GloveHyperparams, WordVectors};

/// Weighting function `f(x) = (x / x_max)^alpha` capped at 1.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Trained embeddings. Parameters live in one flat buffer laid out as
/// `[W | W~ | b | b~]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    pub vocab: EmbedVocab,
    pub hyper: GloveHyperparams,
    params: Vec<f64>,
}

/// Gradient of [`glove_loss`] with the same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveGrad {
    pub w: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b: Vec<f64>,
    pub b_ctx: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GloveTrainLog {
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Single-threaded; bit-identical for a fixed seed.
    #[default]
    Deterministic,
    /// Lock-free updates from all rayon workers. No determinism guarantee.
    Hogwild,
}

struct Layout {
    v: usize,
    dim: usize,
}

impl Layout {
    fn w(&self, i: usize) -> usize {
        i * self.dim
    }
    fn w_ctx(&self, j: usize) -> usize {
        (self.v + j) * self.dim
    }
    fn b(&self, i: usize) -> usize {
        2 * self.v * self.dim + i
    }
    fn b_ctx(&self, j: usize) -> usize {
        2 * self.v * self.dim + self.v + j
    }
    fn len(&self) -> usize {
        2 * self.v * (self.dim + 1)
    }
}

impl GloveModel {
    /// Uniform init in (-0.5/dim, 0.5/dim) for every parameter.
    pub fn init(vocab: EmbedVocab, hyper: GloveHyperparams) -> Self {
        let layout = Layout { v: vocab.len(), dim: hyper.dim };
        let mut r = rng::rng(hyper.seed);
        let scale = 1.0 / hyper.dim as f64;
        let params = (0..layout.len()).map(|_| (r.gen::<f64>() - 0.5) * scale).collect();
        GloveModel { vocab, hyper, params }
    }

    fn layout(&self) -> Layout {
        Layout { v: self.vocab.len(), dim: self.hyper.dim }
    }

    pub fn dim(&self) -> usize {
        self.hyper.dim
    }

    pub fn main_vector(&self, id: u32) -> &[f64] {
        let l = self.layout();
        &self.params[l.w(id as usize)..l.w(id as usize) + l.dim]
    }

    pub fn context_vector(&self, id: u32) -> &[f64] {
        let l = self.layout();
        &self.params[l.w_ctx(id as usize)..l.w_ctx(id as usize) + l.dim]
    }

    pub fn bias(&self, id: u32) -> f64 {
        self.params[self.layout().b(id as usize)]
    }

    pub fn context_bias(&self, id: u32) -> f64 {
        self.params[self.layout().b_ctx(id as usize)]
    }

    /// Flat parameter buffer `[W | W~ | b | b~]`.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `W[word] + W~[word]`.
    pub fn word_vector(&self, word: &str) -> Result<Vec<f64>, EmbedError> {
        let id = self.vocab.id(word).ok_or_else(|| EmbedError::OutOfVocabulary(word.to_string()))?;
        Ok(self.main_vector(id).iter().zip(self.context_vector(id)).map(|(a, b)| a + b).collect())
    }

    pub fn word_vectors(&self) -> WordVectors {
        let data = (0..self.vocab.len() as u32)
            .flat_map(|id| self.main_vector(id).iter().zip(self.context_vector(id)).map(|(a, b)| a + b).collect::<Vec<_>>())
            .collect();
        WordVectors::new(self.vocab.words().to_vec(), self.dim(), data).expect("consistent shapes")
    }

    fn residual(&self, i: u32, j: u32, x: f64) -> f64 {
        dot(self.main_vector(i), self.context_vector(j)) + self.bias(i) + self.context_bias(j) - x.ln()
    }

    /// Analytic gradient of [`glove_loss`].
    pub fn gradient(&self, cooc: &CoocMatrix) -> GloveGrad {
        let l = self.layout();
        let mut g = GloveGrad {
            w: vec![0.0; l.v * l.dim],
            w_ctx: vec![0.0; l.v * l.dim],
            b: vec![0.0; l.v],
            b_ctx: vec![0.0; l.v],
        };
        for (&(i, j), &x) in cooc.entries() {
            let coef = 2.0 * glove_weight(x, self.hyper.x_max, self.hyper.alpha) * self.residual(i, j, x);
            let (i, j) = (i as usize, j as usize);
            for k in 0..l.dim {
                g.w[i * l.dim + k] += coef * self.params[l.w_ctx(j) + k];
                g.w_ctx[j * l.dim + k] += coef * self.params[l.w(i) + k];
            }
            g.b[i] += coef;
            g.b_ctx[j] += coef;
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum f(X_ij) (w_i . w~_j + b_i + b~_j - ln X_ij)^2` over nonzero cells.
pub fn glove_loss(model: &GloveModel, cooc: &CoocMatrix) -> f64 {
    cooc.entries()
        .iter()
        .map(|(&(i, j), &x)| {
            let r = model.residual(i, j, x);
            glove_weight(x, model.hyper.x_max, model.hyper.alpha) * r * r
        })
        .sum()
}

/// Parameter access shared by the sequential and lock-free trainers.
trait Store {
    fn get(&self, idx: usize) -> f64;
    fn set(&mut self, idx: usize, v: f64);
}

impl Store for &mut [f64] {
    fn get(&self, idx: usize) -> f64 {
        self[idx]
    }
    fn set(&mut self, idx: usize, v: f64) {
        self[idx] = v;
    }
}

#[cfg(feature = "parallel")]
#[derive(Clone, Copy)]
struct Atomic<'a>(&'a [AtomicU64]);

#[cfg(feature = "parallel")]
impl Store for Atomic<'_> {
    fn get(&self, idx: usize) -> f64 {
        f64::from_bits(self.0[idx].load(Ordering::Relaxed))
    }
    fn set(&mut self, idx: usize, v: f64) {
        self.0[idx].store(v.to_bits(), Ordering::Relaxed);
    }
}

/// One AdaGrad step on the cell's term of the loss. `grad` is scratch space
/// of length `2 * dim`.
#[allow(clippy::too_many_arguments)]
fn update_cell<P: Store, A: Store>(
    params: &mut P,
    accum: &mut A,
    l: &Layout,
    hyper: &GloveHyperparams,
    (i, j, x): (u32, u32, f64),
    grad: &mut [f64],
) {
    let (i, j) = (i as usize, j as usize);
    let (wi, wj) = (l.w(i), l.w_ctx(j));
    let mut pred = params.get(l.b(i)) + params.get(l.b_ctx(j));
    for k in 0..l.dim {
        pred += params.get(wi + k) * params.get(wj + k);
    }
    let coef = 2.0 * glove_weight(x, hyper.x_max, hyper.alpha) * (pred - x.ln());
    for k in 0..l.dim {
        grad[k] = coef * params.get(wj + k);
        grad[l.dim + k] = coef * params.get(wi + k);
    }
    let mut step = |params: &mut P, idx: usize, g: f64| {
        let a = accum.get(idx) + g * g;
        accum.set(idx, a);
        params.set(idx, params.get(idx) - hyper.learning_rate * g / a.sqrt());
    };
    for k in 0..l.dim {
        step(params, wi + k, grad[k]);
        step(params, wj + k, grad[l.dim + k]);
    }
    step(params, l.b(i), coef);
    step(params, l.b_ctx(j), coef);
}

/// Epoch-at-a-time AdaGrad state. [`train_glove`] drives it to completion;
/// it is exposed so callers can inspect the accumulators between epochs.
pub struct GloveTrainer<'a> {
    pub model: GloveModel,
    cooc: &'a CoocMatrix,
    cells: Vec<(u32, u32, f64)>,
    accum: Vec<f64>,
    mode: TrainMode,
    epoch: usize,
}

impl<'a> GloveTrainer<'a> {
    pub fn new(cooc: &'a CoocMatrix, hyper: &GloveHyperparams, mode: TrainMode) -> Result<Self, EmbedError> {
        hyper.validate()?;
        if cooc.is_empty() {
            return Err(EmbedError::EmptyCooc);
        }
        let model = GloveModel::init(cooc.vocab.clone(), hyper.clone());
        let accum = vec![1.0; model.layout().len()];
        Ok(GloveTrainer { model, cooc, cells: cooc.cells(), accum, mode, epoch: 0 })
    }

    /// AdaGrad squared-gradient accumulators, same layout as the parameters.
    pub fn accumulators(&self) -> &[f64] {
        &self.accum
    }

    /// Runs one pass over the shuffled cells and returns the full loss.
    pub fn epoch(&mut self) -> Result<f64, EmbedError> {
        let hyper = self.model.hyper.clone();
        let l = self.model.layout();
        self.cells.shuffle(&mut rng::rng_stream(hyper.seed, self.epoch as u64 + 1));
        match self.mode {
            TrainMode::Deterministic => sequential_epoch(&mut self.model, &mut self.accum, &l, &hyper, &self.cells),
            TrainMode::Hogwild => hogwild_epoch(&mut self.model, &mut self.accum, &l, &hyper, &self.cells),
        }
        let loss = glove_loss(&self.model, self.cooc);
        if !loss.is_finite() {
            return Err(EmbedError::NonFiniteLoss { epoch: self.epoch });
        }
        self.epoch += 1;
        Ok(loss)
    }
}

/// Fits GloVe with per-cell AdaGrad (accumulators start at 1) over the
/// nonzero cells, shuffled every epoch.
pub fn train_glove(cooc: &CoocMatrix, hyper: &GloveHyperparams, mode: TrainMode) -> Result<(GloveModel, GloveTrainLog), EmbedError> {
    let mut trainer = GloveTrainer::new(cooc, hyper, mode)?;
    let initial_loss = glove_loss(&trainer.model, cooc);
    let epoch_losses = (0..hyper.iterations).map(|_| trainer.epoch()).collect::<Result<Vec<_>, _>>()?;
    Ok((trainer.model, GloveTrainLog { initial_loss, epoch_losses }))
}

fn sequential_epoch(model: &mut GloveModel, accum: &mut [f64], l: &Layout, hyper: &GloveHyperparams, cells: &[(u32, u32, f64)]) {
    let mut grad = vec![0.0; 2 * l.dim];
    let mut params: &mut [f64] = &mut model.params;
    let mut acc: &mut [f64] = accum;
    for &cell in cells {
        update_cell(&mut params, &mut acc, l, hyper, cell, &mut grad);
    }
}

#[cfg(feature = "parallel")]
fn hogwild_epoch(model: &mut GloveModel, accum: &mut [f64], l: &Layout, hyper: &GloveHyperparams, cells: &[(u32, u32, f64)]) {
    use rayon::prelude::*;
    let to_atomic = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect::<Vec<_>>();
    let params = to_atomic(&model.params);
    let acc = to_atomic(accum);
    let chunk = cells.len().div_ceil(rayon::current_num_threads()).max(1);
    cells.par_chunks(chunk).for_each(|part| {
        let (mut p, mut a) = (Atomic(&params), Atomic(&acc));
        let mut grad = vec![0.0; 2 * l.dim];
        for &cell in part {
            update_cell(&mut p, &mut a, l, hyper, cell, &mut grad);
        }
    });
    for (dst, src) in model.params.iter_mut().zip(&params) {
        *dst = f64::from_bits(src.load(Ordering::Relaxed));
    }
    for (dst, src) in accum.iter_mut().zip(&acc) {
        *dst = f64::from_bits(src.load(Ordering::Relaxed));
    }
}

#[cfg(not(feature = "parallel"))]
fn hogwild_epoch(model: &mut GloveModel, accum: &mut [f64], l: &Layout, hyper: &GloveHyperparams, cells: &[(u32, u32, f64)]) {
    sequential_epoch(model, accum, l, hyper, cells)
}
