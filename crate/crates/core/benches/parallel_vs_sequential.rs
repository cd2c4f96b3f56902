//! Sequential vs rayon execution of the data-parallel kernels.
//!
//! Both modes produce identical results; only wall time differs. Build with
//! `--no-default-features` and `Exec::Parallel` degrades to the sequential
//! path, so the two columns should then match.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use mergen_core::augment::{self, AugmentMode, EnsembleSpec};
use mergen_core::embed::{build_cooc, GloveHyperparams};
use mergen_core::eval;
use mergen_core::nmt::model::{loss_and_grad, Forcing};
use mergen_core::nmt::Seq2Seq;
use mergen_core::nmt::Vocab;
use mergen_core::synth::{ring_language, RingSpec};
use mergen_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn cooc(c: &mut Criterion) {
    let corpus = ring_language(&RingSpec { monolingual: 20_000, ..RingSpec::default() }, 1).monolingual;
    let hyper = GloveHyperparams { window: 10, ..GloveHyperparams::default() };
    let mut g = c.benchmark_group("build_cooc");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| b.iter(|| build_cooc(black_box(&corpus), &hyper, e).unwrap()));
    }
    g.finish();
}

fn ensemble_and_table(c: &mut Criterion) {
    let ring = ring_language(&RingSpec::default(), 2);
    let spec = EnsembleSpec::from_base(&GloveHyperparams { dim: 20, iterations: 10, ..GloveHyperparams::default() });
    let models = augment::train_ensemble(&ring.monolingual, &spec, Exec::Sequential).unwrap();
    let vocab = augment::source_vocab(&ring.parallel);
    let table = augment::build_synonym_table(&vocab, &models, Exec::Sequential);
    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("train_ensemble", name), &exec, |b, &e| b.iter(|| augment::train_ensemble(&ring.monolingual, &spec, e).unwrap()));
        g.bench_with_input(BenchmarkId::new("synonym_table", name), &exec, |b, &e| b.iter(|| augment::build_synonym_table(&vocab, &models, e)));
        g.bench_with_input(BenchmarkId::new("augment_full", name), &exec, |b, &e| b.iter(|| augment::augment(&ring.parallel, &table, AugmentMode::Full, 0, e)));
    }
    g.finish();
}

fn seq2seq_step(c: &mut Criterion) {
    let ring = ring_language(&RingSpec::default(), 3);
    let pairs = &ring.parallel[..64];
    let model = Seq2Seq::new(
        Vocab::build(pairs.iter().map(|p| &p.source), 1),
        Vocab::build(pairs.iter().map(|p| &p.target), 1),
        32,
        64,
        0,
    );
    let batch = model.batches(pairs, 64).remove(0);
    let mut g = c.benchmark_group("loss_and_grad_b64");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| b.iter(|| loss_and_grad(&model.params, &batch, Forcing::FULL, e).unwrap()));
    }
    g.finish();
}

fn bleu(c: &mut Criterion) {
    let ring = ring_language(&RingSpec { pairs: 5000, monolingual: 0, ..RingSpec::default() }, 4);
    let refs: Vec<_> = ring.parallel.iter().map(|p| p.target.clone()).collect();
    let hyps: Vec<_> = refs.iter().rev().cloned().collect();
    let mut g = c.benchmark_group("corpus_bleu_5k");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| b.iter(|| eval::bleu_with(&hyps, &refs, e).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, cooc, ensemble_and_table, seq2seq_step, bleu);
criterion_main!(benches);
