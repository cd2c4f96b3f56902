use std::path::Path;

use mergen_core::augment::AugmentMode;
use mergen_core::corpus::{self, Origin};
use mergen_core::embed::GloveHyperparams;
use mergen_core::nmt::TrainConfig;
use mergen_core::pipeline::{report, rows_path, run_pipeline, FailureKind, ParallelInput, PipelineConfig, PipelineError};
use mergen_core::synth::{ring_language, RingSpec};

fn small_config(dir: &Path, inputs: Vec<ParallelInput>) -> PipelineConfig {
    PipelineConfig {
        parallel: inputs,
        monolingual: vec![dir.join("mono.txt")],
        glove: GloveHyperparams { dim: 10, iterations: 5, ..GloveHyperparams::default() },
        nmt: TrainConfig { embed: 8, hidden: 12, batch_size: 16, epochs: 2, learning_rate: 0.01, ..TrainConfig::default() },
        output_dir: dir.join("out"),
        ..PipelineConfig::default()
    }
}

fn write_corpus(dir: &Path, seed: u64) -> Vec<ParallelInput> {
    let r = ring_language(&RingSpec { concepts: 15, pairs: 60, monolingual: 300, ..RingSpec::default() }, seed);
    corpus::write_parallel(&dir.join("a.tsv"), &r.parallel[..40], false).unwrap();
    corpus::write_parallel(&dir.join("b.tsv"), &r.parallel[40..], false).unwrap();
    corpus::write_monolingual(&dir.join("mono.txt"), &r.monolingual).unwrap();
    vec![
        ParallelInput { path: dir.join("a.tsv"), origin: Origin::Laodang },
        ParallelInput { path: dir.join("b.tsv"), origin: Origin::Dictionary },
    ]
}

#[test]
fn three_modes_give_three_blocks_matching_the_eval_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = write_corpus(tmp.path(), 1);
    for mode in [AugmentMode::Full, AugmentMode::None, AugmentMode::Half] {
        let cfg = PipelineConfig { augmentation: mode, ..small_config(tmp.path(), inputs.clone()) };
        let out = run_pipeline(&cfg, &mut |_| {}).unwrap();
        // two origins in the test split -> one row each plus the combined row
        let tests: Vec<&str> = out.rows.iter().map(|r| r.test.as_str()).collect();
        assert_eq!(*tests.last().unwrap(), "combined");
        assert!(out.rows.iter().all(|r| r.train == "combined"));
    }
    let r = report(&tmp.path().join("out")).unwrap();
    let modes: Vec<_> = r.blocks.iter().map(|b| b.mode).collect();
    assert_eq!(modes, AugmentMode::ALL);
    for b in &r.blocks {
        let eval: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out").join(b.mode.as_str()).join("eval/eval.json")).unwrap()).unwrap();
        let combined = b.rows.last().unwrap();
        assert_eq!(eval["bleu"].as_f64().unwrap(), combined.bleu);
        assert_eq!(eval["ppl"].as_f64().unwrap(), combined.ppl);
        assert_eq!(eval["n_sentences"].as_u64().unwrap() as usize, combined.n_test);
    }
    // augmentation only grows the training set
    let n: Vec<usize> = r.blocks.iter().map(|b| b.rows[0].n_train).collect();
    assert!(n[0] <= n[1] && n[1] <= n[2], "{n:?}");
}

#[test]
fn second_run_reuses_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = write_corpus(tmp.path(), 2);
    let cfg = PipelineConfig { augmentation: AugmentMode::Half, ..small_config(tmp.path(), inputs) };
    let first = run_pipeline(&cfg, &mut |_| {}).unwrap();
    assert_eq!(first.executed, ["romanize", "shuffle", "split", "glove", "table", "augment", "nmt", "eval"]);
    let second = run_pipeline(&cfg, &mut |_| {}).unwrap();
    assert!(second.executed.is_empty());
    assert_eq!(first.rows, second.rows);
    // a changed NMT setting reruns training and evaluation only
    let changed = PipelineConfig { nmt: TrainConfig { epochs: 1, ..cfg.nmt.clone() }, ..cfg };
    assert_eq!(run_pipeline(&changed, &mut |_| {}).unwrap().executed, ["nmt", "eval"]);
}

#[test]
fn faithful_ordering_splits_after_augmenting() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = write_corpus(tmp.path(), 3);
    let cfg = PipelineConfig { augmentation: AugmentMode::Full, paper_faithful: true, ..small_config(tmp.path(), inputs) };
    let out = run_pipeline(&cfg, &mut |_| {}).unwrap();
    let root = tmp.path().join("out");
    assert!(!root.join("shared/split").exists());
    assert!(root.join("shared/glove-faithful").is_dir());
    let augmented = corpus::load_parallel(&root.join("full/augment/augmented.tsv"), Origin::Synthetic).unwrap();
    let train = corpus::load_parallel(&root.join("full/split/train.tsv"), Origin::Synthetic).unwrap();
    let test = corpus::load_parallel(&root.join("full/split/test.tsv"), Origin::Synthetic).unwrap();
    // the augmented corpus is what gets split
    assert_eq!(train.len() + test.len() + augmented.len() / 10, augmented.len());
    assert_eq!(out.rows.last().unwrap().n_test, test.len());
    assert!(rows_path(&root, AugmentMode::Full).is_file());
}

#[test]
fn missing_inputs_are_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), vec![ParallelInput { path: tmp.path().join("nope.tsv"), origin: Origin::Synthetic }]);
    let e = run_pipeline(&cfg, &mut |_| {}).unwrap_err();
    assert!(matches!(e, PipelineError::MissingInput(_)));
    assert_eq!(e.kind(), FailureKind::Data);
    assert!(matches!(report(tmp.path()), Err(PipelineError::MissingRun(_))));
}

#[test]
fn malformed_corpus_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.tsv"), "only one column\n").unwrap();
    std::fs::write(tmp.path().join("mono.txt"), "a b c\n").unwrap();
    let cfg = small_config(tmp.path(), vec![ParallelInput { path: tmp.path().join("bad.tsv"), origin: Origin::Synthetic }]);
    let e = run_pipeline(&cfg, &mut |_| {}).unwrap_err();
    assert!(e.to_string().starts_with("stage 'romanize'"), "{e}");
    assert_eq!(e.kind(), FailureKind::Data);
}
