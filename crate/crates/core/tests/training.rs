use mergen_core::augment::{self, AugmentMode, SynonymTable};
use mergen_core::corpus::{Origin, ParallelPair, Sentence};
use mergen_core::eval;
use mergen_core::nmt::model::backward;
use mergen_core::nmt::train::train_with;
use mergen_core::nmt::{Seq2Seq, TrainConfig, Vocab};
use mergen_core::synth::toy_parallel;
use mergen_core::Exec;

fn config(epochs: usize) -> TrainConfig {
    TrainConfig { embed: 16, hidden: 24, batch_size: 5, epochs, learning_rate: 0.01, ..TrainConfig::default() }
}

#[test]
fn memorised_pairs_translate_to_their_targets_and_ppl_falls() {
    let pairs = toy_parallel(15, 4);
    let mut ppl = Vec::new();
    let out = train_with(&pairs, &pairs, &config(150), |e| {
        if e.epoch % 25 == 0 {
            // the validation set is the training set, so this is training perplexity
            ppl.push(e.valid_loss.exp());
        }
    })
    .unwrap();
    assert!(ppl.windows(2).all(|w| w[1] < w[0]), "{ppl:?}");
    for p in &pairs {
        let t = out.model.translate(&p.source, 20).unwrap();
        assert_eq!(t.tokens, p.target.tokens());
        assert_eq!(t.attention.len(), t.tokens.len() + 1);
    }
    let last = out.log.epochs.last().unwrap().valid_loss.exp();
    let direct = eval::perplexity(&out.model, &pairs, Exec::Parallel).unwrap();
    assert!((direct - out.log.epochs[out.log.best_epoch - 1].valid_loss.exp()).abs() < 1e-9);
    assert!(direct <= last + 1e-12);
}

#[test]
fn checkpoint_reload_translates_identically() {
    let pairs = toy_parallel(10, 5);
    let out = train_with(&pairs, &pairs, &config(5), |_| {}).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.json");
    out.model.save(&path).unwrap();
    let back = Seq2Seq::load(&path).unwrap();
    let src: Vec<Sentence> = pairs.iter().map(|p| p.source.clone()).collect();
    assert_eq!(back.translate_all(&src, 10, Exec::Sequential).unwrap(), out.model.translate_all(&src, 10, Exec::Parallel).unwrap());
}

#[test]
fn unused_embedding_rows_get_zero_gradient() {
    let pairs = vec![ParallelPair::new("a b", "x", Origin::Synthetic), ParallelPair::new("c d e", "y z", Origin::Synthetic)];
    let m = Seq2Seq::new(Vocab::build(pairs.iter().map(|p| &p.source), 1), Vocab::build(pairs.iter().map(|p| &p.target), 1), 4, 6, 2);
    let batch = m.batches(&pairs[..1], 8).remove(0);
    let g = backward(&m.params, &batch).unwrap();
    for w in ["c", "d", "e"] {
        assert!(g.src_emb.row(m.src_vocab.id(w) as usize).iter().all(|&x| x == 0.0));
    }
    for w in ["y", "z"] {
        // z never appears as a decoder input; y neither (only x is fed after SOS)
        assert!(g.tgt_emb.row(m.tgt_vocab.id(w) as usize).iter().all(|&x| x == 0.0));
    }
    assert!(g.src_emb.row(m.src_vocab.id("a") as usize).iter().any(|&x| x != 0.0));
    assert!(g.all_finite());
}

#[test]
fn full_augmentation_vocabulary_is_a_superset() {
    let pairs = toy_parallel(30, 6);
    let mut table = SynonymTable::default();
    for i in 0..20 {
        table.insert(&format!("s{i}"), &format!("s{}", (i + 7) % 25), 6);
    }
    let aug = augment::augment(&pairs, &table, AugmentMode::Full, 0, Exec::Parallel);
    let v0 = Vocab::build(pairs.iter().map(|p| &p.source), 1);
    let v1 = Vocab::build(aug.iter().map(|p| &p.source), 1);
    assert!(v0.tokens().iter().all(|t| v1.contains(t)));
    assert!(v1.len() > v0.len());
}
