use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mergen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mergen")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mergen(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn romanize_round_trips_through_hangul() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c, e) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"), tmp.path().join("e"));
    fs::write(&a, "한국어 문장\n사람\n").unwrap();
    ok(&["romanize", "--scheme", "yale", "--in", s(&a), "--out", s(&b)]);
    assert_eq!(fs::read_to_string(&b).unwrap(), "hankwuke mwuncang\nsalam\n");
    ok(&["romanize", "--scheme", "yale", "--direction", "backward", "--in", s(&b), "--out", s(&c)]);
    // syllable boundaries are not marked, so only the romanization is recovered exactly
    ok(&["romanize", "--scheme", "yale", "--in", s(&c), "--out", s(&e)]);
    assert_eq!(fs::read_to_string(&e).unwrap(), fs::read_to_string(&b).unwrap());
    assert!(fs::read_to_string(&c).unwrap().starts_with("한국어 "));
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    assert_eq!(mergen(&["romanize", "--scheme", "nope"]).status.code(), Some(1));
    assert_eq!(mergen(&["bogus"]).status.code(), Some(1));
    assert_eq!(mergen(&["--help"]).status.code(), Some(0));
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.tsv");
    let out = mergen(&["corpus", "filter", "--min-len", "2", "--in", s(&missing), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let bad = tmp.path().join("bad.tsv");
    fs::write(&bad, "no tab here\n").unwrap();
    assert_eq!(mergen(&["corpus", "split", "--seed", "0", "--out-prefix", s(&tmp.path().join("p")), "--in", s(&bad)]).status.code(), Some(2));
    assert_eq!(mergen(&["report", s(tmp.path())]).status.code(), Some(2));
}

#[test]
fn split_then_augment_then_score() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "toy", "--out", s(d), "--seed", "3", "--pairs", "40"]);
    let prefix = d.join("p");
    ok(&["corpus", "split", "--seed", "1", "--out-prefix", s(&prefix), "--in", s(&d.join("parallel.tsv"))]);
    let lines = |p: &str| fs::read_to_string(d.join(p)).unwrap().lines().count();
    assert_eq!((lines("p.train.tsv"), lines("p.valid.tsv"), lines("p.test.tsv")), (32, 4, 4));

    let table = d.join("syn.tsv");
    fs::write(&table, "s1\ts2\t9\n").unwrap();
    let aug = d.join("aug.tsv");
    ok(&["augment", "apply", "--mode", "full", "--table", s(&table), "--in", s(&d.join("p.train.tsv")), "--out", s(&aug)]);
    let train = fs::read_to_string(d.join("p.train.tsv")).unwrap();
    let augmented = fs::read_to_string(&aug).unwrap();
    assert!(augmented.starts_with(&train));
    let with_s1 = train.lines().filter(|l| l.split('\t').next().unwrap().split(' ').any(|w| w == "s1")).count();
    assert_eq!(augmented.lines().count(), 32 + with_s1);

    // a reference scored against itself
    let refs: String = train.lines().map(|l| format!("{}\n", l.split('\t').nth(1).unwrap())).collect();
    let r = d.join("ref.txt");
    fs::write(&r, refs).unwrap();
    let j = d.join("bleu.json");
    ok(&["eval", "bleu", "--hyp", s(&r), "--ref", s(&r), "--json", s(&j)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&j).unwrap()).unwrap();
    assert_eq!(v["bleu"].as_f64(), Some(100.0));
}

#[test]
fn nmt_train_translate_and_perplexity() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "toy", "--out", s(d), "--seed", "2", "--pairs", "8"]);
    let data = d.join("parallel.tsv");
    let job = serde_json::json!({
        "train": data, "valid": data, "out_dir": d.join("model"),
        "nmt": {"embed": 16, "hidden": 24, "batch_size": 4, "epochs": 120, "learning_rate": 0.01},
    });
    let job_path = d.join("job.json");
    fs::write(&job_path, job.to_string()).unwrap();
    ok(&["nmt", "train", "--config", s(&job_path)]);
    let model = d.join("model/model.json");
    assert!(d.join("model/train_log.csv").is_file());

    let text = fs::read_to_string(&data).unwrap();
    let src = d.join("src.txt");
    let refs = d.join("ref.txt");
    fs::write(&src, text.lines().map(|l| format!("{}\n", l.split('\t').next().unwrap())).collect::<String>()).unwrap();
    fs::write(&refs, text.lines().map(|l| format!("{}\n", l.split('\t').nth(1).unwrap())).collect::<String>()).unwrap();
    let hyp = d.join("hyp.txt");
    ok(&["nmt", "translate", "--model", s(&model), "--in", s(&src), "--out", s(&hyp)]);
    assert_eq!(fs::read_to_string(&hyp).unwrap(), fs::read_to_string(&refs).unwrap());

    let j = d.join("ppl.json");
    ok(&["eval", "ppl", "--model", s(&model), "--in", s(&data), "--json", s(&j)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&j).unwrap()).unwrap();
    let ppl = v["ppl"].as_f64().unwrap();
    assert!((1.0..1.5).contains(&ppl), "{ppl}");
}

#[test]
fn run_is_reproducible_and_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "ring", "--out", s(d), "--seed", "4", "--pairs", "60", "--monolingual", "300"]);
    let config = serde_json::json!({
        "parallel": [{"path": "parallel.tsv"}],
        "monolingual": ["monolingual.txt"],
        "augmentation": "half",
        "glove": {"dim": 10, "iterations": 5},
        "nmt": {"embed": 8, "hidden": 12, "batch_size": 16, "epochs": 2},
        "output_dir": "out",
    });
    fs::write(d.join("config.json"), config.to_string()).unwrap();
    let cfg = d.join("config.json");
    ok(&["run", "--config", s(&cfg)]);
    let first = fs::read(d.join("out/report.json")).unwrap();
    fs::remove_dir_all(d.join("out/half/nmt")).unwrap();
    ok(&["--sequential", "run", "--config", s(&cfg)]);
    assert_eq!(fs::read(d.join("out/report.json")).unwrap(), first);

    let text = ok(&["report", s(&d.join("out"))]);
    assert!(text.contains("Half augmentation"), "{text}");
    assert!(!text.contains("Full augmentation"));
    let echoed = ok(&["run", "--config", s(&cfg), "--augmentation", "none", "--echo-config"]);
    assert!(echoed.contains("\"none\""), "{echoed}");
}
