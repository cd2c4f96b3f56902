//! End-to-end experiment runner with cached, manifest-checked stages.
//!
//! Mode-independent stages live under `<output_dir>/shared/`, the rest under
//! `<output_dir>/<mode>/`. A stage is skipped when its manifest still
//! matches its inputs, settings and outputs.

mod config;
mod manifest;
mod report;

pub use config::{ParallelInput, PipelineConfig};
pub use manifest::{sha256_file, Manifest, Stage, MANIFEST};
pub use report::{report, rows_path, Report, ReportBlock, ReportRow, ROWS_FILE};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::augment::{self, AugmentError, AugmentMode, EnsembleSpec};
use crate::corpus::{self, CorpusError, Origin, ParallelPair, Sentence, SplitSpec};
use crate::embed::{EmbedError, WordVectors};
use crate::eval::{self, EvalError};
use crate::nmt::{self, NmtError, Seq2Seq};
use crate::translit::{romanize_auto, TranslitError};

#[derive(Error, Debug)]
pub enum StageError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Translit(#[from] TranslitError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Nmt(#[from] NmtError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("input file not found: {0}")]
    MissingInput(PathBuf),
    #[error("no completed run under {0}")]
    MissingRun(PathBuf),
    #[error("stage '{stage}': {source}")]
    Stage { stage: String, source: Box<StageError> },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Data,
    Numerical,
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.display().to_string(), source }
    }

    pub fn kind(&self) -> FailureKind {
        match self {
            PipelineError::Config(_) => FailureKind::Usage,
            PipelineError::Stage { source, .. } => source.kind(),
            _ => FailureKind::Data,
        }
    }
}

impl StageError {
    pub fn kind(&self) -> FailureKind {
        match self {
            StageError::Embed(EmbedError::NonFiniteLoss { .. }) | StageError::Nmt(NmtError::NonFiniteLoss { .. }) => FailureKind::Numerical,
            StageError::Nmt(NmtError::InvalidConfig(_)) | StageError::Embed(EmbedError::InvalidHyperparams(_)) => FailureKind::Usage,
            _ => FailureKind::Data,
        }
    }
}

fn in_stage<T, E: Into<StageError>>(stage: &str, r: Result<T, E>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Stage { stage: stage.into(), source: Box::new(e.into()) })
}

/// Bumped when a stage's output format or algorithm changes.
const STAGE_VERSION: u32 = 1;

const SPLIT_FILES: [&str; 3] = ["train.tsv", "valid.tsv", "test.tsv"];

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode_dir: PathBuf,
    pub rows: Vec<ReportRow>,
    /// Names of stages that actually ran (the others were reused).
    pub executed: Vec<String>,
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    executed: Vec<String>,
    log: &'a mut dyn FnMut(&str),
}

impl Runner<'_> {
    fn stage(&mut self, stage: Stage, body: impl FnOnce(&Stage) -> Result<(), PipelineError>) -> Result<Stage, PipelineError> {
        let ran = stage.run(body)?;
        (self.log)(&format!("{:<8} {}", if ran { "ran" } else { "cached" }, stage.name));
        if ran {
            self.executed.push(stage.name.clone());
        }
        Ok(stage)
    }

    fn shared(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join("shared").join(name)
    }

    fn per_mode(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(self.cfg.augmentation.as_str()).join(name)
    }
}

fn write_pairs(stage: &Stage, name: &str, pairs: &[ParallelPair]) -> Result<(), PipelineError> {
    in_stage(&stage.name, corpus::write_parallel(&stage.output(name), pairs, true))
}

fn read_pairs(stage: &str, path: &Path) -> Result<Vec<ParallelPair>, PipelineError> {
    in_stage(stage, corpus::load_parallel(path, Origin::default()))
}

fn romanize(s: &Sentence) -> Result<Sentence, TranslitError> {
    romanize_auto(&s.to_string()).map(|t| Sentence::parse(&t))
}

/// Runs every stage for the config's augmentation mode. `log` receives one
/// line per stage.
pub fn run_pipeline(config: &PipelineConfig, log: &mut dyn FnMut(&str)) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let cfg = config.resolved();
    let exec = cfg.exec;
    let mode = cfg.augmentation;
    let mut r = Runner { cfg: &cfg, executed: Vec::new(), log };
    std::fs::create_dir_all(r.per_mode("")).map_err(|e| PipelineError::io(&cfg.output_dir, e))?;
    let effective = r.per_mode("config.json");
    std::fs::write(&effective, cfg.echo()).map_err(|e| PipelineError::io(&effective, e))?;

    // romanize + merge
    let inputs: Vec<PathBuf> = cfg.parallel.iter().map(|p| p.path.clone()).chain(cfg.monolingual.iter().cloned()).collect();
    let romanized = r.stage(
        Stage {
            name: "romanize".into(),
            version: STAGE_VERSION,
            dir: r.shared("romanize"),
            params: json!({"parallel": cfg.parallel, "source": cfg.romanize_source, "target": cfg.romanize_target}),
            inputs,
            outputs: vec!["corpus.tsv".into(), "monolingual.txt".into()],
        },
        |st| {
            let mut pairs = Vec::new();
            for input in &cfg.parallel {
                for mut p in in_stage(&st.name, corpus::load_parallel(&input.path, input.origin))? {
                    if cfg.romanize_source {
                        p.source = in_stage(&st.name, romanize(&p.source))?;
                    }
                    if cfg.romanize_target {
                        p.target = in_stage(&st.name, romanize(&p.target))?;
                    }
                    pairs.push(p);
                }
            }
            write_pairs(st, "corpus.tsv", &pairs)?;
            let mut mono = Vec::new();
            for path in &cfg.monolingual {
                for s in in_stage(&st.name, corpus::load_monolingual(path))? {
                    mono.push(if cfg.romanize_source { in_stage(&st.name, romanize(&s))? } else { s });
                }
            }
            in_stage(&st.name, corpus::write_monolingual(&st.output("monolingual.txt"), &mono))
        },
    )?;
    let mono_path = romanized.output("monolingual.txt");

    let split_seed = cfg.split_seed.expect("resolved");
    let shuffled = r.stage(
        Stage {
            name: "shuffle".into(),
            version: STAGE_VERSION,
            dir: r.shared("shuffle"),
            params: json!({"seed": split_seed}),
            inputs: vec![romanized.output("corpus.tsv")],
            outputs: vec!["shuffled.tsv".into()],
        },
        |st| {
            let pairs = read_pairs(&st.name, &romanized.output("corpus.tsv"))?;
            write_pairs(st, "shuffled.tsv", &corpus::shuffle(&pairs, split_seed))
        },
    )?;
    let shuffled_path = shuffled.output("shuffled.tsv");

    let split_stage = |r: &mut Runner, dir: PathBuf, input: PathBuf| {
        r.stage(
            Stage {
                name: "split".into(),
                version: STAGE_VERSION,
                dir,
                params: json!({"ratios": [8, 1, 1]}),
                inputs: vec![input.clone()],
                outputs: SPLIT_FILES.iter().map(|s| s.to_string()).collect(),
            },
            |st| {
                let pairs = read_pairs(&st.name, &input)?;
                let s = in_stage(&st.name, corpus::split(&pairs, SplitSpec { seed: split_seed }))?;
                write_pairs(st, "train.tsv", &s.train)?;
                write_pairs(st, "valid.tsv", &s.valid)?;
                write_pairs(st, "test.tsv", &s.test)
            },
        )
    };

    // leakage-free: split before anything sees the data
    let early_split = if cfg.paper_faithful {
        None
    } else {
        let dir = r.shared("split");
        Some(split_stage(&mut r, dir, shuffled_path.clone())?)
    };
    // pairs that feed embeddings, the synonym table and augmentation
    let aug_input = match &early_split {
        Some(s) => s.output("train.tsv"),
        None => shuffled_path.clone(),
    };
    let tag = if cfg.paper_faithful { "faithful" } else { "leakage-free" };

    let augmented_path = if mode == AugmentMode::None {
        aug_input.clone()
    } else {
        let spec = EnsembleSpec::from_base(&cfg.glove);
        let names: Vec<String> = spec.variants().iter().map(|h| format!("{}.vec", EnsembleSpec::variant_name(h))).collect();
        let glove = r.stage(
            Stage {
                name: "glove".into(),
                version: STAGE_VERSION,
                dir: r.shared(&format!("glove-{tag}")),
                params: json!({"ensemble": spec}),
                inputs: vec![mono_path.clone(), aug_input.clone()],
                outputs: names.clone(),
            },
            |st| {
                let mut text = in_stage(&st.name, corpus::load_monolingual(&mono_path))?;
                text.extend(read_pairs(&st.name, &aug_input)?.into_iter().map(|p| p.source));
                let models = in_stage(&st.name, augment::train_ensemble(&text, &spec, exec))?;
                for (m, n) in models.iter().zip(&names) {
                    in_stage(&st.name, m.save(&st.output(n)))?;
                }
                Ok(())
            },
        )?;
        let table = r.stage(
            Stage {
                name: "table".into(),
                version: STAGE_VERSION,
                dir: r.shared(&format!("table-{tag}")),
                params: json!({}),
                inputs: names.iter().map(|n| glove.output(n)).chain([aug_input.clone()]).collect(),
                outputs: vec!["synonyms.tsv".into()],
            },
            |st| {
                let models = names.iter().map(|n| in_stage(&st.name, WordVectors::load(&glove.output(n)))).collect::<Result<Vec<_>, _>>()?;
                let pairs = read_pairs(&st.name, &aug_input)?;
                let vocab: BTreeSet<String> = augment::source_vocab(&pairs);
                let t = augment::build_synonym_table(&vocab, &models, exec);
                in_stage(&st.name, t.save(&st.output("synonyms.tsv")))
            },
        )?;
        let aug_seed = crate::rng::derive_seed(cfg.seed, "augment");
        let aug = r.stage(
            Stage {
                name: "augment".into(),
                version: STAGE_VERSION,
                dir: r.per_mode("augment"),
                params: json!({"mode": mode, "seed": aug_seed}),
                inputs: vec![aug_input.clone(), table.output("synonyms.tsv")],
                outputs: vec!["augmented.tsv".into(), "summary.json".into()],
            },
            |st| {
                let pairs = read_pairs(&st.name, &aug_input)?;
                let t = in_stage(&st.name, augment::SynonymTable::load(&table.output("synonyms.tsv")))?;
                let out = augment::augment(&pairs, &t, mode, aug_seed, exec);
                write_pairs(st, "augmented.tsv", &out)?;
                let summary = augment::augmentation_report(&pairs, &out);
                let p = st.output("summary.json");
                std::fs::write(&p, serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n").map_err(|e| PipelineError::io(&p, e))
            },
        )?;
        aug.output("augmented.tsv")
    };

    let (train_path, valid_path, test_path) = match &early_split {
        Some(s) => (augmented_path, s.output("valid.tsv"), s.output("test.tsv")),
        None => {
            let dir = r.per_mode("split");
            let s = split_stage(&mut r, dir, augmented_path)?;
            (s.output("train.tsv"), s.output("valid.tsv"), s.output("test.tsv"))
        }
    };

    let nmt_stage = r.stage(
        Stage {
            name: "nmt".into(),
            version: STAGE_VERSION,
            dir: r.per_mode("nmt"),
            params: json!({"train": cfg.nmt}),
            inputs: vec![train_path.clone(), valid_path.clone()],
            outputs: vec!["model.json".into()],
        },
        |st| {
            let train = read_pairs(&st.name, &train_path)?;
            let valid = read_pairs(&st.name, &valid_path)?;
            let out = in_stage(&st.name, nmt::train::train(&train, &valid, &cfg.nmt))?;
            in_stage(&st.name, out.model.save(&st.output("model.json")))?;
            let p = st.output("train_log.csv");
            std::fs::write(&p, out.log.to_csv()).map_err(|e| PipelineError::io(&p, e))
        },
    )?;

    let eval_stage = r.stage(
        Stage {
            name: "eval".into(),
            version: STAGE_VERSION,
            dir: r.per_mode("eval"),
            params: json!({"max_decode_len": cfg.nmt.max_decode_len}),
            inputs: vec![nmt_stage.output("model.json"), train_path.clone(), test_path.clone()],
            outputs: vec![ROWS_FILE.into(), "eval.json".into(), "eval.txt".into(), "hypotheses.txt".into()],
        },
        |st| {
            let model = in_stage(&st.name, Seq2Seq::load(&nmt_stage.output("model.json")))?;
            let train = read_pairs(&st.name, &train_path)?;
            let test = read_pairs(&st.name, &test_path)?;
            let (whole, hyps) = in_stage(&st.name, eval::evaluate(&model, &test, cfg.nmt.max_decode_len, exec))?;
            in_stage(&st.name, whole.save(&st.dir, "eval").map_err(|e| CorpusError::Io { path: st.dir.display().to_string(), source: e }))?;
            in_stage(&st.name, corpus::write_monolingual(&st.output("hypotheses.txt"), &hyps))?;
            let rows = origin_rows(&model, &train, &test, &whole, cfg.nmt.max_decode_len, exec).map_err(|e| PipelineError::Stage { stage: st.name.clone(), source: Box::new(e.into()) })?;
            let p = st.output(ROWS_FILE);
            std::fs::write(&p, serde_json::to_string_pretty(&rows).expect("rows serialise") + "\n").map_err(|e| PipelineError::io(&p, e))
        },
    )?;

    let text = std::fs::read_to_string(eval_stage.output(ROWS_FILE)).map_err(|e| PipelineError::io(&eval_stage.dir, e))?;
    let rows: Vec<ReportRow> = serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(RunOutcome { mode_dir: r.per_mode(""), rows, executed: r.executed })
}

fn label(origins: &BTreeSet<Origin>) -> String {
    match origins.iter().next() {
        Some(o) if origins.len() == 1 => o.as_str().to_string(),
        _ => "combined".to_string(),
    }
}

/// One row per test origin, plus a combined row when there are several.
fn origin_rows(
    model: &Seq2Seq,
    train: &[ParallelPair],
    test: &[ParallelPair],
    whole: &eval::EvalReport,
    max_len: usize,
    exec: crate::exec::Exec,
) -> Result<Vec<ReportRow>, EvalError> {
    let train_label = label(&train.iter().map(|p| p.origin).collect());
    let origins: BTreeSet<Origin> = test.iter().map(|p| p.origin).collect();
    let row = |test_label: String, n_test: usize, bleu: f64, ppl: f64| ReportRow { train: train_label.clone(), test: test_label, n_train: train.len(), n_test, bleu, ppl };
    let mut rows = Vec::new();
    if origins.len() > 1 {
        for o in &origins {
            let subset: Vec<ParallelPair> = test.iter().filter(|p| p.origin == *o).cloned().collect();
            let (rep, _) = eval::evaluate(model, &subset, max_len, exec)?;
            rows.push(row(o.as_str().to_string(), subset.len(), rep.bleu, rep.ppl));
        }
    }
    rows.push(row(label(&origins), test.len(), whole.bleu, whole.ppl));
    Ok(rows)
}
