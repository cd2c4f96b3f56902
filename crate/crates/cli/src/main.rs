//! `mergen`: romanization, corpus tools, embeddings, augmentation, NMT,
//! evaluation and the end-to-end experiment runner.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use mergen_core::augment::{self, AugmentMode, SynonymTable};
use mergen_core::corpus::{self, Origin, ParallelPair, Sentence, SplitSpec};
use mergen_core::embed::{self, EmbedError, GloveHyperparams, TrainMode, WordVectors};
use mergen_core::eval;
use mergen_core::nmt::{self, NmtError, Seq2Seq, TrainConfig};
use mergen_core::pipeline::{self, FailureKind, PipelineConfig, PipelineError};
use mergen_core::synth;
use mergen_core::translit;
use mergen_core::Exec;

#[derive(Parser)]
#[command(name = "mergen", version, about = "Low-resource Manchu-Korean translation toolkit")]
struct Cli {
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transliterate text line by line.
    Romanize(RomanizeArgs),
    /// Filter and split parallel corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Train and query GloVe vectors.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Build synonym tables and augment corpora.
    #[command(subcommand)]
    Augment(AugmentCmd),
    /// Train and run the seq2seq translator.
    #[command(subcommand)]
    Nmt(NmtCmd),
    /// Score translations with BLEU and perplexity.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Run the whole pipeline from a JSON config.
    Run(RunArgs),
    /// Render the results table of an experiment directory.
    Report {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write synthetic corpora.
    #[command(subcommand)]
    Synth(SynthCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Yale,
    Abkai,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Forward,
    Backward,
}

#[derive(Args)]
struct RomanizeArgs {
    #[arg(long, value_enum)]
    scheme: Scheme,
    #[arg(long, value_enum, default_value = "forward")]
    direction: Direction,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Keep pairs whose source has at least N tokens.
    Filter {
        #[arg(long)]
        min_len: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shuffle with SEED, then split 8:1:1 into P.train.tsv, P.valid.tsv, P.test.tsv.
    Split {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_prefix: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Train one GloVe model.
    Train {
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 3)]
        min_len: usize,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        /// Lock-free multi-threaded updates (not reproducible).
        #[arg(long)]
        hogwild: bool,
        #[arg(long = "in", required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the co-occurrence triples here.
        #[arg(long)]
        cooc: Option<PathBuf>,
    },
    /// Nearest neighbours of a word by cosine.
    Similar {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum AugmentCmd {
    /// Vote synonyms over every `*.vec` model in DIR.
    BuildTable {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to the source vocabulary of this parallel TSV.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Add single-substitution variants to a parallel TSV.
    Apply {
        #[arg(long, value_parser = parse_mode)]
        mode: AugmentMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        table: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum NmtCmd {
    /// Train from a JSON job file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Greedy translation, one sentence per line.
    Translate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Write the machine-readable record here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    Ppl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// shuffle -> augment -> split, as in the original experiments.
    #[arg(long)]
    paper_faithful: bool,
    /// Override the config's augmentation mode.
    #[arg(long, value_parser = parse_mode)]
    augmentation: Option<AugmentMode>,
    /// Print the resolved config and exit.
    #[arg(long)]
    echo_config: bool,
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Synonym-rich ring language: DIR/parallel.tsv and DIR/monolingual.txt.
    Ring {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 250)]
        pairs: usize,
        #[arg(long, default_value_t = 4000)]
        monolingual: usize,
    },
    /// Small memorisation corpus: DIR/parallel.tsv.
    Toy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
    },
}

/// `nmt train` job file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NmtJob {
    train: PathBuf,
    valid: PathBuf,
    out_dir: PathBuf,
    #[serde(default)]
    nmt: TrainConfig,
}

fn parse_mode(s: &str) -> Result<AugmentMode, String> {
    s.parse()
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CliResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: e.into() }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn nmt_failure(e: NmtError) -> Failure {
    match e {
        NmtError::NonFiniteLoss { .. } => Failure { code: 3, error: e.into() },
        NmtError::InvalidConfig(_) => usage(e),
        _ => data(e),
    }
}

fn embed_failure(e: EmbedError) -> Failure {
    match e {
        EmbedError::NonFiniteLoss { .. } => Failure { code: 3, error: e.into() },
        EmbedError::InvalidHyperparams(_) => usage(e),
        _ => data(e),
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let code = match e.kind() {
        FailureKind::Usage => 1,
        FailureKind::Data => 2,
        FailureKind::Numerical => 3,
    };
    Failure { code, error: e.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(data)
}

fn write(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(data)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(data)
}

fn load_pairs(path: &Path) -> Result<Vec<ParallelPair>, Failure> {
    corpus::load_parallel(path, Origin::default()).map_err(data)
}

fn romanize(args: &RomanizeArgs) -> CliResult {
    let text = read(&args.input)?;
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        let converted = match (args.scheme, args.direction) {
            (Scheme::Yale, Direction::Forward) => translit::yale_romanize(line),
            (Scheme::Yale, Direction::Backward) => translit::yale_deromanize(line),
            (Scheme::Abkai, Direction::Forward) => translit::abkai_romanize(line).map(|r| {
                for p in &r.irreversible {
                    eprintln!("line {}: position {}: {} -> '{}' is not reversible", i + 1, p.position, p.unit, p.latin);
                }
                r.text
            }),
            (Scheme::Abkai, Direction::Backward) => translit::abkai_deromanize(line),
        };
        out.push_str(&converted.with_context(|| format!("line {}", i + 1)).map_err(data)?);
        out.push('\n');
    }
    write(&args.out, &out)
}

fn corpus_cmd(cmd: &CorpusCmd) -> CliResult {
    match cmd {
        CorpusCmd::Filter { min_len, input, out } => {
            let pairs = load_pairs(input)?;
            let kept = corpus::filter_min_len(&pairs, *min_len);
            eprintln!("kept {} of {} pairs", kept.len(), pairs.len());
            corpus::write_parallel(out, &kept, true).map_err(data)
        }
        CorpusCmd::Split { seed, out_prefix, input } => {
            let pairs = corpus::shuffle(&load_pairs(input)?, *seed);
            let s = corpus::split(&pairs, SplitSpec { seed: *seed }).map_err(data)?;
            for (name, part) in [("train", &s.train), ("valid", &s.valid), ("test", &s.test)] {
                corpus::write_parallel(Path::new(&format!("{out_prefix}.{name}.tsv")), part, true).map_err(data)?;
            }
            eprintln!("train {} / valid {} / test {}", s.train.len(), s.valid.len(), s.test.len());
            Ok(())
        }
    }
}

fn embed_cmd(cmd: &EmbedCmd, exec: Exec) -> CliResult {
    match cmd {
        EmbedCmd::Train { window, min_len, dim, seed, iterations, hogwild, input, out, cooc } => {
            let hyper = GloveHyperparams {
                window: *window,
                min_sentence_len: *min_len,
                dim: *dim,
                seed: *seed,
                iterations: *iterations,
                ..GloveHyperparams::default()
            };
            hyper.validate().map_err(usage)?;
            let mut sentences = Vec::new();
            for p in input {
                sentences.extend(corpus::load_monolingual(p).map_err(data)?);
            }
            let sentences = corpus::filter_sentences_min_len(&sentences, *min_len);
            let matrix = embed::build_cooc(&sentences, &hyper, exec).map_err(embed_failure)?;
            if let Some(path) = cooc {
                matrix.save(path).map_err(embed_failure)?;
            }
            let mode = if *hogwild { TrainMode::Hogwild } else { TrainMode::Deterministic };
            let (model, log) = embed::train_glove(&matrix, &hyper, mode).map_err(embed_failure)?;
            eprintln!(
                "{} words, {} cells, loss {:.4} -> {:.4}",
                matrix.vocab.len(),
                matrix.nnz(),
                log.initial_loss,
                log.epoch_losses.last().copied().unwrap_or(log.initial_loss)
            );
            model.word_vectors().save(out).map_err(embed_failure)
        }
        EmbedCmd::Similar { model, word, k } => {
            let v = WordVectors::load(model).map_err(embed_failure)?;
            for (w, c) in v.most_similar(word, *k).map_err(data)? {
                println!("{w}\t{c:.6}");
            }
            Ok(())
        }
    }
}

fn augment_cmd(cmd: &AugmentCmd, exec: Exec) -> CliResult {
    match cmd {
        AugmentCmd::BuildTable { models, out, input } => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(models)
                .with_context(|| format!("listing {}", models.display()))
                .map_err(data)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "vec"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(data(anyhow!("no *.vec models in {}", models.display())));
            }
            let vectors = paths.iter().map(|p| WordVectors::load(p).map_err(embed_failure)).collect::<Result<Vec<_>, _>>()?;
            let vocab: BTreeSet<String> = match input {
                Some(p) => augment::source_vocab(&load_pairs(p)?),
                None => vectors.iter().flat_map(|v| v.words().iter().cloned()).collect(),
            };
            let table = augment::build_synonym_table(&vocab, &vectors, exec);
            eprintln!("{} models, {} entries, {} words without synonym", vectors.len(), table.len(), table.skipped().len());
            table.save(out).map_err(data)
        }
        AugmentCmd::Apply { mode, seed, table, input, out } => {
            let pairs = load_pairs(input)?;
            let table = SynonymTable::load(table).map_err(data)?;
            let augmented = augment::augment(&pairs, &table, *mode, *seed, exec);
            let r = augment::augmentation_report(&pairs, &augmented);
            eprintln!(
                "sentences {} -> {}, source vocabulary {} -> {}",
                r.sentences_before, r.sentences_after, r.vocab_before, r.vocab_after
            );
            corpus::write_parallel(out, &augmented, true).map_err(data)
        }
    }
}

fn nmt_cmd(cmd: &NmtCmd, exec: Exec) -> CliResult {
    match cmd {
        NmtCmd::Train { config } => {
            let mut job: NmtJob = serde_json::from_str(&read(config)?).with_context(|| format!("parsing {}", config.display())).map_err(usage)?;
            let base = config.parent().unwrap_or(Path::new("."));
            for p in [&mut job.train, &mut job.valid, &mut job.out_dir] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            job.nmt.exec = exec;
            let train = load_pairs(&job.train)?;
            let valid = load_pairs(&job.valid)?;
            eprintln!("epoch,train_loss,valid_loss,seconds");
            let out = nmt::train::train_with(&train, &valid, &job.nmt, |e| {
                eprintln!("{},{},{},{:.3}", e.epoch, e.train_loss, e.valid_loss, e.seconds);
            })
            .map_err(nmt_failure)?;
            std::fs::create_dir_all(&job.out_dir).with_context(|| format!("creating {}", job.out_dir.display())).map_err(data)?;
            out.model.save(&job.out_dir.join("model.json")).map_err(nmt_failure)?;
            write(&job.out_dir.join("train_log.csv"), &out.log.to_csv())?;
            eprintln!("best epoch {} (initial valid loss {})", out.log.best_epoch, out.log.initial_valid_loss);
            Ok(())
        }
        NmtCmd::Translate { model, input, out, max_len } => {
            let m = Seq2Seq::load(model).map_err(nmt_failure)?;
            let text = read(input)?;
            let sources: Vec<Sentence> = text.lines().map(Sentence::parse).collect();
            let hyps = m.translate_all(&sources, *max_len, exec).map_err(nmt_failure)?;
            let mut s = String::new();
            for h in hyps {
                s.push_str(&h.to_string());
                s.push('\n');
            }
            write(out, &s)
        }
    }
}

fn eval_cmd(cmd: &EvalCmd, exec: Exec) -> CliResult {
    match cmd {
        EvalCmd::Bleu { hyp, reference, json } => {
            let h: Vec<Sentence> = read(hyp)?.lines().map(Sentence::parse).collect();
            let r: Vec<Sentence> = read(reference)?.lines().map(Sentence::parse).collect();
            let s = eval::bleu_with(&h, &r, exec).map_err(data)?;
            let p: Vec<String> = s.precisions.iter().map(|p| format!("{p:.4}")).collect();
            println!("BLEU = {:.2} ({}; BP {:.4}, hyp {}, ref {})", s.bleu, p.join("/"), s.brevity_penalty, s.hyp_len, s.ref_len);
            if let Some(path) = json {
                write(path, &(serde_json::to_string_pretty(&s).expect("score serialises") + "\n"))?;
            }
            Ok(())
        }
        EvalCmd::Ppl { model, input, json } => {
            let m = Seq2Seq::load(model).map_err(nmt_failure)?;
            let pairs = load_pairs(input)?;
            let ppl = eval::perplexity(&m, &pairs, exec).map_err(data)?;
            println!("PPL = {ppl:.4} ({} pairs)", pairs.len());
            if let Some(path) = json {
                write(path, &(serde_json::json!({"ppl": ppl, "n_sentences": pairs.len()}).to_string() + "\n"))?;
            }
            Ok(())
        }
    }
}

fn run_cmd(args: &RunArgs, sequential: bool) -> CliResult {
    let mut cfg = PipelineConfig::load(&args.config).map_err(pipeline_failure)?;
    cfg.paper_faithful |= args.paper_faithful;
    if let Some(m) = args.augmentation {
        cfg.augmentation = m;
    }
    if sequential {
        cfg.exec = Exec::Sequential;
    }
    if args.echo_config {
        print!("{}", cfg.resolved().echo());
        return Ok(());
    }
    eprint!("{}", cfg.resolved().echo());
    let outcome = pipeline::run_pipeline(&cfg, &mut |line| eprintln!("{line}")).map_err(pipeline_failure)?;
    let report = pipeline::report(&cfg.output_dir).map_err(pipeline_failure)?;
    write(&cfg.output_dir.join("report.txt"), &report.to_text())?;
    write(&cfg.output_dir.join("report.json"), &report.to_json())?;
    for r in &outcome.rows {
        println!("{}\t{}\t{:.2}\t{:.2}", r.train, r.test, r.bleu, r.ppl);
    }
    Ok(())
}

fn synth_cmd(cmd: &SynthCmd) -> CliResult {
    match cmd {
        SynthCmd::Ring { out, seed, pairs, monolingual } => {
            let spec = synth::RingSpec { pairs: *pairs, monolingual: *monolingual, ..synth::RingSpec::default() };
            let r = synth::ring_language(&spec, *seed);
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).map_err(data)?;
            corpus::write_parallel(&out.join("parallel.tsv"), &r.parallel, false).map_err(data)?;
            corpus::write_monolingual(&out.join("monolingual.txt"), &r.monolingual).map_err(data)
        }
        SynthCmd::Toy { out, seed, pairs } => {
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).map_err(data)?;
            corpus::write_parallel(&out.join("parallel.tsv"), &synth::toy_parallel(*pairs, *seed), false).map_err(data)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match &cli.command {
        Command::Romanize(a) => romanize(a),
        Command::Corpus(c) => corpus_cmd(c),
        Command::Embed(c) => embed_cmd(c, exec),
        Command::Augment(c) => augment_cmd(c, exec),
        Command::Nmt(c) => nmt_cmd(c, exec),
        Command::Eval(c) => eval_cmd(c, exec),
        Command::Run(a) => run_cmd(a, cli.sequential),
        Command::Report { dir, json } => {
            let r = pipeline::report(dir).map_err(pipeline_failure)?;
            print!("{}", if *json { r.to_json() } else { r.to_text() });
            Ok(())
        }
        Command::Synth(c) => synth_cmd(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
