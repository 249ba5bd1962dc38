//! Command-line driver.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use synsum_core::decode::{summarize, trace};
use synsum_core::model::{ModelDims, ModelError, ModelParams};
use synsum_core::rouge::{rouge_all, RougeScore};
use synsum_core::tensor::TensorError;
use synsum_core::train::{loss_gradcheck, train_from, LossRecord, OptimizerState, TrainError, TrainObserver};
use synsum_core::Vocab;
use thiserror::Error;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
use crate::config::{ConfigError, RunConfig};
use crate::corpus::{load_corpus, load_summaries, write_jsonl, CorpusError, Document, LoadOptions, SummaryLine};
use crate::prepare::{load_vocab, prepare_all, prepare_training, save_vocab, serialize_document, PrepError};
use crate::synth::{generate, SynthSpec, Task};
use crate::toy::random_case;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(CorpusError, PrepError, CheckpointError, io::Error);

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e).into()
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        TrainError::from(e).into()
    }
}

#[derive(Parser, Debug)]
#[command(name = "synsum", version, about = "Syntax-aware summarizer with dynamic selective gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus generated from a small grammar.
    GenSynthetic(GenArgs),
    /// Parse a corpus, report statistics and write its vocabulary.
    Preprocess(PreprocessArgs),
    /// Train a model and write a checkpoint (plus `<out>.vocab`).
    Train(TrainArgs),
    /// Beam-search summaries for every document of a corpus.
    Summarize(SummarizeArgs),
    /// Corpus-average ROUGE-1/2/L of candidate summaries.
    Evaluate(EvaluateArgs),
    /// Compare tape gradients with finite differences on a random tiny model.
    Gradcheck(GradcheckArgs),
    /// Dump per-step mean gate values for one or all documents.
    TraceGates(TraceArgs),
}

/// Settings shared with the config file; a flag beats a file value.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    embed: Option<usize>,
    /// Maximum number of words kept in the vocabulary
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long, alias = "learning_rate")]
    learning_rate: Option<f64>,
    #[arg(long, alias = "accumulator_init")]
    accumulator_init: Option<f64>,
    #[arg(long, alias = "coverage_weight")]
    coverage_weight: Option<f64>,
    #[arg(long, alias = "coverage_start")]
    coverage_start: Option<usize>,
    #[arg(long, alias = "max_source_len")]
    max_source_len: Option<usize>,
    #[arg(long, alias = "max_target_len")]
    max_target_len: Option<usize>,
    #[arg(long, alias = "clip_norm")]
    clip_norm: Option<f64>,
    #[arg(long, alias = "init_scale")]
    init_scale: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, alias = "checkpoint_every")]
    checkpoint_every: Option<usize>,
    #[arg(long, alias = "beam_width")]
    beam_width: Option<usize>,
    #[arg(long, alias = "max_decode_len")]
    max_decode_len: Option<usize>,
    #[arg(long, alias = "no_syntax")]
    no_syntax: bool,
    #[arg(long, alias = "static_gate")]
    static_gate: bool,
    #[arg(long, alias = "no_gate")]
    no_gate: bool,
    #[arg(long, alias = "no_coverage")]
    no_coverage: bool,
    /// Keep the root label of every tree
    #[arg(long, alias = "keep_root")]
    keep_root: bool,
    /// Sentences are plain word strings
    #[arg(long)]
    plain: bool,
    /// Skip malformed corpus lines
    #[arg(long)]
    lenient: bool,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! opt {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    out.push((stringify!($f), v.to_string()));
                }
            )*};
        }
        opt!(
            hidden,
            embed,
            vocab,
            learning_rate,
            accumulator_init,
            coverage_weight,
            coverage_start,
            max_source_len,
            max_target_len,
            clip_norm,
            init_scale,
            steps,
            seed,
            checkpoint_every,
            beam_width,
            max_decode_len
        );
        macro_rules! flag {
            ($($f:ident),*) => {$(
                if self.$f {
                    out.push((stringify!($f), "true".into()));
                }
            )*};
        }
        flag!(no_syntax, static_gate, no_gate, no_coverage, plain, lenient);
        if self.keep_root {
            out.push(("drop_root", "false".into()));
        }
        out
    }

    /// Defaults, then the config file, then flags.
    fn resolve(&self, base: RunConfig) -> Result<RunConfig, CliError> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.pairs() {
            cfg.set(&format!("--{}", k.replace('_', "-")), k, &v)?;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    docs: usize,
    #[arg(long, default_value_t = 3)]
    sentences: usize,
    #[arg(long, default_value_t = 0.0)]
    nonce_rate: f64,
    /// copy_first_sentence or copy_first_k_words[:k]
    #[arg(long, default_value = "copy_first_sentence")]
    task: Task,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab_out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the loss curve as TSV
    #[arg(long)]
    loss_curve: Option<PathBuf>,
    /// Continue from this checkpoint and its vocabulary; model sizes and
    /// ablation flags come from the checkpoint
    #[arg(long)]
    resume: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Summaries as JSON Lines; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Vocabulary file; defaults to `<model>.vocab`
    #[arg(long)]
    vocab_file: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// JSON Lines with "id" and "summary"
    #[arg(long)]
    candidates: PathBuf,
    /// JSON Lines with "id" and "summary" (a corpus file works)
    #[arg(long)]
    references: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 15)]
    source_len: usize,
    #[arg(long, default_value_t = 5)]
    target_len: usize,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only this document id
    #[arg(long)]
    doc: Option<String>,
    /// Teacher-force the gold summary instead of the decoded one
    #[arg(long)]
    gold: bool,
    #[arg(long)]
    vocab_file: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors go to standard error.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Train(a) => train(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::TraceGates(a) => trace_gates(a),
    }
}

fn announce(cfg: &RunConfig) {
    eprint!("resolved configuration:\n{}", cfg.render());
}

fn vocab_sidecar(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".vocab");
    PathBuf::from(s)
}

fn load_docs(path: &Path, cfg: &RunConfig, require_summary: bool) -> Result<Vec<Document>, CliError> {
    let docs = load_corpus(path, LoadOptions { require_summary, lenient: cfg.lenient })?;
    eprintln!("loaded {} documents from {}", docs.len(), path.display());
    Ok(docs)
}

fn gen_synthetic(a: GenArgs) -> Result<(), CliError> {
    let spec = SynthSpec { n_docs: a.docs, sentences_per_doc: a.sentences, nonce_rate: a.nonce_rate, task: a.task, seed: a.seed };
    spec.validate().map_err(CliError::Usage)?;
    eprintln!("{spec:?}");
    write_jsonl(&a.out, generate(&spec))?;
    eprintln!("wrote {} documents to {}", spec.n_docs, a.out.display());
    Ok(())
}

fn preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let cfg = a.overrides.resolve(RunConfig::default())?;
    announce(&cfg);
    let docs = load_docs(&a.corpus, &cfg, false)?;
    let opts = cfg.prep_options();
    let serialized = docs.iter().map(|d| serialize_document(d, &opts)).collect::<Result<Vec<_>, _>>()?;
    let vocab = synsum_core::syntax::build_vocab(serialized.iter(), cfg.train.vocab);
    let tokens: usize = serialized.iter().map(|s| s.len()).sum();
    let words: usize = serialized.iter().map(|s| s.word_count()).sum();
    let oov: usize = serialized.iter().flat_map(|s| s.words()).filter(|w| vocab.word_id(w).is_none()).count();
    println!("documents\t{}", docs.len());
    println!("tokens\t{tokens}");
    println!("words\t{words}");
    println!("symbols\t{}", vocab.symbol_count());
    println!("vocab_words\t{}", vocab.word_count());
    println!("oov_word_tokens\t{oov}");
    if let Some(path) = &a.vocab_out {
        save_vocab(path, &vocab)?;
        eprintln!("wrote vocabulary ({} ids) to {}", vocab.len(), path.display());
    }
    Ok(())
}

struct Progress {
    every: usize,
    curve: Option<io::BufWriter<fs::File>>,
    snapshot: PathBuf,
    ablation: synsum_core::train::Ablation,
}

impl TrainObserver for Progress {
    fn on_step(&mut self, r: &LossRecord) {
        if r.step == 1 || r.step.is_multiple_of(self.every) {
            eprintln!("step {}\tloss {:.6}\tnll {:.6}\tcoverage {:.6}", r.step, r.loss, r.nll, r.coverage);
        }
        if let Some(w) = &mut self.curve {
            let _ = writeln!(w, "{}\t{}\t{}\t{}", r.step, r.loss, r.nll, r.coverage);
        }
    }

    fn checkpoint(&mut self, step: usize, params: &ModelParams, opt: &OptimizerState) -> Result<(), String> {
        let ck = Checkpoint { params: params.clone(), optimizer: Some(opt.clone()), ablation: self.ablation };
        save_checkpoint(&self.snapshot, &ck).map_err(|e| e.to_string())?;
        eprintln!("step {step}: checkpoint written to {}", self.snapshot.display());
        Ok(())
    }
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    let cfg = a.overrides.resolve(RunConfig::default())?;
    let resumed = a.resume.as_deref().map(|path| load_model(path, None, cfg.clone())).transpose()?;
    let cfg = resumed.as_ref().map_or(cfg, |(_, _, c)| c.clone());
    announce(&cfg);
    cfg.train.validate()?;
    let docs = load_docs(&a.corpus, &cfg, true)?;
    let opts = cfg.prep_options();
    let (vocab, params, optimizer) = match resumed {
        Some((ck, vocab, _)) => (vocab, ck.params, ck.optimizer),
        None => {
            let (vocab, _) = prepare_training(&docs, cfg.train.vocab, &opts)?;
            let params = ModelParams::init(cfg.train.dims(vocab.len()), cfg.train.seed, cfg.train.init_scale);
            (vocab, params, None)
        }
    };
    let examples = prepare_all(&docs, &vocab, &opts)?
        .into_iter()
        .map(|p| p.example().ok_or_else(|| CliError::Data(format!("document {} has no summary", p.id))))
        .collect::<Result<Vec<_>, _>>()?;
    eprintln!("vocabulary: {} ids ({} symbols, {} words)", vocab.len(), vocab.symbol_count(), vocab.word_count());
    let curve = match &a.loss_curve {
        Some(p) => {
            let mut w = io::BufWriter::new(fs::File::create(p)?);
            writeln!(w, "step\tloss\tnll\tcoverage")?;
            Some(w)
        }
        None => None,
    };
    let mut progress = Progress { every: (cfg.train.steps / 20).max(1), curve, snapshot: a.out.clone(), ablation: cfg.train.ablation };
    let outcome = train_from(&cfg.train, params, optimizer, &examples, &mut progress)?;
    if let Some(w) = &mut progress.curve {
        w.flush()?;
    }
    let ck = Checkpoint { params: outcome.params, optimizer: Some(outcome.optimizer), ablation: cfg.train.ablation };
    save_checkpoint(&a.out, &ck)?;
    save_vocab(&vocab_sidecar(&a.out), &vocab)?;
    eprintln!("wrote {} and {}", a.out.display(), vocab_sidecar(&a.out).display());
    Ok(())
}

/// Loads a model and its vocabulary; the run flags stored in the checkpoint
/// replace the ablation settings.
fn load_model(model: &Path, vocab_file: Option<&Path>, mut cfg: RunConfig) -> Result<(Checkpoint, Vocab, RunConfig), CliError> {
    let vocab = load_vocab(&vocab_file.map(Path::to_path_buf).unwrap_or_else(|| vocab_sidecar(model)))?;
    let ck = load_checkpoint(model, None)?;
    if ck.params.dims().vocab != vocab.len() {
        return Err(CliError::Data(format!(
            "checkpoint has {} vocabulary rows but the vocabulary file has {} ids",
            ck.params.dims().vocab,
            vocab.len()
        )));
    }
    let dims = ck.params.dims();
    cfg.train.hidden = dims.hidden;
    cfg.train.embed = dims.embed;
    cfg.train.ablation = ck.ablation;
    Ok((ck, vocab, cfg))
}

fn summarize_cmd(a: SummarizeArgs) -> Result<(), CliError> {
    let cfg = a.overrides.resolve(RunConfig::default())?;
    let (ck, vocab, cfg) = load_model(&a.model, a.vocab_file.as_deref(), cfg)?;
    announce(&cfg);
    let docs = load_docs(&a.corpus, &cfg, false)?;
    let prepared = prepare_all(&docs, &vocab, &cfg.prep_options())?;
    let mut lines = Vec::with_capacity(prepared.len());
    for (i, p) in prepared.iter().enumerate() {
        let s = summarize(&ck.params, cfg.train.model_options(), &vocab, &p.encoded, cfg.beam_width, cfg.max_decode_len)?;
        lines.push(SummaryLine { id: p.id.clone(), summary: s.words.join(" ") });
        if (i + 1) % 50 == 0 {
            eprintln!("summarized {}/{}", i + 1, prepared.len());
        }
    }
    match &a.out {
        Some(path) => {
            write_jsonl(path, &lines)?;
            eprintln!("wrote {} summaries to {}", lines.len(), path.display());
        }
        None => {
            let mut out = io::stdout().lock();
            for l in &lines {
                writeln!(out, "{}", serde_json::to_string(l).map_err(|e| CliError::Data(e.to_string()))?)?;
            }
        }
    }
    Ok(())
}

/// Corpus-average precision, recall and F1 for ROUGE-1, ROUGE-2 and ROUGE-L.
pub fn average_rouge(pairs: &[(String, String)]) -> [RougeScore; 3] {
    let mut acc = [RougeScore::default(); 3];
    for (cand, reference) in pairs {
        for (a, s) in acc.iter_mut().zip(rouge_all(cand, reference)) {
            a.precision += s.precision;
            a.recall += s.recall;
            a.f1 += s.f1;
        }
    }
    let n = pairs.len().max(1) as f64;
    acc.map(|a| RougeScore { precision: a.precision / n, recall: a.recall / n, f1: a.f1 / n, empty: pairs.is_empty() })
}

pub fn rouge_tsv(scores: &[RougeScore; 3]) -> String {
    let mut out = String::from("metric\tprecision\trecall\tf1\n");
    for (name, s) in ["rouge-1", "rouge-2", "rouge-l"].iter().zip(scores) {
        let _ = writeln!(out, "{name}\t{:.6}\t{:.6}\t{:.6}", s.precision, s.recall, s.f1);
    }
    out
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let candidates: HashMap<String, String> = load_summaries(&a.candidates)?.into_iter().map(|l| (l.id, l.summary)).collect();
    let references = load_summaries(&a.references)?;
    let mut missing = 0;
    let pairs: Vec<(String, String)> = references
        .into_iter()
        .map(|r| {
            let c = candidates.get(&r.id).cloned().unwrap_or_else(|| {
                missing += 1;
                String::new()
            });
            (c, r.summary)
        })
        .collect();
    if missing > 0 {
        eprintln!("warning: {missing} references have no candidate and score 0");
    }
    let tsv = rouge_tsv(&average_rouge(&pairs));
    match &a.out {
        Some(p) => fs::write(p, tsv)?,
        None => print!("{tsv}"),
    }
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<(), CliError> {
    let mut base = RunConfig::default();
    base.train.hidden = 8;
    base.train.embed = 6;
    base.train.vocab = 24;
    let cfg = a.overrides.resolve(base)?;
    announce(&cfg);
    let dims = ModelDims { vocab: cfg.train.vocab, embed: cfg.train.embed, hidden: cfg.train.hidden };
    if dims.vocab <= 4 + crate::toy::TOY_SYMBOLS || a.source_len < 2 || a.target_len < 1 {
        return Err(CliError::Usage("gradcheck needs vocab > 10, source-len >= 2 and target-len >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let case = random_case(&mut rng, dims.vocab, a.source_len, a.target_len);
    let params = ModelParams::init(dims, cfg.train.seed, 0.5);
    let lambda = cfg.train.coverage_weight_at(0);
    let report = loss_gradcheck(&params, cfg.train.model_options(), lambda, &case.source, &case.target, a.eps, a.tol)?;
    println!("coordinates\t{}", report.coordinates);
    println!("max_relative_error\t{:e}", report.max_rel_error);
    println!("worst\t{}[{}]", synsum_core::Param::ALL[report.worst.0].name(), report.worst.1);
    if report.max_rel_error < a.tol {
        println!("pass");
        Ok(())
    } else {
        Err(CliError::Numeric(format!("max relative error {:e} exceeds {:e}", report.max_rel_error, a.tol)))
    }
}

fn trace_gates(a: TraceArgs) -> Result<(), CliError> {
    let cfg = a.overrides.resolve(RunConfig::default())?;
    let (ck, vocab, cfg) = load_model(&a.model, a.vocab_file.as_deref(), cfg)?;
    announce(&cfg);
    let docs: Vec<Document> =
        load_docs(&a.corpus, &cfg, a.gold)?.into_iter().filter(|d| a.doc.as_ref().is_none_or(|id| &d.id == id)).collect();
    if docs.is_empty() {
        return Err(CliError::Data("no matching documents".into()));
    }
    let opts = cfg.train.model_options();
    let mut out = String::new();
    for p in prepare_all(&docs, &vocab, &cfg.prep_options())? {
        let ids = if a.gold {
            let mut t = p.target.clone().unwrap_or_default();
            t.pop();
            t
        } else {
            summarize(&ck.params, opts, &vocab, &p.encoded, cfg.beam_width, cfg.max_decode_len)?.ids
        };
        let t = trace(&ck.params, opts, &p.source, &ids)?;
        let words: Vec<&str> =
            p.encoded.word_positions().iter().map(|&i| p.encoded.ext.text(&vocab, p.encoded.ext_ids[i]).unwrap_or("?")).collect();
        let _ = writeln!(out, "# {}", p.id);
        let _ = writeln!(out, "step\t{}", words.join("\t"));
        for (j, line) in t.gates_tsv().lines().enumerate() {
            let _ = writeln!(out, "{j}\t{line}");
        }
        eprintln!("{}: {} steps, gate dynamism {:e}", p.id, ids.len(), t.gate_dynamism());
    }
    match &a.out {
        Some(path) => fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}
