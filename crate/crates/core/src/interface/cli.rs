use std::ffi::OsString;
use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use super::config::{AppConfig, ConfigError, CONFIG_ENV};
use super::service::{self, contexts_from_dataset, AppState, ServiceError, ServiceOptions};
use crate::corpus::{self, Article, CorpusError, Paragraph, QaDataset};
use crate::evaluation::{evaluate, EvalError};
use crate::inference::{InferenceError, Model};
use crate::text::nfc;
use crate::tokenizer::{build_vocab, TokenizerError, Vocabulary};
use crate::training::{build_examples, train, Checkpoint, TrainError, Trainer};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage: unknown flag or bad arguments
  3  config: unreadable config, unknown key or invalid value
  4  io: missing or unreadable file, write failure
  5  data: malformed or invalid dataset, vocabulary or input text
  6  train: training failed
  7  model: checkpoint, inference or evaluation failure
  8  service: the HTTP service could not start

Any config key can be given as a flag: --train.epochs 5 or --set train.epochs=5.
Precedence: config file < key flags < command flags.";

/// Failure class; each maps to a distinct process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    Usage,
    Config,
    Io,
    Data,
    Train,
    Model,
    Service,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Usage => 2,
            Self::Config => 3,
            Self::Io => 4,
            Self::Data => 5,
            Self::Train => 6,
            Self::Model => 7,
            Self::Service => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Usage => "usage",
            Self::Config => "config",
            Self::Io => "io",
            Self::Data => "data",
            Self::Train => "train",
            Self::Model => "model",
            Self::Service => "service",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub detail: String,
}

impl CliError {
    fn new(category: Category, detail: impl Into<String>) -> Self {
        Self {
            category,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // one line, whatever the detail contains
        let detail = self.detail.replace(['\n', '\r'], " ");
        write!(f, "error: {}: {}", self.category.as_str(), detail)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let category = match e {
            ConfigError::Io { .. } => Category::Io,
            _ => Category::Config,
        };
        Self::new(category, e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let category = match e {
            CorpusError::Io { .. } => Category::Io,
            _ => Category::Data,
        };
        Self::new(category, e.to_string())
    }
}

impl From<TokenizerError> for CliError {
    fn from(e: TokenizerError) -> Self {
        let category = match e {
            TokenizerError::Io { .. } => Category::Io,
            _ => Category::Data,
        };
        Self::new(category, e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let category = match e {
            TrainError::Io { .. } => Category::Io,
            TrainError::Config(_) => Category::Config,
            TrainError::Tokenizer(_) => Category::Data,
            _ => Category::Train,
        };
        Self::new(category, e.to_string())
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Checkpoint(inner) => {
                let category = match inner {
                    TrainError::Io { .. } => Category::Io,
                    _ => Category::Model,
                };
                Self::new(category, inner.to_string())
            }
            InferenceError::Tokenizer(inner) => inner.into(),
            other => Self::new(Category::Model, other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Inference(inner) => inner.into(),
            EvalError::Io { .. } => Self::new(Category::Io, e.to_string()),
            EvalError::EmptyDataset => Self::new(Category::Data, e.to_string()),
            other => Self::new(Category::Model, other.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        Self::new(Category::Service, e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "bnqa", version, about = "Closed-domain extractive question answering for Bengali", after_help = EXIT_CODES)]
struct Cli {
    /// Flat dotted-key JSON config file.
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// More log output on stderr (-v debug, -vv trace). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean a corpus directory into a dataset skeleton of paragraphs.
    Ingest(IngestArgs),
    /// Build a WordPiece vocabulary from a dataset's contexts and questions.
    BuildVocab(BuildVocabArgs),
    /// Check a dataset and report every error.
    Validate(ValidateArgs),
    /// Split a dataset into train and eval halves by paragraph.
    Split(SplitArgs),
    /// Print dataset statistics.
    Stats(StatsArgs),
    /// Train a model and write checkpoints.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Answer one question.
    Ask(AskArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Directory of .html/.txt documents [paths.corpus_dir].
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    /// Output dataset skeleton [paths.contexts].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildVocabArgs {
    /// Annotated dataset [paths.dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output vocabulary [paths.vocab].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum vocabulary size [vocab.max_size].
    #[arg(long)]
    max_size: Option<usize>,
    /// Minimum whole-word frequency [vocab.min_freq].
    #[arg(long)]
    min_freq: Option<usize>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Dataset to check [paths.dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Dataset to split [paths.dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Train half output [paths.train_dataset].
    #[arg(long)]
    train_out: Option<PathBuf>,
    /// Eval half output [paths.eval_dataset].
    #[arg(long)]
    eval_out: Option<PathBuf>,
    /// Fraction of paragraphs for eval [split.eval_fraction].
    #[arg(long)]
    eval_fraction: Option<f64>,
    /// Shuffle seed [split.seed, default train.seed].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Dataset [paths.dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Print JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training dataset [paths.train_dataset, then paths.dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Vocabulary [paths.vocab]; ignored with --resume.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Checkpoint directory, overwritten after every epoch [paths.checkpoint_dir].
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Total epochs [train.epochs].
    #[arg(long)]
    epochs: Option<usize>,
    /// Continue from the checkpoint in the checkpoint directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Checkpoint directory [paths.checkpoint_dir].
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Dataset to score [paths.eval_dataset, then paths.dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// JSON report output [paths.report].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Longest answer in tokens [decode.max_answer_tokens].
    #[arg(long)]
    max_answer_tokens: Option<usize>,
}

#[derive(Args, Debug)]
struct AskArgs {
    /// Checkpoint directory [paths.checkpoint_dir].
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Question text.
    #[arg(long)]
    question: String,
    /// Read the context from a UTF-8 file.
    #[arg(long, group = "ctx")]
    context_file: Option<PathBuf>,
    /// Context text.
    #[arg(long, group = "ctx")]
    context: Option<String>,
    /// Paragraph id from the dataset.
    #[arg(long, group = "ctx")]
    context_id: Option<String>,
    /// Dataset holding --context-id [paths.dataset, then paths.contexts].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Number of answers [decode.k].
    #[arg(short, long)]
    k: Option<usize>,
    /// Longest answer in tokens [decode.max_answer_tokens].
    #[arg(long)]
    max_answer_tokens: Option<usize>,
    /// Print JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Checkpoint directory [paths.checkpoint_dir].
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Dataset whose paragraphs are served as contexts [paths.dataset, then paths.contexts].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Bind address [service.bind].
    #[arg(long)]
    bind: Option<String>,
    /// Port [service.port].
    #[arg(long)]
    port: Option<u16>,
}

/// Rewrites `--section.key value` and `--section.key=value` into `--set`.
fn expand_key_flags(args: Vec<OsString>) -> Vec<OsString> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(s) = arg.to_str() else {
            out.push(arg);
            continue;
        };
        if s == "--" {
            out.push(arg);
            out.extend(iter);
            break;
        }
        let Some(flag) = s.strip_prefix("--") else {
            out.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (flag, None),
        };
        if !name.contains('.') {
            out.push(arg);
            continue;
        }
        let value = inline.or_else(|| iter.next().map(|v| v.to_string_lossy().into_owned()));
        out.push("--set".into());
        out.push(format!("{name}={}", value.unwrap_or_default()).into());
    }
    out
}

fn require(value: Option<PathBuf>, fallbacks: &[&Option<PathBuf>], what: &str) -> Result<PathBuf, CliError> {
    value
        .or_else(|| fallbacks.iter().find_map(|p| (*p).clone()))
        .ok_or_else(|| CliError::new(Category::Config, format!("no {what} given")))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::new(Category::Io, format!("{}: {e}", parent.display())))?;
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<AppConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    for s in &cli.set {
        config.set_str(s)?;
    }
    Ok(config)
}

fn init_logging(verbose: u8) {
    use tracing_subscriber::EnvFilter;
    let level = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Failures print one `error: <category>: <detail>` line to stderr.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = expand_key_flags(args.into_iter().map(Into::into).collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::new(Category::Usage, first));
            return ExitCode::from(Category::Usage.exit_code());
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.category.exit_code())
        }
    }
}

pub fn run() -> ExitCode {
    run_from(std::env::args_os())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&config, a),
        Command::BuildVocab(a) => {
            if let Some(v) = a.max_size {
                config.vocab.max_size = v;
            }
            if let Some(v) = a.min_freq {
                config.vocab.min_freq = v;
            }
            config.validate()?;
            cmd_build_vocab(&config, a)
        }
        Command::Validate(a) => cmd_validate(&config, a),
        Command::Split(a) => {
            if let Some(v) = a.eval_fraction {
                config.split.eval_fraction = v;
            }
            if let Some(v) = a.seed {
                config.split.seed = Some(v);
            }
            config.validate()?;
            cmd_split(&config, a)
        }
        Command::Stats(a) => cmd_stats(&config, a),
        Command::Train(a) => {
            if let Some(v) = a.epochs {
                config.train.epochs = v;
            }
            config.validate()?;
            cmd_train(&config, a)
        }
        Command::Eval(a) => {
            if let Some(v) = a.max_answer_tokens {
                config.decode.max_answer_tokens = v;
            }
            config.validate()?;
            cmd_eval(&config, a)
        }
        Command::Ask(a) => {
            if let Some(v) = a.k {
                config.decode.k = v;
            }
            if let Some(v) = a.max_answer_tokens {
                config.decode.max_answer_tokens = v;
            }
            config.validate()?;
            cmd_ask(&config, a)
        }
        Command::Serve(a) => {
            if let Some(v) = a.bind.clone() {
                config.service.bind = v;
            }
            if let Some(v) = a.port {
                config.service.port = v;
            }
            config.validate()?;
            cmd_serve(&config, a)
        }
    }
}

fn cmd_ingest(config: &AppConfig, a: IngestArgs) -> Result<(), CliError> {
    let dir = require(a.corpus_dir, &[&config.paths.corpus_dir], "corpus directory (--corpus-dir or paths.corpus_dir)")?;
    let out = require(a.out, &[&config.paths.contexts], "output path (--out or paths.contexts)")?;
    let files = corpus::list_corpus_dir(&dir)?;
    let outcome = corpus::ingest(&files);
    for (path, e) in &outcome.failures {
        tracing::warn!(path = %path.display(), error = %e, "document skipped");
    }
    let mut ds = QaDataset::default();
    for doc in &outcome.documents {
        let paragraphs: Vec<Paragraph> = corpus::clean(doc)
            .into_iter()
            .map(|p| Paragraph {
                context: p.text,
                id: Some(p.id),
                qas: Vec::new(),
            })
            .collect();
        if !paragraphs.is_empty() {
            ds.data.push(Article {
                title: doc.source_id.clone(),
                paragraphs,
            });
        }
    }
    if ds.data.is_empty() {
        return Err(CliError::new(
            Category::Data,
            format!("no paragraphs extracted from {}", dir.display()),
        ));
    }
    ensure_parent(&out)?;
    ds.save(&out)?;
    println!(
        "ingested {} documents ({} skipped), {} paragraphs -> {}",
        outcome.documents.len(),
        outcome.failures.len(),
        ds.paragraph_count(),
        out.display()
    );
    Ok(())
}

fn cmd_build_vocab(config: &AppConfig, a: BuildVocabArgs) -> Result<(), CliError> {
    let path = require(a.dataset, &[&config.paths.dataset], "dataset (--dataset or paths.dataset)")?;
    let out = require(a.out, &[&config.paths.vocab], "output path (--out or paths.vocab)")?;
    let ds = QaDataset::load(&path)?;
    let mut texts = Vec::new();
    for (_, p) in ds.paragraphs() {
        texts.push(nfc(&p.context));
        texts.extend(p.qas.iter().map(|q| nfc(&q.question)));
    }
    let vocab = build_vocab(texts.iter().map(String::as_str), config.vocab.max_size, config.vocab.min_freq)?;
    ensure_parent(&out)?;
    vocab.save(&out)?;
    println!("{} pieces -> {}", vocab.len(), out.display());
    Ok(())
}

fn cmd_validate(config: &AppConfig, a: ValidateArgs) -> Result<(), CliError> {
    let path = require(a.dataset, &[&config.paths.dataset], "dataset (--dataset or paths.dataset)")?;
    let ds = QaDataset::load(&path)?;
    let report = corpus::validate(&ds);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("{report}");
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::new(
            Category::Data,
            format!("{}: {} validation errors", path.display(), report.errors.len()),
        ))
    }
}

fn cmd_split(config: &AppConfig, a: SplitArgs) -> Result<(), CliError> {
    let path = require(a.dataset, &[&config.paths.dataset], "dataset (--dataset or paths.dataset)")?;
    let train_out = require(a.train_out, &[&config.paths.train_dataset], "train output (--train-out or paths.train_dataset)")?;
    let eval_out = require(a.eval_out, &[&config.paths.eval_dataset], "eval output (--eval-out or paths.eval_dataset)")?;
    let ds = QaDataset::load(&path)?;
    let (train_ds, eval_ds) = corpus::split(&ds, config.split.eval_fraction, config.split_seed())?;
    for (ds, out) in [(&train_ds, &train_out), (&eval_ds, &eval_out)] {
        ensure_parent(out)?;
        ds.save(out)?;
    }
    println!(
        "train: {} paragraphs, {} questions -> {}",
        train_ds.paragraph_count(),
        train_ds.question_count(),
        train_out.display()
    );
    println!(
        "eval: {} paragraphs, {} questions -> {}",
        eval_ds.paragraph_count(),
        eval_ds.question_count(),
        eval_out.display()
    );
    Ok(())
}

fn cmd_stats(config: &AppConfig, a: StatsArgs) -> Result<(), CliError> {
    let path = require(a.dataset, &[&config.paths.dataset], "dataset (--dataset or paths.dataset)")?;
    let s = corpus::stats(&QaDataset::load(&path)?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s).expect("stats serialize"));
        return Ok(());
    }
    println!("articles:   {}", s.articles);
    println!("paragraphs: {}", s.paragraphs);
    println!("questions:  {}", s.questions);
    println!("answers:    {}", s.answers);
    let q = &s.questions_per_paragraph;
    println!("questions per paragraph: min {} mean {:.2} max {}", q.min, q.mean, q.max);
    let l = &s.answer_length;
    println!("answer length (code points): min {} mean {:.2} max {}", l.min, l.mean, l.max);
    for (len, count) in &s.answer_length_histogram {
        println!("  {len:>4} {count}");
    }
    Ok(())
}

fn cmd_train(config: &AppConfig, a: TrainArgs) -> Result<(), CliError> {
    let path = require(
        a.dataset,
        &[&config.paths.train_dataset, &config.paths.dataset],
        "dataset (--dataset, paths.train_dataset or paths.dataset)",
    )?;
    let dir = require(a.checkpoint, &[&config.paths.checkpoint_dir], "checkpoint directory (--checkpoint or paths.checkpoint_dir)")?;
    let ds = QaDataset::load(&path)?;
    let report = corpus::validate(&ds);
    if !report.is_valid() {
        return Err(CliError::new(
            Category::Data,
            format!("{} has {} validation errors; run validate for details", path.display(), report.errors.len()),
        ));
    }

    if a.resume {
        let ckpt = Checkpoint::load(&dir)?;
        let tc = ckpt.manifest.train.clone();
        let set = build_examples(&ds, &ckpt.vocab, tc.max_len, tc.doc_stride)?;
        let mut trainer = Trainer::resume(ckpt, set.examples, Some(config.train.epochs))?;
        let start_step = trainer.step_count();
        let (_, last, epochs) = trainer.run(Some(&dir))?;
        for e in &epochs {
            println!("epoch {:>4}  mean loss {:.6}  {:.1}s", e.epoch, e.mean_loss, e.seconds);
        }
        trainer.save(&dir)?;
        println!(
            "resumed at step {start_step}, now {} steps; last batch loss {last:.6}; checkpoint {}",
            trainer.step_count(),
            dir.display()
        );
        return Ok(());
    }

    let vocab_path = require(a.vocab, &[&config.paths.vocab], "vocabulary (--vocab or paths.vocab)")?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let r = train(&ds, &vocab, &config.model, &config.train, Some(&dir))?;
    for e in &r.epochs {
        println!("epoch {:>4}  mean loss {:.6}  {:.1}s", e.epoch, e.mean_loss, e.seconds);
    }
    println!(
        "{} examples ({} questions skipped, {} windows dropped), {} steps in {:.1}s",
        r.examples,
        r.skipped.len(),
        r.dropped_windows,
        r.steps,
        r.seconds
    );
    let last_epoch = r.epochs.last().map_or(f64::NAN, |e| e.mean_loss);
    println!(
        "loss: first batch {:.6}, last epoch mean {:.6}; checkpoint {}",
        r.initial_loss,
        last_epoch,
        dir.display()
    );
    Ok(())
}

fn cmd_eval(config: &AppConfig, a: EvalArgs) -> Result<(), CliError> {
    let ckpt = require(a.checkpoint, &[&config.paths.checkpoint_dir], "checkpoint (--checkpoint or paths.checkpoint_dir)")?;
    let path = require(
        a.dataset,
        &[&config.paths.eval_dataset, &config.paths.dataset],
        "dataset (--dataset, paths.eval_dataset or paths.dataset)",
    )?;
    let model = Model::load(&ckpt)?;
    let ds = QaDataset::load(&path)?;
    let report = evaluate(&model, &ds, config.decode.max_answer_tokens)?;
    println!("{report}");
    if let Some(out) = a.out.or_else(|| config.paths.report.clone()) {
        ensure_parent(&out)?;
        report.save(&out)?;
        println!("report -> {}", out.display());
    }
    Ok(())
}

fn cmd_ask(config: &AppConfig, a: AskArgs) -> Result<(), CliError> {
    let ckpt = require(a.checkpoint, &[&config.paths.checkpoint_dir], "checkpoint (--checkpoint or paths.checkpoint_dir)")?;
    let context = if let Some(text) = a.context {
        text
    } else if let Some(file) = a.context_file {
        fs::read_to_string(&file).map_err(|e| CliError::new(Category::Io, format!("{}: {e}", file.display())))?
    } else if let Some(id) = a.context_id {
        let path = require(
            a.dataset,
            &[&config.paths.dataset, &config.paths.contexts],
            "dataset for --context-id (--dataset, paths.dataset or paths.contexts)",
        )?;
        let ds = QaDataset::load(&path)?;
        ds.find_paragraph(&id)
            .map(|p| p.context.clone())
            .ok_or_else(|| CliError::new(Category::Data, format!("no paragraph with id {id:?} in {}", path.display())))?
    } else {
        return Err(CliError::new(
            Category::Usage,
            "one of --context, --context-file or --context-id is required",
        ));
    };
    let model = Model::load(&ckpt)?;
    let answers = match model.predict(&context, &a.question, config.decode.k, config.decode.max_answer_tokens) {
        Ok(p) => p,
        Err(InferenceError::NoLegalPosition) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&answers).expect("predictions serialize"));
        return Ok(());
    }
    if answers.is_empty() {
        println!("no answer");
    }
    for (rank, p) in answers.iter().enumerate() {
        println!("{}. [{}, {}) {:.4}  {}", rank + 1, p.char_start, p.char_end, p.score, p.text);
    }
    Ok(())
}

fn cmd_serve(config: &AppConfig, a: ServeArgs) -> Result<(), CliError> {
    let ckpt = require(a.checkpoint, &[&config.paths.checkpoint_dir], "checkpoint (--checkpoint or paths.checkpoint_dir)")?;
    let model = Model::load(&ckpt)?;
    let contexts = match a.dataset.or_else(|| config.paths.dataset.clone()).or_else(|| config.paths.contexts.clone()) {
        Some(path) => contexts_from_dataset(&QaDataset::load(&path)?),
        None => Vec::new(),
    };
    let ip: IpAddr = config
        .service
        .bind
        .parse()
        .map_err(|_| CliError::new(Category::Config, format!("invalid service.bind {:?}", config.service.bind)))?;
    let addr = SocketAddr::new(ip, config.service.port);
    tracing::info!(model_id = %model.model_id, contexts = contexts.len(), "model loaded");
    let state = AppState::new(
        model,
        contexts,
        ServiceOptions {
            default_k: config.decode.k,
            max_answer_tokens: config.decode.max_answer_tokens,
            max_context_chars: config.service.max_context_chars,
            cors_origins: config.service.cors_origins.clone(),
        },
    );
    let app = service::router(state)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(Category::Service, e.to_string()))?;
    runtime.block_on(service::serve(app, addr))?;
    Ok(())
}
