//! Command-line front end. Results go to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad arguments, 3 model
//! errors (missing, corrupt or incompatible file), 4 input errors
//! (unreadable or malformed corpora and text).

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::lexicon::{Lexicon, DEFAULT_WEIGHT};
use crate::params::Params;
use crate::pipeline::container;
use crate::pipeline::corpus::{read_corpus, Corpus};
use crate::pipeline::train::{evaluate_with, finetune, format_history, train, FinetuneOptions, TrainingConfig};
use crate::pipeline::{Analysis, Analyzer, Model};
use crate::scheme::Task;
use crate::theseus::{compress, CompressOptions};

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Plain,
    Json,
    Conll,
}

#[derive(Debug, Parser)]
#[command(name = "hanforge", version, about = "Multi-task Chinese word segmentation, tagging, NER and parsing")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct ModelArg {
    /// Model container.
    #[arg(long, env = "HANFORGE_MODEL")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct LexiconArgs {
    /// Word list, one word per line, biasing segmentation and POS tagging.
    #[arg(long)]
    pub user_dict: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WEIGHT)]
    pub dict_weight: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a JSON configuration listing corpora.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Analyse text, one sentence per line.
    Predict {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_parser = parse_task)]
        task: Task,
        /// Inline sentence; otherwise `--input` or stdin is read.
        #[arg(long, conflicts_with = "input")]
        text: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Corpus tag selecting the annotation style; defaults to the
        /// first corpus of the task.
        #[arg(long)]
        corpus: Option<String>,
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Plain)]
        format: OutputFormat,
    },
    /// Score a model on an annotated corpus.
    Eval {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_parser = parse_task)]
        task: Task,
        /// Annotated corpus in the task's format.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        corpus: Option<String>,
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Plain)]
        format: OutputFormat,
    },
    /// Continue training on corpora whose tags the model knows.
    Finetune {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Halve the encoder depth by progressive module replacement.
    Compress {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Training configuration supplying the corpora.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        phase1_steps: usize,
        #[arg(long)]
        phase2_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a model's configuration, corpus tags and label inventories.
    Inspect {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = OutputFormat::Plain)]
        format: OutputFormat,
    },
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn model(e: Error) -> Self {
        CliError::new(EXIT_MODEL, e.to_string())
    }

    fn input(e: Error) -> Self {
        let code = match e {
            Error::UnknownTag(_) | Error::Config(_) | Error::NegativeWeight(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_INTERNAL, format!("write failed: {e}"))
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdin, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn load_model(arg: &ModelArg) -> Result<Model, CliError> {
    let path = arg
        .model
        .as_ref()
        .ok_or_else(|| CliError::new(EXIT_MODEL, "no model given (use --model or HANFORGE_MODEL)"))?;
    container::load(path).map_err(|e| CliError::new(EXIT_MODEL, format!("{}: {e}", path.display())))
}

fn save_model(model: &Model, path: &Path) -> CliResult {
    container::save(model, path).map_err(|e| CliError::new(EXIT_INTERNAL, format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<TrainingConfig, CliError> {
    TrainingConfig::load(path).map_err(|e| match e {
        Error::Io(io) => CliError::new(EXIT_INPUT, format!("{}: {io}", path.display())),
        other => CliError::input(other),
    })
}

fn analyzer(model: Model, task: Task, corpus: Option<&str>, lex: &LexiconArgs) -> Result<Analyzer, CliError> {
    let mut a = Analyzer::new(Arc::new(model));
    if let Some(tag) = corpus {
        let t = a.model().vocab.tag(tag).map_err(CliError::input)?;
        if t.task != task {
            return Err(CliError::new(EXIT_USAGE, format!("corpus tag `{tag}` is a {} corpus, not {task}", t.task)));
        }
        a.set_style(tag).map_err(CliError::input)?;
    }
    if let Some(path) = &lex.user_dict {
        let mut lexicon = Lexicon::load(path).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
        lexicon.set_weight(lex.dict_weight).map_err(CliError::input)?;
        a.set_lexicon(Some(lexicon));
    } else if lex.dict_weight < 0.0 || lex.dict_weight.is_nan() {
        return Err(CliError::input(Error::NegativeWeight(lex.dict_weight)));
    }
    Ok(a)
}

fn read_sentences(text: Option<String>, input: Option<&Path>, stdin: &mut dyn Read) -> Result<Vec<String>, CliError> {
    let raw = match (text, input) {
        (Some(t), _) => t,
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| CliError::new(EXIT_INPUT, format!("{}: {e}", p.display())))?,
        (None, None) => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| CliError::new(EXIT_INPUT, format!("stdin: {e}")))?;
            s
        }
    };
    let lines: Vec<String> = raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if lines.is_empty() {
        return Err(CliError::input(Error::EmptyInput));
    }
    Ok(lines)
}

fn write_analyses(out: &mut dyn Write, analyses: &[Analysis], format: OutputFormat) -> CliResult {
    for (i, a) in analyses.iter().enumerate() {
        match format {
            OutputFormat::Json => writeln!(out, "{}", serde_json::to_string(a).expect("analysis serializes"))?,
            OutputFormat::Plain if !matches!(a, Analysis::Dep(_)) => writeln!(out, "{}", a.to_plain())?,
            _ => {
                if i > 0 {
                    writeln!(out)?;
                }
                writeln!(out, "{}", a.to_conll())?;
            }
        }
    }
    Ok(())
}

fn execute(cli: CliConfig, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            epochs,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.options.seed = s;
            }
            if let Some(e) = epochs {
                cfg.options.epochs = e;
            }
            let outcome = train(&cfg).map_err(CliError::input)?;
            stdout.write_all(format_history(&outcome.history).as_bytes())?;
            save_model(&outcome.model, &out)?;
            writeln!(stderr, "saved {}", out.display())?;
        }
        Command::Predict {
            model,
            task,
            text,
            input,
            corpus,
            lexicon,
            format,
        } => {
            let m = load_model(&model)?;
            let a = analyzer(m, task, corpus.as_deref(), &lexicon)?;
            let sentences = read_sentences(text, input.as_deref(), stdin)?;
            let results = a.predict(&sentences, task).map_err(CliError::input)?;
            write_analyses(stdout, &results, format)?;
        }
        Command::Eval {
            model,
            task,
            input,
            corpus,
            lexicon,
            format,
        } => {
            let sentences = read_corpus(&input, task).map_err(|e| match e {
                Error::Io(io) => CliError::new(EXIT_INPUT, format!("{}: {io}", input.display())),
                other => CliError::input(other),
            })?;
            let m = load_model(&model)?;
            let a = analyzer(m, task, corpus.as_deref(), &lexicon)?;
            let tag = a
                .style(task)
                .ok_or_else(|| CliError::new(EXIT_USAGE, format!("model has no {task} corpus")))?
                .name
                .clone();
            let c = Corpus {
                tag: tag.clone(),
                task,
                sentences,
            };
            let score = evaluate_with(&a, &c).map_err(CliError::input)?;
            match format {
                OutputFormat::Json => writeln!(
                    stdout,
                    "{}",
                    serde_json::json!({"tag": tag, "task": task, "score": score, "primary": score.primary()})
                )?,
                _ => writeln!(stdout, "{tag}\t{task}\t{score}")?,
            }
        }
        Command::Finetune {
            model,
            config,
            out,
            epochs,
            seed,
        } => {
            let m = load_model(&model)?;
            let cfg = load_config(&config)?;
            let corpora = cfg.load_corpora().map_err(CliError::input)?;
            let options = FinetuneOptions {
                epochs,
                batch_size: cfg.options.batch_size,
                learning_rate: cfg.options.learning_rate,
                clip_norm: cfg.options.clip_norm,
                seed: seed.unwrap_or(cfg.options.seed),
            };
            let (tuned, losses) = finetune(&m, &corpora, &options).map_err(CliError::input)?;
            for (i, l) in losses.iter().enumerate() {
                writeln!(stdout, "epoch {:>3}  loss {l:.6}", i + 1)?;
            }
            save_model(&tuned, &out)?;
        }
        Command::Compress {
            from,
            out,
            config,
            phase1_steps,
            phase2_steps,
            seed,
        } => {
            let large = container::load(&from).map_err(|e| CliError::new(EXIT_MODEL, format!("{}: {e}", from.display())))?;
            let cfg = load_config(&config)?;
            let corpora = cfg.load_corpora().map_err(CliError::input)?;
            let mut options = CompressOptions::new(phase1_steps, phase2_steps, seed);
            options.batch_size = cfg.options.batch_size;
            options.learning_rate = cfg.options.learning_rate;
            options.clip_norm = cfg.options.clip_norm;
            let outcome = compress(&large, &corpora, &options).map_err(|e| match e {
                Error::BindingMismatch(_) => CliError::model(e),
                other => CliError::input(other),
            })?;
            writeln!(
                stdout,
                "layers {} -> {}\tfinal loss {:.6}",
                large.num_layers(),
                outcome.model.num_layers(),
                outcome.losses.last().copied().unwrap_or(0.0)
            )?;
            save_model(&outcome.model, &out)?;
        }
        Command::Inspect { model, format } => {
            let m = load_model(&model)?;
            let tags: Vec<_> = m.vocab.tags().iter().map(|t| (t.name.clone(), t.task)).collect();
            let summary = serde_json::json!({
                "config": m.config,
                "corpus_tags": tags,
                "characters": m.vocab.chars().len(),
                "schemes": m.schemes,
                "parameters": m.params.num_scalars(),
            });
            match format {
                OutputFormat::Json => writeln!(stdout, "{summary}")?,
                _ => {
                    let e = &m.config.encoder;
                    writeln!(
                        stdout,
                        "encoder\tlayers={} hidden={} heads={} ffn={} max_len={}",
                        e.num_layers, e.hidden_dim, e.num_heads, e.ffn_dim, e.max_len
                    )?;
                    writeln!(stdout, "vocabulary\t{} characters", m.vocab.chars().len())?;
                    for (name, task) in tags {
                        writeln!(stdout, "corpus\t{name}\t{task}")?;
                    }
                    for task in [Task::Cws, Task::Pos, Task::Ner] {
                        if let Some(s) = m.schemes.for_task(task) {
                            writeln!(stdout, "labels\t{task}\t{}", s.labels().join(" "))?;
                        }
                    }
                    if !m.schemes.relations.is_empty() {
                        writeln!(stdout, "relations\t{}", m.schemes.relations.join(" "))?;
                    }
                    writeln!(stdout, "parameters\t{}", m.params.num_scalars())?;
                }
            }
        }
    }
    Ok(())
}
