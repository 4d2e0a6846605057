//! Command-line interface: argument definitions and command bodies.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use epo_core::evaluation::evaluate_corpus;
use epo_core::synth::generate_synthetic;
use epo_core::trainer::EpochRecord;
use serde::Serialize;

use crate::checkpoint;
use crate::config::{resolve, Overrides};
use crate::error::{Error, Result};
use crate::experiment::{cross_validate, fit, format_scores, sweep, sweep_tsv, CvResult, SweepSpec, SweepTable};
use crate::io::{self, Embeddings};
use crate::manifest::RunManifest;

// Console output is informational; a closed stdout (`| head`) must not abort a run.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! say_raw {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "epo-ecpe", version, about = "Emotion-cause pair extraction: data, training, evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus and its lexicon.
    GenSynth(GenSynthArgs),
    /// Pre-train and train a model, writing a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint, cross-validate its configuration, or sweep K / w.
    Evaluate(EvaluateArgs),
    /// Extract pairs for every document of a corpus.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub n_docs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub max_len: usize,
    #[arg(long, default_value_t = 2)]
    pub max_pairs: usize,
    #[arg(long)]
    pub out_corpus: PathBuf,
    #[arg(long)]
    pub out_lexicon: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pretrained vectors, one `token v1 ... v_dim` per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Training log; defaults to `<out>.log`. Appended to, never truncated.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args, Default)]
pub struct OverrideArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub skip_pretrain: bool,
    #[arg(long)]
    pub epochs_pretrain: Option<usize>,
    #[arg(long)]
    pub epochs_train: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub clause_dim: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "w")]
    pub window: Option<usize>,
}

impl OverrideArgs {
    pub fn to_overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            skip_pretrain: self.skip_pretrain,
            epochs_pretrain: self.epochs_pretrain,
            epochs_train: self.epochs_train,
            embed_dim: self.embed_dim,
            clause_dim: self.clause_dim,
            k: self.k,
            window: self.window,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// JSON report to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Cross-validate the checkpoint's configuration with this many folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Cross-validation rounds, each with fresh folds and a fresh seed.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Retrain per setting, e.g. `K=1..5` or `w=0..4`.
    #[arg(long)]
    pub sweep: Option<SweepSpec>,
    /// Pretrained vectors for retraining runs.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Prediction JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynth(a) => gen_synth(&a),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Predict(a) => predict(&a),
    }
}

pub fn gen_synth(a: &GenSynthArgs) -> Result<()> {
    if a.n_docs == 0 {
        return Err(Error::Argument("--n-docs must be at least 1".into()));
    }
    let mut manifest = RunManifest::start("gen-synth");
    let (docs, lexicon) = generate_synthetic(a.n_docs, a.seed, a.max_len, a.max_pairs);
    io::save_corpus(&a.out_corpus, &docs)?;
    io::save_lexicon(&a.out_lexicon, &lexicon)?;
    manifest
        .seed(a.seed)
        .flag("n_docs", a.n_docs)
        .flag("max_len", a.max_len)
        .flag("max_pairs", a.max_pairs)
        .output("corpus", &a.out_corpus)
        .output("lexicon", &a.out_lexicon)
        .finish(&a.out_corpus)?;
    say!("wrote {} documents to {}", docs.len(), a.out_corpus.display());
    Ok(())
}

fn log_line(r: &EpochRecord) -> String {
    let l = &r.losses;
    format!(
        "phase={} epoch={} batches={} l_e={:.6} l_gp={:.6} l_fp={:.6} total={:.6}",
        r.phase.name(),
        r.epoch,
        r.batches,
        l.l_e,
        l.l_gp,
        l.l_fp,
        l.total
    )
}

fn read_embeddings(path: Option<&Path>, dim: usize) -> Result<Option<Embeddings>> {
    path.map(|p| Embeddings::read(p, dim)).transpose()
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut manifest = RunManifest::start("train");
    let config = resolve(a.config.as_deref(), &a.overrides.to_overrides())?;
    let docs = io::load_corpus(&a.corpus)?;
    let lexicon = io::load_lexicon(&a.lexicon)?;
    let embeddings = read_embeddings(a.embeddings.as_deref(), config.embed_dim)?;

    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".log"));
    let mut log = OpenOptions::new().create(true).append(true).open(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut log_err = None;
    let mut emit = |line: &str| {
        say!("{line}");
        if let Err(e) = writeln!(log, "{line}") {
            log_err.get_or_insert(e);
        }
    };
    emit(&format!(
        "run seed={} docs={} skip_pretrain={} epochs_pretrain={} epochs_train={}",
        config.seed,
        docs.len(),
        config.skip_pretrain,
        if config.skip_pretrain { 0 } else { config.epochs_pretrain },
        config.epochs_train
    ));
    let (trainer, vocab) = fit(&docs, &config, embeddings.as_ref(), &mut |r| emit(&log_line(r)))?;
    checkpoint::save(&a.out, &trainer, &vocab)?;
    let (report, preds) = evaluate_corpus(&trainer.model, &vocab, &docs, &lexicon)?;
    emit(&format!(
        "train-set pair_f1={:.4} emotion_f1={:.4} cause_f1={:.4} candidate_recall={:.4}",
        report.scores.pair.f1,
        report.scores.emotion.f1,
        report.scores.cause.f1,
        preds.candidate_recall()
    ));
    if let Some(e) = log_err {
        return Err(Error::io(&log_path, e));
    }

    manifest.config(&config).input("corpus", &a.corpus).input("lexicon", &a.lexicon);
    if let Some(p) = &a.config {
        manifest.input("config", p);
    }
    if let Some(p) = &a.embeddings {
        manifest.input("embeddings", p);
    }
    manifest
        .flag("skip_pretrain", config.skip_pretrain)
        .output("checkpoint", &a.out)
        .output("log", &log_path)
        .finish(&a.out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum EvaluationOutput {
    Checkpoint { report: epo_core::metrics::EvalReport, candidate_recall: f64 },
    CrossValidation(CvResult),
    Sweep(SweepTable),
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut manifest = RunManifest::start("evaluate");
    if a.repeats.is_some() && a.folds.is_none() {
        return Err(Error::Argument("--repeats requires --folds".into()));
    }
    let repeats = a.repeats.unwrap_or(1);
    let ckpt = checkpoint::load(&a.checkpoint)?;
    let docs = io::load_corpus(&a.corpus)?;
    let lexicon = io::load_lexicon(&a.lexicon)?;
    if let Some(k) = a.folds {
        if k > docs.len() {
            return Err(Error::Argument(format!("--folds {k} exceeds the corpus size {}", docs.len())));
        }
    }
    let config = ckpt.config.clone();
    let embeddings = read_embeddings(a.embeddings.as_deref(), config.embed_dim)?;

    let mut extra = None;
    let output = match (&a.sweep, a.folds) {
        (Some(spec), folds) => {
            let table = sweep(&docs, &lexicon, &config, spec, folds, repeats, embeddings.as_ref(), &mut |row| {
                say!("{}={} pair_f1={:.4} candidate_recall={:.4}", spec.param.name(), row.value, row.mean.pair.f1, row.candidate_recall);
            })?;
            let tsv = sweep_tsv(&table);
            say_raw!("{tsv}");
            let tsv_path = with_suffix(&a.out, ".tsv");
            io::write_atomic(&tsv_path, |w| w.write_all(tsv.as_bytes()))?;
            extra = Some(tsv_path);
            manifest.flag("sweep", format!("{}={:?}", spec.param.name(), spec.values));
            EvaluationOutput::Sweep(table)
        }
        (None, Some(k)) => {
            let cv = cross_validate(&docs, &lexicon, &config, k, repeats, embeddings.as_ref(), &mut |f| {
                say!(
                    "repeat={} fold={} test_docs={} pair_f1={:.4}",
                    f.repeat, f.fold, f.n_test, f.report.scores.pair.f1
                );
            })?;
            say_raw!("{}", format_scores(&cv.summary.mean, Some(&cv.summary.std)));
            EvaluationOutput::CrossValidation(cv)
        }
        (None, None) => {
            let (trainer, vocab) = ckpt.into_trainer();
            let (report, preds) = evaluate_corpus(&trainer.model, &vocab, &docs, &lexicon)?;
            say_raw!("{}", format_scores(&report.scores, None));
            say!("candidate_recall {:.4}", preds.candidate_recall());
            EvaluationOutput::Checkpoint { report, candidate_recall: preds.candidate_recall() }
        }
    };
    let json = serde_json::to_string_pretty(&output).expect("report always serializes");
    io::write_atomic(&a.out, |w| writeln!(w, "{json}"))?;

    manifest
        .config(&config)
        .input("corpus", &a.corpus)
        .input("lexicon", &a.lexicon)
        .input("checkpoint", &a.checkpoint)
        .output("report", &a.out);
    if let Some(k) = a.folds {
        manifest.flag("folds", k).flag("repeats", repeats);
    }
    if let Some(p) = &extra {
        manifest.output("table", p);
    }
    manifest.finish(&a.out)?;
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let mut manifest = RunManifest::start("predict");
    let (trainer, vocab) = checkpoint::load(&a.checkpoint)?.into_trainer();
    let docs = io::load_corpus(&a.corpus)?;
    let lexicon = io::load_lexicon(&a.lexicon)?;
    let preds = epo_core::evaluation::predict_corpus(&trainer.model, &vocab, &docs, &lexicon)?;
    io::save_predictions(&a.out, &preds.predictions)?;
    manifest
        .seed(trainer.config.seed)
        .input("corpus", &a.corpus)
        .input("lexicon", &a.lexicon)
        .input("checkpoint", &a.checkpoint)
        .output("predictions", &a.out)
        .finish(&a.out)?;
    say!("wrote {} predictions to {}", preds.predictions.len(), a.out.display());
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Exit status for a failed command: 2 for usage problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::Config(_) => 2,
        _ => 1,
    }
}
