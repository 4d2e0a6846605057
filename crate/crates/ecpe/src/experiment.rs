//! Training runs, cross-validation and hyperparameter sweeps.

use std::fmt::Write as _;
use std::str::FromStr;

use epo_core::corpus::{build_vocab, make_folds, Document, EncodedDoc, Lexicon, Vocabulary};
use epo_core::evaluation::evaluate_corpus;
use epo_core::metrics::{aggregate_cv, CvSummary, EvalReport, Scores};
use epo_core::trainer::{EpochRecord, TrainConfig, Trainer};
use epo_core::EpoModel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Embeddings;

/// Builds the vocabulary from `docs`, initializes the model (optionally
/// from pretrained vectors) and runs the full schedule.
pub fn fit(
    docs: &[Document],
    config: &TrainConfig,
    embeddings: Option<&Embeddings>,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<(Trainer, Vocabulary)> {
    config.validate().map_err(Error::Config)?;
    let vocab = build_vocab(docs, config.min_count)?;
    let mut model = EpoModel::new(config.model_config(vocab.len()), config.seed)?;
    if let Some(e) = embeddings {
        if e.dim != config.embed_dim {
            return Err(Error::Argument(format!(
                "embeddings have dimension {}, config expects {}",
                e.dim, config.embed_dim
            )));
        }
        model.set_embeddings(e.table(&vocab, config.seed))?;
    }
    let encoded: Vec<EncodedDoc> = docs.iter().map(|d| vocab.encode(d)).collect();
    let mut trainer = Trainer::new(model, config.clone());
    trainer.fit(&encoded, log)?;
    Ok((trainer, vocab))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub report: EvalReport,
    pub candidate_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub n_folds: usize,
    pub repeats: usize,
    pub folds: Vec<FoldResult>,
    pub summary: CvSummary,
}

/// `repeats` rounds of `n_folds`-fold cross-validation. Round `r` reshuffles
/// the folds and reinitializes the model with seed `config.seed + r`.
pub fn cross_validate(
    docs: &[Document],
    lexicon: &Lexicon,
    config: &TrainConfig,
    n_folds: usize,
    repeats: usize,
    embeddings: Option<&Embeddings>,
    progress: &mut dyn FnMut(&FoldResult),
) -> Result<CvResult> {
    if repeats == 0 {
        return Err(Error::Argument("repeats must be at least 1".into()));
    }
    if n_folds < 2 {
        return Err(Error::Argument("cross-validation needs at least 2 folds".into()));
    }
    let mut folds = Vec::with_capacity(n_folds * repeats);
    for repeat in 0..repeats {
        let seed = config.seed.wrapping_add(repeat as u64);
        let splits = make_folds(docs.len(), n_folds, seed)?;
        let cfg = TrainConfig { seed, ..config.clone() };
        for split in splits {
            let train: Vec<Document> = split.train.iter().map(|&i| docs[i].clone()).collect();
            let test: Vec<Document> = split.test.iter().map(|&i| docs[i].clone()).collect();
            let (trainer, vocab) = fit(&train, &cfg, embeddings, &mut |_| {})?;
            let (report, preds) = evaluate_corpus(&trainer.model, &vocab, &test, lexicon)?;
            let result = FoldResult {
                repeat,
                fold: split.fold_id,
                n_train: train.len(),
                n_test: test.len(),
                report,
                candidate_recall: preds.candidate_recall(),
            };
            progress(&result);
            folds.push(result);
        }
    }
    let reports: Vec<EvalReport> = folds.iter().map(|f| f.report).collect();
    let summary = aggregate_cv(&reports)?;
    Ok(CvResult { n_folds, repeats, folds, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "K")]
    K,
    #[serde(rename = "w")]
    W,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K => "K",
            SweepParam::W => "w",
        }
    }

    pub fn apply(self, config: &mut TrainConfig, value: usize) {
        match self {
            SweepParam::K => config.k = value,
            SweepParam::W => config.window = value,
        }
    }
}

/// `K=1..5`, `w=0..4` (inclusive ranges) or `K=1,3,5`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<usize>,
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, range) = s.split_once('=').ok_or_else(|| format!("expected NAME=RANGE, got {s:?}"))?;
        let param = match name.trim() {
            "K" | "k" => SweepParam::K,
            "w" | "W" => SweepParam::W,
            other => return Err(format!("unknown sweep parameter {other:?} (expected K or w)")),
        };
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad sweep value {t:?}"));
        let values = match range.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty sweep range {lo}..{hi}"));
                }
                (lo..=hi).collect()
            }
            None => range.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?,
        };
        if param == SweepParam::K && values.contains(&0) {
            return Err("K must be at least 1".into());
        }
        Ok(SweepSpec { param, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub mean: Scores,
    /// Present for cross-validated sweeps.
    pub std: Option<Scores>,
    pub runs: usize,
    pub candidate_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    /// `None` means each setting was trained and scored on the full corpus.
    pub n_folds: Option<usize>,
    pub rows: Vec<SweepRow>,
}

/// Retrains from scratch for every setting. With `n_folds`, each setting is
/// cross-validated; otherwise it is trained and scored on the whole corpus.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    docs: &[Document],
    lexicon: &Lexicon,
    base: &TrainConfig,
    spec: &SweepSpec,
    n_folds: Option<usize>,
    repeats: usize,
    embeddings: Option<&Embeddings>,
    progress: &mut dyn FnMut(&SweepRow),
) -> Result<SweepTable> {
    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let mut cfg = base.clone();
        spec.param.apply(&mut cfg, value);
        let row = match n_folds {
            Some(k) => {
                let cv = cross_validate(docs, lexicon, &cfg, k, repeats, embeddings, &mut |_| {})?;
                let recall = cv.folds.iter().map(|f| f.candidate_recall).sum::<f64>() / cv.folds.len() as f64;
                SweepRow {
                    value,
                    mean: cv.summary.mean,
                    std: Some(cv.summary.std),
                    runs: cv.summary.n_reports,
                    candidate_recall: recall,
                }
            }
            None => {
                let (trainer, vocab) = fit(docs, &cfg, embeddings, &mut |_| {})?;
                let (report, preds) = evaluate_corpus(&trainer.model, &vocab, docs, lexicon)?;
                SweepRow { value, mean: report.scores, std: None, runs: 1, candidate_recall: preds.candidate_recall() }
            }
        };
        progress(&row);
        rows.push(row);
    }
    Ok(SweepTable { param: spec.param, n_folds, rows })
}

/// Tab-separated table: one header line and one line per setting.
pub fn sweep_tsv(table: &SweepTable) -> String {
    let mut out = String::from(table.param.name());
    for name in Scores::NAMES {
        let _ = write!(out, "\t{name}_p\t{name}_r\t{name}_f1");
    }
    out.push_str("\tcandidate_recall\n");
    for row in &table.rows {
        let _ = write!(out, "{}", row.value);
        for b in row.mean.blocks() {
            let _ = write!(out, "\t{:.4}\t{:.4}\t{:.4}", b.precision, b.recall, b.f1);
        }
        let _ = writeln!(out, "\t{:.4}", row.candidate_recall);
    }
    out
}

/// Human-readable score block, `mean ± std` when a std is given.
pub fn format_scores(mean: &Scores, std: Option<&Scores>) -> String {
    let mut out = String::new();
    let stds = std.map(Scores::blocks);
    for (k, (name, b)) in Scores::NAMES.iter().zip(mean.blocks()).enumerate() {
        let _ = write!(out, "{name:<12}");
        for (label, m, s) in [
            ("P", b.precision, stds.map(|s| s[k].precision)),
            ("R", b.recall, stds.map(|s| s[k].recall)),
            ("F1", b.f1, stds.map(|s| s[k].f1)),
        ] {
            match s {
                Some(s) => {
                    let _ = write!(out, "  {label} {m:.4} ± {s:.4}");
                }
                None => {
                    let _ = write!(out, "  {label} {m:.4}");
                }
            }
        }
        out.push('\n');
    }
    out
}
