//! Corpus-level evaluation of a trained model.

use alloc::vec::Vec;

use crate::corpus::{Document, Lexicon, Vocabulary};
use crate::error::Result;
use crate::extractor::{extract, scored_pairs, Prediction};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{evaluate_document, EpoModel};

/// Predictions for every document plus the emotion candidate sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusPredictions {
    pub predictions: Vec<Prediction>,
    /// Gold emotion clauses that made it into the candidate set.
    pub candidate_hits: usize,
    pub gold_emotions: usize,
}

impl CorpusPredictions {
    /// Fraction of gold emotion clauses inside their document's candidate set.
    pub fn candidate_recall(&self) -> f64 {
        if self.gold_emotions == 0 {
            0.0
        } else {
            self.candidate_hits as f64 / self.gold_emotions as f64
        }
    }
}

pub fn predict_corpus(
    model: &EpoModel,
    vocab: &Vocabulary,
    docs: &[Document],
    lexicon: &Lexicon,
) -> Result<CorpusPredictions> {
    let mut predictions = Vec::with_capacity(docs.len());
    let (mut hits, mut total) = (0, 0);
    for doc in docs {
        let out = evaluate_document(model, &vocab.encode(doc))?;
        for e in doc.emotion_clauses() {
            total += 1;
            hits += usize::from(out.candidates.contains(e));
        }
        predictions.push(extract(doc, &scored_pairs(&out.pairs), lexicon));
    }
    Ok(CorpusPredictions { predictions, candidate_hits: hits, gold_emotions: total })
}

/// Predicts every document and scores the result against its gold pairs.
pub fn evaluate_corpus(
    model: &EpoModel,
    vocab: &Vocabulary,
    docs: &[Document],
    lexicon: &Lexicon,
) -> Result<(EvalReport, CorpusPredictions)> {
    let preds = predict_corpus(model, vocab, docs, lexicon)?;
    let gold: Vec<_> = docs.iter().map(|d| &d.gold_pairs).collect();
    let pred: Vec<_> = preds.predictions.iter().map(|p| &p.pairs).collect();
    Ok((evaluate(&gold, &pred)?, preds))
}
