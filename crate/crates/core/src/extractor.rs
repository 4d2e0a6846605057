//! Prediction-time pair extraction from the genuine pairs.
//!
//! A genuine pair `(i, j)` is kept iff clause `i` contains a lexicon word
//! and either its score exceeds 0.5 or it is the document's single
//! highest-scoring genuine pair.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Clause, Document, Lexicon, Pair, Vocabulary};
use crate::error::Result;
use crate::model::{evaluate_document, EpoModel};
use crate::pairing::PairBatch;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredPair {
    pub emotion_index: usize,
    pub cause_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub doc_id: String,
    pub pairs: BTreeSet<Pair>,
}

pub fn contains_sentiment_word(clause: &Clause, lexicon: &Lexicon) -> bool {
    clause.tokens.iter().any(|t| lexicon.contains(t))
}

/// Genuine pairs of a scored batch, in enumeration order.
pub fn scored_pairs(pairs: &PairBatch) -> Vec<ScoredPair> {
    pairs
        .genuine
        .iter()
        .map(|g| ScoredPair { emotion_index: g.emotion, cause_index: g.cause, score: g.score })
        .collect()
}

pub fn extract(doc: &Document, scored: &[ScoredPair], lexicon: &Lexicon) -> Prediction {
    // Overlapping windows can score the same (i, j) under several candidates.
    let mut merged: BTreeMap<Pair, f64> = BTreeMap::new();
    for s in scored {
        let e = merged.entry((s.emotion_index, s.cause_index)).or_insert(f64::NEG_INFINITY);
        *e = e.max(s.score);
    }
    // BTreeMap iterates in (i, j) order, so strict `>` keeps the
    // lexicographically first pair among equal top scores.
    let mut top: Option<(Pair, f64)> = None;
    for (&pair, &score) in &merged {
        if top.is_none_or(|(_, best)| score > best) {
            top = Some((pair, score));
        }
    }
    let top = top.map(|(p, _)| p);
    let pairs = merged
        .iter()
        .filter(|(&(i, _), _)| contains_sentiment_word(doc.clause(i), lexicon))
        .filter(|(&pair, &score)| score > 0.5 || Some(pair) == top)
        .map(|(&pair, _)| pair)
        .collect();
    Prediction { doc_id: doc.doc_id.clone(), pairs }
}

/// Evaluation-mode pass followed by [`extract`].
pub fn predict(model: &EpoModel, vocab: &Vocabulary, doc: &Document, lexicon: &Lexicon) -> Result<Prediction> {
    let out = evaluate_document(model, &vocab.encode(doc))?;
    Ok(extract(doc, &scored_pairs(&out.pairs), lexicon))
}
