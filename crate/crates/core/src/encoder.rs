//! Hierarchical clause encoder: word embeddings, a word-level Bi-LSTM with
//! attention pooling per clause, and a clause-level Bi-LSTM over the pooled
//! clause states.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{EncodedDoc, PAD_ID};
use crate::error::{Error, Result};
use crate::layers::{dropout, BiLstm, Mode};
use crate::params::{ParamId, ParamStore, Tensor};
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttentionParams {
    pub w: ParamId,
    pub b: ParamId,
    pub u: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EncoderParams {
    pub embedding: ParamId,
    pub word: BiLstm,
    pub attention: AttentionParams,
    pub clause: BiLstm,
    pub embed_dim: usize,
    pub clause_dim: usize,
}

impl EncoderParams {
    /// Registers all encoder parameters. The embedding table starts uniform
    /// in `[-0.1, 0.1]` with a zero padding row; `clause_dim` must be even
    /// since it is split across the two directions.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        vocab_size: usize,
        embed_dim: usize,
        clause_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if clause_dim == 0 || !clause_dim.is_multiple_of(2) || embed_dim == 0 {
            return Err(Error::Argument(alloc::format!(
                "embed_dim {embed_dim} and clause_dim {clause_dim} must be positive, clause_dim even"
            )));
        }
        let hidden = clause_dim / 2;
        let mut table = Tensor::zeros(vocab_size, embed_dim);
        for r in 1..vocab_size {
            for v in table.row_mut(r) {
                *v = rng.gen_range(-0.1..=0.1);
            }
        }
        let embedding = store.add("encoder.embedding", table);
        let word = BiLstm::init(store, "encoder.word", embed_dim, hidden, rng);
        let attention = AttentionParams {
            w: store.add_uniform("encoder.attention.w", clause_dim, clause_dim, clause_dim, rng),
            b: store.add("encoder.attention.b", Tensor::zeros(clause_dim, 1)),
            u: store.add_uniform("encoder.attention.u", clause_dim, 1, clause_dim, rng),
        };
        let clause = BiLstm::init(store, "encoder.clause", clause_dim, hidden, rng);
        Ok(EncoderParams { embedding, word, attention, clause, embed_dim, clause_dim })
    }
}

/// Token ids laid out on a fixed `clauses × tokens` grid. Real clauses form
/// a prefix; a clause length of 0 marks a padded clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedDoc {
    pub ids: Vec<u32>,
    pub clause_lens: Vec<usize>,
    pub max_tokens: usize,
}

impl PaddedDoc {
    pub fn new(doc: &EncodedDoc, n_clauses: usize, max_tokens: usize) -> Result<Self> {
        if doc.len() > n_clauses || doc.clauses.iter().any(|c| c.len() > max_tokens) {
            return Err(Error::Argument(alloc::format!(
                "document does not fit a {n_clauses}x{max_tokens} grid"
            )));
        }
        let mut ids = vec![PAD_ID; n_clauses * max_tokens];
        let mut clause_lens = vec![0; n_clauses];
        for (c, clause) in doc.clauses.iter().enumerate() {
            ids[c * max_tokens..c * max_tokens + clause.len()].copy_from_slice(clause);
            clause_lens[c] = clause.len();
        }
        Ok(PaddedDoc { ids, clause_lens, max_tokens })
    }

    /// Tightest grid for a single document.
    pub fn unpadded(doc: &EncodedDoc) -> Self {
        let max_tokens = doc.clauses.iter().map(Vec::len).max().unwrap_or(0);
        Self::new(doc, doc.len(), max_tokens).expect("tight grid always fits")
    }

    pub fn n_slots(&self) -> usize {
        self.clause_lens.len()
    }

    pub fn n_real(&self) -> usize {
        self.clause_lens.iter().take_while(|&&l| l > 0).count()
    }

    pub fn token_mask(&self, clause: usize) -> Vec<bool> {
        (0..self.max_tokens).map(|t| t < self.clause_lens[clause]).collect()
    }

    pub fn clause_mask(&self) -> Vec<bool> {
        self.clause_lens.iter().map(|&l| l > 0).collect()
    }

    fn clause_ids(&self, clause: usize) -> &[u32] {
        &self.ids[clause * self.max_tokens..(clause + 1) * self.max_tokens]
    }
}

/// Pads every document of a batch to the batch's largest grid.
pub fn pad_batch(docs: &[&EncodedDoc]) -> Vec<PaddedDoc> {
    let n_clauses = docs.iter().map(|d| d.len()).max().unwrap_or(0);
    let max_tokens = docs.iter().flat_map(|d| &d.clauses).map(Vec::len).max().unwrap_or(0);
    docs.iter()
        .map(|d| PaddedDoc::new(d, n_clauses, max_tokens).expect("batch grid fits its documents"))
        .collect()
}

/// Tape handles for every intermediate of one document's encoding.
#[derive(Debug, Clone)]
pub struct ClauseVars {
    pub word_hidden: Vec<Vec<Var>>,
    pub word_attention: Vec<Option<Var>>,
    pub pooled: Vec<Var>,
    pub repr: Vec<Var>,
    pub n_real: usize,
}

/// Concrete values of an encoding pass; padded rows are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseStates {
    /// Per clause slot, `max_tokens` rows of `clause_dim` word states.
    pub word_hidden: Vec<Vec<Vec<f64>>>,
    /// Per clause slot, attention weights over token slots.
    pub word_attention: Vec<Vec<f64>>,
    pub clause_pooled: Vec<Vec<f64>>,
    pub clause_repr: Vec<Vec<f64>>,
    pub clause_mask: Vec<bool>,
    pub token_masks: Vec<Vec<bool>>,
}

impl ClauseStates {
    pub fn read(tape: &Tape<'_>, vars: &ClauseVars, doc: &PaddedDoc) -> Self {
        let rows = |vs: &[Var]| vs.iter().map(|v| tape.value(*v).to_vec()).collect::<Vec<_>>();
        ClauseStates {
            word_hidden: vars.word_hidden.iter().map(|c| rows(c)).collect(),
            word_attention: vars
                .word_attention
                .iter()
                .map(|a| match a {
                    Some(v) => tape.value(*v).to_vec(),
                    None => vec![0.0; doc.max_tokens],
                })
                .collect(),
            clause_pooled: rows(&vars.pooled),
            clause_repr: rows(&vars.repr),
            clause_mask: doc.clause_mask(),
            token_masks: (0..doc.n_slots()).map(|c| doc.token_mask(c)).collect(),
        }
    }
}

/// Embedding lookup for one clause slot; padded positions map to `zero`.
pub fn embed(
    tape: &mut Tape<'_>,
    enc: &EncoderParams,
    doc: &PaddedDoc,
    clause: usize,
    zero: Var,
    rate: f64,
    mode: &mut Mode<'_>,
) -> Result<Vec<Var>> {
    let vocab = tape.params().get(enc.embedding).rows;
    let len = doc.clause_lens[clause];
    let mut out = Vec::with_capacity(doc.max_tokens);
    for (t, &id) in doc.clause_ids(clause).iter().enumerate() {
        if id as usize >= vocab {
            return Err(Error::Index { what: "token id", index: id as usize, len: vocab });
        }
        if t >= len || id == PAD_ID {
            out.push(zero);
            continue;
        }
        let row = tape.row(enc.embedding, id as usize);
        out.push(dropout(tape, row, rate, mode));
    }
    Ok(out)
}

/// Word-level Bi-LSTM over the real tokens of a clause slot.
pub fn word_encode(
    tape: &mut Tape<'_>,
    enc: &EncoderParams,
    embedded: &[Var],
    len: usize,
    zero: Var,
    rate: f64,
    mode: &mut Mode<'_>,
) -> Vec<Var> {
    let hidden = enc.word.run(tape, embedded, len, zero);
    hidden
        .into_iter()
        .enumerate()
        .map(|(t, h)| if t < len { dropout(tape, h, rate, mode) } else { h })
        .collect()
}

/// Attention pooling: `α = softmax_j(tanh(W h_j + b)·u)` over unmasked `j`,
/// returning `(Σ_j α_j h_j, α)`.
pub fn word_attend(
    tape: &mut Tape<'_>,
    attn: &AttentionParams,
    hidden: &[Var],
    mask: &[bool],
) -> Result<(Var, Var)> {
    if !mask.iter().any(|&m| m) {
        return Err(Error::Contract("word attention over a fully masked clause"));
    }
    let u = tape.param(attn.u);
    let mut scores = Vec::with_capacity(hidden.len());
    let mut masked_score = None;
    for (&h, &real) in hidden.iter().zip(mask) {
        if real {
            let pre = tape.affine(attn.w, attn.b, h);
            let act = tape.tanh(pre);
            scores.push(tape.dot(act, u));
        } else {
            let s = *masked_score.get_or_insert_with(|| tape.constant(vec![0.0]));
            scores.push(s);
        }
    }
    let stacked = tape.stack(&scores);
    let alpha = tape.softmax(stacked, mask.to_vec());
    let pooled = tape.weighted_sum(alpha, hidden);
    Ok((pooled, alpha))
}

/// Clause-level Bi-LSTM over pooled clause states; padded rows stay zero.
pub fn clause_encode(
    tape: &mut Tape<'_>,
    enc: &EncoderParams,
    pooled: &[Var],
    mask: &[bool],
    zero: Var,
    rate: f64,
    mode: &mut Mode<'_>,
) -> Vec<Var> {
    let len = mask.iter().take_while(|&&m| m).count();
    let out = enc.clause.run(tape, pooled, len, zero);
    out.into_iter()
        .enumerate()
        .map(|(i, r)| if i < len { dropout(tape, r, rate, mode) } else { r })
        .collect()
}

/// Dropout rates for the three encoder stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderDropout {
    pub embedding: f64,
    pub word: f64,
    pub clause: f64,
}

/// Full hierarchical encoding of one (possibly padded) document.
pub fn encode_document(
    tape: &mut Tape<'_>,
    enc: &EncoderParams,
    doc: &PaddedDoc,
    rates: EncoderDropout,
    mode: &mut Mode<'_>,
) -> Result<ClauseVars> {
    let n_real = doc.n_real();
    if n_real == 0 {
        return Err(Error::Contract("document has no real clauses"));
    }
    let zero_word = tape.constant(vec![0.0; enc.embed_dim]);
    let zero_hidden = tape.constant(vec![0.0; enc.clause_dim]);
    let mut word_hidden = Vec::with_capacity(doc.n_slots());
    let mut word_attention = Vec::with_capacity(doc.n_slots());
    let mut pooled = Vec::with_capacity(doc.n_slots());
    for c in 0..doc.n_slots() {
        let len = doc.clause_lens[c];
        if len == 0 {
            word_hidden.push(vec![zero_hidden; doc.max_tokens]);
            word_attention.push(None);
            pooled.push(zero_hidden);
            continue;
        }
        let embedded = embed(tape, enc, doc, c, zero_word, rates.embedding, mode)?;
        let hidden = word_encode(tape, enc, &embedded, len, zero_hidden, rates.word, mode);
        let (h, alpha) = word_attend(tape, &enc.attention, &hidden, &doc.token_mask(c))?;
        word_hidden.push(hidden);
        word_attention.push(Some(alpha));
        pooled.push(h);
    }
    let repr = clause_encode(tape, enc, &pooled, &doc.clause_mask(), zero_hidden, rates.clause, mode);
    Ok(ClauseVars { word_hidden, word_attention, pooled, repr, n_real })
}
