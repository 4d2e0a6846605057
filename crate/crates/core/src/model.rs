//! The full model: parameters plus the per-document forward pass
//! encode → project → emotion probabilities → top-K → pairs → losses.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EncodedDoc, Pair};
use crate::emotion_head::{emotion_prob, project, select_candidates, CandidateSet, HeadParams};
use crate::encoder::{encode_document, ClauseStates, ClauseVars, EncoderDropout, EncoderParams, PaddedDoc};
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::objectives::{bce_sum, LossBreakdown, LossMask, Phase};
use crate::pairing::{
    enumerate_pairs, fake_represent, fake_score, genuine_represent, genuine_score, FakePair,
    GenuinePair, PairBatch, PairParams,
};
use crate::params::{ParamStore, Tensor};
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DropoutRates {
    pub embedding: f64,
    pub word: f64,
    pub clause: f64,
    pub prediction: f64,
}

impl Default for DropoutRates {
    fn default() -> Self {
        DropoutRates { embedding: 0.1, word: 0.5, clause: 0.1, prediction: 0.1 }
    }
}

impl DropoutRates {
    pub const NONE: DropoutRates = DropoutRates { embedding: 0.0, word: 0.0, clause: 0.0, prediction: 0.0 };

    fn encoder(&self) -> EncoderDropout {
        EncoderDropout { embedding: self.embedding, word: self.word, clause: self.clause }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Clause representation size; each Bi-LSTM direction gets half.
    pub clause_dim: usize,
    /// Size of the emotion candidate set.
    pub k: usize,
    /// Context window radius `|w|`.
    pub window: usize,
    pub dropout: DropoutRates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpoModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub encoder: EncoderParams,
    pub head: HeadParams,
    pub pair: PairParams,
}

impl EpoModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::Argument("k must be at least 1".into()));
        }
        if config.vocab_size < 2 {
            return Err(Error::Argument("vocabulary needs the padding and unknown rows".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder =
            EncoderParams::init(&mut store, config.vocab_size, config.embed_dim, config.clause_dim, &mut rng)?;
        let head = HeadParams::init(&mut store, config.clause_dim, &mut rng);
        let pair = PairParams::init(&mut store, config.clause_dim, &mut rng);
        Ok(EpoModel { config, store, encoder, head, pair })
    }

    /// Replaces the embedding table, e.g. with pretrained vectors.
    pub fn set_embeddings(&mut self, table: Tensor) -> Result<()> {
        let cur = self.store.get(self.encoder.embedding);
        if (table.rows, table.cols) != (cur.rows, cur.cols) {
            return Err(Error::Argument(alloc::format!(
                "embedding table is {}x{}, model expects {}x{}",
                table.rows,
                table.cols,
                cur.rows,
                cur.cols
            )));
        }
        *self.store.get_mut(self.encoder.embedding) = table;
        Ok(())
    }

    /// Names of the genuine-scorer parameter groups.
    pub fn genuine_scorer_ids(&self) -> [crate::params::ParamId; 2] {
        [self.pair.genuine.w, self.pair.genuine.b]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenuineNode {
    pub pair: Pair,
    pub beta: Var,
    pub beta_slot: usize,
    pub rep: Var,
    pub score: Var,
    pub label: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FakeNode {
    pub pair: Pair,
    pub rep: Var,
    pub score: Var,
    pub label: f64,
}

/// Tape handles for one document's forward pass.
#[derive(Debug, Clone)]
pub struct DocGraph {
    pub clauses: ClauseVars,
    pub emotion_probs: Vec<Var>,
    pub candidates: CandidateSet,
    /// Empty when the genuine branch was not built (pre-training).
    pub genuine: Vec<GenuineNode>,
    pub fake: Vec<FakeNode>,
    pub l_e: Var,
    pub l_gp: Option<Var>,
    pub l_fp: Var,
    pub total: Var,
}

impl DocGraph {
    pub fn breakdown(&self, tape: &Tape<'_>) -> LossBreakdown {
        LossBreakdown {
            l_e: tape.scalar(self.l_e),
            l_gp: self.l_gp.map_or(0.0, |v| tape.scalar(v)),
            l_fp: tape.scalar(self.l_fp),
            total: tape.scalar(self.total),
        }
    }

    pub fn pairs(&self, tape: &Tape<'_>) -> PairBatch {
        PairBatch {
            genuine: self
                .genuine
                .iter()
                .map(|g| GenuinePair {
                    emotion: g.pair.0,
                    cause: g.pair.1,
                    rep: tape.value(g.rep).to_vec(),
                    beta: tape.value(g.beta)[g.beta_slot],
                    score: tape.scalar(g.score),
                    label: g.label,
                })
                .collect(),
            fake: self
                .fake
                .iter()
                .map(|f| FakePair {
                    emotion: f.pair.0,
                    cause: f.pair.1,
                    rep: tape.value(f.rep).to_vec(),
                    score: tape.scalar(f.score),
                    label: f.label,
                })
                .collect(),
        }
    }

    pub fn emotion_probs(&self, tape: &Tape<'_>) -> Vec<f64> {
        self.emotion_probs.iter().map(|&p| tape.scalar(p)).collect()
    }
}

/// What the forward pass should build and which terms enter `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardSpec {
    pub phase: Phase,
    pub mask: LossMask,
    /// Build the genuine branch even when it is not part of the objective.
    pub score_genuine: bool,
}

impl ForwardSpec {
    pub fn training(phase: Phase, mask: LossMask) -> Self {
        ForwardSpec { phase, mask, score_genuine: mask.uses_genuine(phase) }
    }

    /// Everything built, training-phase objective.
    pub fn full() -> Self {
        ForwardSpec { phase: Phase::Train, mask: LossMask::ALL, score_genuine: true }
    }
}

/// Builds the forward graph of one document onto `tape`.
pub fn forward_document(
    tape: &mut Tape<'_>,
    model: &EpoModel,
    doc: &PaddedDoc,
    gold: &BTreeSet<Pair>,
    spec: ForwardSpec,
    mode: &mut Mode<'_>,
) -> Result<DocGraph> {
    let cfg = &model.config;
    let clauses = encode_document(tape, &model.encoder, doc, cfg.dropout.encoder(), mode)?;
    let n = clauses.n_real;
    let repr = &clauses.repr[..n];
    let (re, rc) = project(tape, &model.head, repr);
    let emotion_probs = emotion_prob(tape, &model.head, &re, cfg.dropout.prediction, mode);

    let probs: Vec<f64> = emotion_probs.iter().map(|&p| tape.scalar(p)).collect();
    let candidates = select_candidates(&probs, cfg.k);
    let (genuine_idx, fake_idx) = enumerate_pairs(&candidates, n, cfg.window);

    let mut genuine = Vec::new();
    if spec.score_genuine {
        for &i in &candidates.indices {
            let inside: Vec<usize> = genuine_idx.iter().filter(|p| p.0 == i).map(|p| p.1).collect();
            let (beta, reps) = genuine_represent(tape, i, &inside, &re, &rc);
            for (slot, (&j, rep)) in inside.iter().zip(reps).enumerate() {
                let score = genuine_score(tape, &model.pair, rep, cfg.dropout.prediction, mode);
                let label = f64::from(u8::from(gold.contains(&(i, j))));
                genuine.push(GenuineNode { pair: (i, j), beta, beta_slot: slot, rep, score, label });
            }
        }
    }
    let fake: Vec<FakeNode> = fake_idx
        .iter()
        .map(|&(i, k)| {
            let rep = fake_represent(tape, i, k, &re, &rc);
            let score = fake_score(tape, &model.pair, rep, cfg.dropout.prediction, mode);
            FakeNode { pair: (i, k), rep, score, label: f64::from(u8::from(gold.contains(&(i, k)))) }
        })
        .collect();

    let mut y_e = alloc::vec![0.0; n];
    for &(e, _) in gold {
        if e <= n {
            y_e[e - 1] = 1.0;
        }
    }
    let l_e = bce_sum(tape, &emotion_probs, &y_e);
    let l_gp = spec.score_genuine.then(|| {
        let probs: Vec<Var> = genuine.iter().map(|g| g.score).collect();
        let labels: Vec<f64> = genuine.iter().map(|g| g.label).collect();
        bce_sum(tape, &probs, &labels)
    });
    let fake_probs: Vec<Var> = fake.iter().map(|f| f.score).collect();
    let fake_labels: Vec<f64> = fake.iter().map(|f| f.label).collect();
    let l_fp = bce_sum(tape, &fake_probs, &fake_labels);

    let mut terms = Vec::with_capacity(3);
    if spec.mask.emotion {
        terms.push(l_e);
    }
    if spec.mask.uses_genuine(spec.phase) {
        terms.push(l_gp.ok_or(Error::Contract("genuine loss requested without genuine scoring"))?);
    }
    if spec.mask.fake {
        terms.push(l_fp);
    }
    let total = tape.sum(&terms);

    Ok(DocGraph { clauses, emotion_probs, candidates, genuine, fake, l_e, l_gp, l_fp, total })
}

/// Values of one evaluation-mode pass over a document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocOutput {
    pub states: ClauseStates,
    pub emotion_probs: Vec<f64>,
    pub candidates: CandidateSet,
    pub pairs: PairBatch,
    pub losses: LossBreakdown,
}

/// Dropout-free pass with every branch built.
pub fn evaluate_document(model: &EpoModel, doc: &EncodedDoc) -> Result<DocOutput> {
    let padded = PaddedDoc::unpadded(doc);
    let mut tape = Tape::new(&model.store);
    let g = forward_document(&mut tape, model, &padded, &doc.gold_pairs, ForwardSpec::full(), &mut Mode::Eval)?;
    Ok(DocOutput {
        states: ClauseStates::read(&tape, &g.clauses, &padded),
        emotion_probs: g.emotion_probs(&tape),
        candidates: g.candidates.clone(),
        pairs: g.pairs(&tape),
        losses: g.breakdown(&tape),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::pad_batch;
    use alloc::vec;

    fn tiny() -> EpoModel {
        let cfg = ModelConfig {
            vocab_size: 10,
            embed_dim: 6,
            clause_dim: 8,
            k: 2,
            window: 1,
            dropout: DropoutRates::default(),
        };
        EpoModel::new(cfg, 3).unwrap()
    }

    fn doc() -> EncodedDoc {
        EncodedDoc {
            clauses: vec![vec![2, 3], vec![4, 5, 6], vec![7], vec![8, 9, 2]],
            gold_pairs: [(2, 1), (2, 2)].into_iter().collect(),
        }
    }

    #[test]
    fn evaluation_output_is_consistent() {
        let m = tiny();
        let out = evaluate_document(&m, &doc()).unwrap();
        assert_eq!(out.candidates.len(), 2);
        let n = 4;
        assert_eq!(out.pairs.genuine.len() + out.pairs.fake.len(), out.candidates.len() * n);
        for &i in &out.candidates.indices {
            let s: f64 = out.pairs.genuine.iter().filter(|g| g.emotion == i).map(|g| g.beta).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        for g in &out.pairs.genuine {
            assert_eq!(g.label == 1.0, doc().gold_pairs.contains(&(g.emotion, g.cause)));
            assert!(g.emotion.abs_diff(g.cause) <= 1);
        }
        let l = out.losses;
        assert_eq!(l.total, l.l_e + l.l_gp + l.l_fp);
    }

    #[test]
    fn batched_loss_equals_unbatched() {
        let m = tiny();
        let a = doc();
        let b = EncodedDoc { clauses: vec![vec![3], vec![4, 4, 4, 4, 4]], gold_pairs: [(1, 2)].into_iter().collect() };
        let separate = evaluate_document(&m, &a).unwrap().losses.total + evaluate_document(&m, &b).unwrap().losses.total;
        let batch = pad_batch(&[&a, &b]);
        let mut tape = Tape::new(&m.store);
        let mut totals = vec![];
        for (p, d) in batch.iter().zip([&a, &b]) {
            let g = forward_document(&mut tape, &m, p, &d.gold_pairs, ForwardSpec::full(), &mut Mode::Eval).unwrap();
            totals.push(g.total);
        }
        let sum = tape.sum(&totals);
        assert!((tape.scalar(sum) - separate).abs() < 1e-6);
    }

    #[test]
    fn pretraining_skips_genuine_branch() {
        let m = tiny();
        let d = doc();
        let p = PaddedDoc::unpadded(&d);
        let mut tape = Tape::new(&m.store);
        let spec = ForwardSpec::training(Phase::Pretrain, LossMask::ALL);
        let g = forward_document(&mut tape, &m, &p, &d.gold_pairs, spec, &mut Mode::Eval).unwrap();
        assert!(g.genuine.is_empty() && g.l_gp.is_none());
        let b = g.breakdown(&tape);
        assert_eq!(b.total, b.l_e + b.l_fp);
        let grads = tape.backward(g.total);
        for id in m.genuine_scorer_ids() {
            assert!(!grads.is_touched(id));
        }
    }
}
