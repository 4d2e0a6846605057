//! Emotion/context projections, per-clause emotion probabilities and the
//! top-K emotion candidate set.

use alloc::vec::Vec;

use rand::Rng;

use crate::layers::{dropout, Linear, LogisticScorer, Mode};
use crate::params::ParamStore;
use crate::tape::{Tape, Var};

/// The emotion projection and the emotion scorer are separate parameter
/// groups even though both feed the emotion probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeadParams {
    pub emotion_proj: Linear,
    pub context_proj: Linear,
    pub emotion_score: LogisticScorer,
}

impl HeadParams {
    pub fn init<R: Rng + ?Sized>(store: &mut ParamStore, clause_dim: usize, rng: &mut R) -> Self {
        HeadParams {
            emotion_proj: Linear::init(store, "head.emotion_proj", clause_dim, clause_dim, rng),
            context_proj: Linear::init(store, "head.context_proj", clause_dim, clause_dim, rng),
            emotion_score: LogisticScorer::init(store, "head.emotion_score", clause_dim, rng),
        }
    }
}

/// Emotion-specific and context-specific views of each clause representation.
pub fn project(tape: &mut Tape<'_>, head: &HeadParams, repr: &[Var]) -> (Vec<Var>, Vec<Var>) {
    let re = repr.iter().map(|&r| head.emotion_proj.apply(tape, r)).collect();
    let rc = repr.iter().map(|&r| head.context_proj.apply(tape, r)).collect();
    (re, rc)
}

/// Per-clause probability of being an emotion clause.
pub fn emotion_prob(
    tape: &mut Tape<'_>,
    head: &HeadParams,
    re: &[Var],
    rate: f64,
    mode: &mut Mode<'_>,
) -> Vec<Var> {
    re.iter()
        .map(|&r| {
            let x = dropout(tape, r, rate, mode);
            head.emotion_score.score(tape, x)
        })
        .collect()
}

/// Top-K emotion clauses, most probable first.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateSet {
    /// 1-based clause indices.
    pub indices: Vec<usize>,
    pub probs: Vec<f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, clause: usize) -> bool {
        self.indices.contains(&clause)
    }
}

/// Picks the `min(k, probs.len())` most probable clauses, ties going to the
/// lower clause index. This is a hard selection: callers only ever read the
/// returned indices, never differentiate through them.
pub fn select_candidates(probs: &[f64], k: usize) -> CandidateSet {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order.truncate(k.min(probs.len()));
    CandidateSet {
        indices: order.iter().map(|&i| i + 1).collect(),
        probs: order.iter().map(|&i| probs[i]).collect(),
    }
}
