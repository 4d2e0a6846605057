//! Context windows around candidate emotion clauses, genuine and fake pair
//! enumeration, pair representations and pair scores.
//!
//! For a candidate `i`, genuine pairs join `i` with every clause of its
//! window `IW_i = [i-w, i+w] ∩ [1, |d|]`; fake pairs join it with the rest of
//! the document. A genuine pair is represented by the context view of the
//! cause scaled by its attention weight `β_ij`, where `β_i·` is a softmax of
//! `r^c_j · r^e_i` across the window. A fake pair is the concatenation
//! `[r^e_i ; r^c_k]`.

use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Pair;
use crate::emotion_head::CandidateSet;
use crate::error::{Error, Result};
use crate::layers::{dropout, LogisticScorer, Mode};
use crate::params::ParamStore;
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPartition {
    pub center: usize,
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
}

pub fn build_window(center: usize, d_len: usize, w: usize) -> Result<WindowPartition> {
    if center == 0 || center > d_len {
        return Err(Error::Argument(alloc::format!("clause {center} outside 1..={d_len}")));
    }
    let lo = center.saturating_sub(w).max(1);
    let hi = (center + w).min(d_len);
    Ok(WindowPartition {
        center,
        inside: (lo..=hi).collect(),
        outside: (1..lo).chain(hi + 1..=d_len).collect(),
    })
}

/// Genuine and fake index pairs, ordered by candidate rank then by clause.
pub fn enumerate_pairs(ce: &CandidateSet, d_len: usize, w: usize) -> (Vec<Pair>, Vec<Pair>) {
    let mut genuine = Vec::new();
    let mut fake = Vec::new();
    for &i in &ce.indices {
        let win = build_window(i, d_len, w).expect("candidates lie inside the document");
        genuine.extend(win.inside.iter().map(|&j| (i, j)));
        fake.extend(win.outside.iter().map(|&k| (i, k)));
    }
    (genuine, fake)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairParams {
    pub genuine: LogisticScorer,
    pub fake: LogisticScorer,
}

impl PairParams {
    pub fn init<R: Rng + ?Sized>(store: &mut ParamStore, clause_dim: usize, rng: &mut R) -> Self {
        PairParams {
            genuine: LogisticScorer::init(store, "pair.genuine", clause_dim, rng),
            fake: LogisticScorer::init(store, "pair.fake", 2 * clause_dim, rng),
        }
    }
}

/// Relevance weights `β_i·` over `inside` and the pair representations
/// `β_ij · r^c_j`. `re`/`rc` are indexed by 0-based clause position.
pub fn genuine_represent(
    tape: &mut Tape<'_>,
    i: usize,
    inside: &[usize],
    re: &[Var],
    rc: &[Var],
) -> (Var, Vec<Var>) {
    let scores: Vec<Var> = inside.iter().map(|&j| tape.dot(rc[j - 1], re[i - 1])).collect();
    let stacked = tape.stack(&scores);
    let beta = tape.softmax(stacked, alloc::vec![true; inside.len()]);
    let reps = inside
        .iter()
        .enumerate()
        .map(|(slot, &j)| {
            let b = tape.slice(beta, slot, 1);
            tape.scale(b, rc[j - 1])
        })
        .collect();
    (beta, reps)
}

pub fn genuine_score(
    tape: &mut Tape<'_>,
    params: &PairParams,
    rep: Var,
    rate: f64,
    mode: &mut Mode<'_>,
) -> Var {
    let x = dropout(tape, rep, rate, mode);
    params.genuine.score(tape, x)
}

pub fn fake_represent(tape: &mut Tape<'_>, i: usize, k: usize, re: &[Var], rc: &[Var]) -> Var {
    tape.concat(&[re[i - 1], rc[k - 1]])
}

pub fn fake_score(
    tape: &mut Tape<'_>,
    params: &PairParams,
    rep: Var,
    rate: f64,
    mode: &mut Mode<'_>,
) -> Var {
    let x = dropout(tape, rep, rate, mode);
    params.fake.score(tape, x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenuinePair {
    pub emotion: usize,
    pub cause: usize,
    pub rep: Vec<f64>,
    pub beta: f64,
    pub score: f64,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FakePair {
    pub emotion: usize,
    pub cause: usize,
    pub rep: Vec<f64>,
    pub score: f64,
    pub label: f64,
}

/// Scored genuine and fake pairs of one document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairBatch {
    pub genuine: Vec<GenuinePair>,
    pub fake: Vec<FakePair>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Tensor;
    use alloc::vec;
    use proptest::prelude::*;

    fn ce(indices: &[usize]) -> CandidateSet {
        CandidateSet { indices: indices.to_vec(), probs: vec![0.5; indices.len()] }
    }

    #[test]
    fn window_examples() {
        let w = build_window(3, 7, 2).unwrap();
        assert_eq!((w.inside, w.outside), (vec![1, 2, 3, 4, 5], vec![6, 7]));
        let w = build_window(1, 7, 2).unwrap();
        assert_eq!((w.inside, w.outside), (vec![1, 2, 3], vec![4, 5, 6, 7]));
        let w = build_window(7, 7, 2).unwrap();
        assert_eq!((w.inside, w.outside), (vec![5, 6, 7], vec![1, 2, 3, 4]));
        assert!(build_window(0, 7, 2).is_err());
        assert!(build_window(8, 7, 2).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let (g, f) = enumerate_pairs(&ce(&[3]), 7, 2);
        assert_eq!(g, vec![(3, 1), (3, 2), (3, 3), (3, 4), (3, 5)]);
        assert_eq!(f, vec![(3, 6), (3, 7)]);

        let (g, f) = enumerate_pairs(&ce(&[3, 5]), 7, 2);
        assert_eq!(g.len(), 10);
        assert_eq!(f, vec![(3, 6), (3, 7), (5, 1), (5, 2)]);
        assert!(g.contains(&(3, 4)) && g.contains(&(5, 4)));

        let (g, f) = enumerate_pairs(&ce(&[1]), 2, 2);
        assert_eq!(g, vec![(1, 1), (1, 2)]);
        assert!(f.is_empty());
    }

    #[test]
    fn genuine_representation_cases() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store);
        let a = t.constant(vec![1.0, 2.0]);
        let b = t.constant(vec![2.0, 1.0]);
        let e = t.constant(vec![1.0, 1.0]);
        let z = t.constant(vec![0.0, 0.0]);

        let (beta, reps) = genuine_represent(&mut t, 1, &[1], &[e], &[a]);
        assert_eq!(t.value(beta), &[1.0]);
        assert_eq!(t.value(reps[0]), &[1.0, 2.0]);

        // equal dot products against e
        let (beta, _) = genuine_represent(&mut t, 1, &[1, 2], &[e, e], &[a, b]);
        assert_eq!(t.value(beta), &[0.5, 0.5]);

        let (beta, reps) = genuine_represent(&mut t, 2, &[1, 2, 3], &[a, z, b], &[a, b, e]);
        for v in t.value(beta) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((t.value(reps[2])[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fake_representation_and_scores() {
        let mut store = ParamStore::new();
        let params = PairParams {
            genuine: LogisticScorer {
                w: store.add("gw", Tensor::zeros(1, 2)),
                b: store.add("gb", Tensor::from_vec(1, 1, vec![0.7]).unwrap()),
            },
            fake: LogisticScorer {
                w: store.add("fw", Tensor::zeros(1, 4)),
                b: store.add("fb", Tensor::zeros(1, 1)),
            },
        };
        let mut t = Tape::new(&store);
        let z = t.constant(vec![0.0, 0.0]);
        let a = t.constant(vec![1.0, 2.0]);
        let p = fake_represent(&mut t, 1, 2, &[z, a], &[z, a]);
        assert_eq!(t.value(p), &[0.0, 0.0, 1.0, 2.0]);
        let swapped = fake_represent(&mut t, 2, 1, &[z, a], &[z, a]);
        assert_ne!(t.value(p), t.value(swapped));
        let s = fake_score(&mut t, &params, p, 0.1, &mut Mode::Eval);
        assert_eq!(t.scalar(s), 0.5);
        let g = genuine_score(&mut t, &params, z, 0.1, &mut Mode::Eval);
        assert!((t.scalar(g) - crate::math::sigmoid(0.7)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn window_partitions_document(d in 1usize..=50, w in 0usize..=5, seed in 0usize..1000) {
            let i = seed % d + 1;
            let win = build_window(i, d, w).unwrap();
            let mut all: Vec<usize> = win.inside.iter().chain(&win.outside).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (1..=d).collect::<Vec<_>>());
            prop_assert!(win.inside.contains(&i));
        }

        #[test]
        fn pair_counts_cover_document(d in 1usize..=30, w in 0usize..=4, k in 1usize..=5, seed in 0u64..1000) {
            let probs: Vec<f64> = (0..d).map(|j| ((j as u64 * 7919 + seed * 104729) % 1000) as f64 / 1000.0).collect();
            let cands = crate::emotion_head::select_candidates(&probs, k);
            let (g, f) = enumerate_pairs(&cands, d, w);
            prop_assert_eq!(g.len() + f.len(), cands.len() * d);
            prop_assert!(g.len() <= cands.len() * (2 * w + 1));
        }
    }
}
