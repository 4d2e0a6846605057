//! Precision/recall/F1 for pair, emotion and cause extraction, single- vs.
//! multi-pair strata, and mean/std aggregation across folds and repeats.
//!
//! Counts are micro-pooled over all documents of a report. Precision is 0
//! when nothing was predicted, recall is 0 when there is no gold item.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::corpus::Pair;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PRF {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Raw match counts; add them across documents before turning into ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Counts {
    pub tp: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn of<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> Self {
        Counts { tp: pred.intersection(gold).count(), predicted: pred.len(), gold: gold.len() }
    }

    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn prf(&self) -> PRF {
        let precision = if self.predicted == 0 { 0.0 } else { self.tp as f64 / self.predicted as f64 };
        let recall = if self.gold == 0 { 0.0 } else { self.tp as f64 / self.gold as f64 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PRF { precision, recall, f1 }
    }
}

pub fn prf<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> PRF {
    Counts::of(pred, gold).prf()
}

/// Splits pairs into their emotion clause set and cause clause set.
pub fn decompose(pairs: &BTreeSet<Pair>) -> (BTreeSet<usize>, BTreeSet<usize>) {
    (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
}

/// Positions of single-pair and multi-pair documents.
pub fn stratify<'a>(gold: impl IntoIterator<Item = &'a BTreeSet<Pair>>) -> (Vec<usize>, Vec<usize>) {
    let mut single = Vec::new();
    let mut multi = Vec::new();
    for (i, g) in gold.into_iter().enumerate() {
        match g.len() {
            0 => {}
            1 => single.push(i),
            _ => multi.push(i),
        }
    }
    (single, multi)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scores {
    pub pair: PRF,
    pub emotion: PRF,
    pub cause: PRF,
    /// Pair-level scores over single-pair documents only.
    pub single_pair: PRF,
    /// Pair-level scores over multi-pair documents only.
    pub multi_pair: PRF,
}

impl Scores {
    pub const LEN: usize = 15;
    pub const NAMES: [&'static str; 5] = ["pair", "emotion", "cause", "single_pair", "multi_pair"];

    pub fn blocks(&self) -> [PRF; 5] {
        [self.pair, self.emotion, self.cause, self.single_pair, self.multi_pair]
    }

    fn to_array(self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        for (k, b) in self.blocks().iter().enumerate() {
            out[3 * k] = b.precision;
            out[3 * k + 1] = b.recall;
            out[3 * k + 2] = b.f1;
        }
        out
    }

    fn from_array(v: [f64; Self::LEN]) -> Self {
        let b = |k: usize| PRF { precision: v[3 * k], recall: v[3 * k + 1], f1: v[3 * k + 2] };
        Scores { pair: b(0), emotion: b(1), cause: b(2), single_pair: b(3), multi_pair: b(4) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub scores: Scores,
    pub pair_counts: Counts,
    pub n_docs: usize,
    pub n_single: usize,
    pub n_multi: usize,
}

/// Scores predictions against gold pairs, document by document.
pub fn evaluate(gold: &[&BTreeSet<Pair>], predicted: &[&BTreeSet<Pair>]) -> Result<EvalReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Argument(alloc::format!(
            "{} gold documents but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    let (mut pair, mut emotion, mut cause) = (Counts::default(), Counts::default(), Counts::default());
    let (mut single, mut multi) = (Counts::default(), Counts::default());
    let (single_idx, _) = stratify(gold.iter().copied());
    for (k, (g, p)) in gold.iter().zip(predicted).enumerate() {
        let c = Counts::of(p, g);
        pair.add(c);
        let (ge, gc) = decompose(g);
        let (pe, pc) = decompose(p);
        emotion.add(Counts::of(&pe, &ge));
        cause.add(Counts::of(&pc, &gc));
        if single_idx.binary_search(&k).is_ok() {
            single.add(c);
        } else if g.len() > 1 {
            multi.add(c);
        }
    }
    let n_single = single_idx.len();
    Ok(EvalReport {
        scores: Scores {
            pair: pair.prf(),
            emotion: emotion.prf(),
            cause: cause.prf(),
            single_pair: single.prf(),
            multi_pair: multi.prf(),
        },
        pair_counts: pair,
        n_docs: gold.len(),
        n_single,
        n_multi: gold.iter().filter(|g| g.len() > 1).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvSummary {
    pub mean: Scores,
    /// Population standard deviation (divides by the number of reports).
    pub std: Scores,
    pub n_reports: usize,
}

/// Mean and population standard deviation of every score over a flat pool
/// of reports (folds × repeats).
pub fn aggregate_cv(reports: &[EvalReport]) -> Result<CvSummary> {
    if reports.is_empty() {
        return Err(Error::Argument("no reports to aggregate".into()));
    }
    let n = reports.len() as f64;
    let rows: Vec<[f64; Scores::LEN]> = reports.iter().map(|r| r.scores.to_array()).collect();
    let mut mean = [0.0; Scores::LEN];
    let mut std = [0.0; Scores::LEN];
    for k in 0..Scores::LEN {
        mean[k] = rows.iter().map(|r| r[k]).sum::<f64>() / n;
        std[k] = math::sqrt(rows.iter().map(|r| (r[k] - mean[k]) * (r[k] - mean[k])).sum::<f64>() / n);
    }
    Ok(CvSummary { mean: Scores::from_array(mean), std: Scores::from_array(std), n_reports: reports.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(pairs: &[Pair]) -> BTreeSet<Pair> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn worked_examples() {
        let r = prf(&set(&[(2, 1), (3, 3)]), &set(&[(2, 1)]));
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
        let g = set(&[(1, 1), (4, 2)]);
        assert_eq!(prf(&g, &g), PRF { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(prf(&set(&[]), &g), PRF::default());
    }

    #[test]
    fn decomposition() {
        let (e, c) = decompose(&set(&[(2, 1), (2, 3)]));
        assert_eq!((e, c), ([2].into_iter().collect(), [1, 3].into_iter().collect()));
        let (e, c) = decompose(&set(&[]));
        assert!(e.is_empty() && c.is_empty());
        let (e, c) = decompose(&set(&[(4, 4)]));
        assert_eq!((e, c), ([4].into_iter().collect(), [4].into_iter().collect()));
    }

    #[test]
    fn strata() {
        let docs = [set(&[(1, 1)]), set(&[(1, 1), (2, 2), (3, 1)]), set(&[(2, 1)])];
        let (s, m) = stratify(docs.iter());
        assert_eq!((s, m), (vec![0, 2], vec![1]));
        let r = evaluate(&docs.iter().collect::<Vec<_>>(), &docs.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!((r.n_docs, r.n_single, r.n_multi), (3, 2, 1));
        assert_eq!(r.scores.multi_pair.f1, 1.0);
    }

    #[test]
    fn aggregation_closed_forms() {
        let rep = |f1: f64| EvalReport {
            scores: Scores { pair: PRF { precision: f1, recall: f1, f1 }, ..Scores::default() },
            ..EvalReport::default()
        };
        let s = aggregate_cv(&[rep(0.6), rep(0.8)]).unwrap();
        assert!((s.mean.pair.f1 - 0.7).abs() < 1e-12);
        assert!((s.std.pair.f1 - 0.1).abs() < 1e-12);
        let s = aggregate_cv(&[rep(0.4)]).unwrap();
        assert_eq!((s.mean.pair.f1, s.std.pair.f1), (0.4, 0.0));
        let s = aggregate_cv(&[rep(0.3), rep(0.3), rep(0.3)]).unwrap();
        assert_eq!(s.std.pair.f1, 0.0);
        assert!(aggregate_cv(&[]).is_err());
    }

    fn random_set(rng: &mut ChaCha8Rng) -> BTreeSet<Pair> {
        (0..rng.gen_range(0..8)).map(|_| (rng.gen_range(1..5), rng.gen_range(1..5))).collect()
    }

    #[test]
    fn counts_match_hand_count_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let (p, g) = (random_set(&mut rng), random_set(&mut rng));
            let mut tp = 0;
            for x in &p {
                if g.iter().any(|y| y == x) {
                    tp += 1;
                }
            }
            let precision = if p.is_empty() { 0.0 } else { tp as f64 / p.len() as f64 };
            let recall = if g.is_empty() { 0.0 } else { tp as f64 / g.len() as f64 };
            let f1 = if tp == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            assert_eq!(prf(&p, &g), PRF { precision, recall, f1 });
            let r = prf(&p, &g);
            if r.precision + r.recall > 0.0 {
                assert!(r.f1 <= r.precision.max(r.recall) + 1e-15);
                assert!(r.f1 >= r.precision.min(r.recall) - 1e-15);
            }
        }
    }

    #[test]
    fn correct_pairs_imply_correct_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let gold: Vec<BTreeSet<Pair>> =
            (0..200).map(|_| set(&[(rng.gen_range(1..6), rng.gen_range(1..6))])).collect();
        let pred: Vec<BTreeSet<Pair>> = (0..200).map(|_| random_set(&mut rng)).collect();
        let (mut pc, mut ec, mut cc) = (Counts::default(), Counts::default(), Counts::default());
        for (g, p) in gold.iter().zip(&pred) {
            pc.add(Counts::of(p, g));
            let ((ge, gc), (pe, pcs)) = (decompose(g), decompose(p));
            ec.add(Counts::of(&pe, &ge));
            cc.add(Counts::of(&pcs, &gc));
        }
        assert!(pc.tp <= ec.tp && pc.tp <= cc.tp);
    }
}
