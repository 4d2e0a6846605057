//! Loss terms and their phase-specific sums.
//!
//! All terms are summed binary cross-entropies (never averaged):
//! `L_e` over real clauses, `L_gp` over genuine pairs, `L_fp` over fake
//! pairs. Pre-training minimizes `L_e + L_fp`, training `L_e + L_gp + L_fp`.

use crate::tape::{bce_value, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Phase {
    Pretrain,
    Train,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Train => "train",
        }
    }
}

/// Which loss components take part in the objective. Used to build
/// ablations; the phase rule still applies on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LossMask {
    pub emotion: bool,
    pub genuine: bool,
    pub fake: bool,
}

impl LossMask {
    pub const ALL: LossMask = LossMask { emotion: true, genuine: true, fake: true };

    /// Whether the genuine term is part of the objective in `phase`.
    pub fn uses_genuine(&self, phase: Phase) -> bool {
        self.genuine && phase == Phase::Train
    }
}

impl Default for LossMask {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub l_e: f64,
    pub l_gp: f64,
    pub l_fp: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Components plus their phase total.
    pub fn new(l_e: f64, l_gp: f64, l_fp: f64, phase: Phase) -> Self {
        let mut b = LossBreakdown { l_e, l_gp, l_fp, total: 0.0 };
        b.total = phase_loss(&b, phase);
        b
    }

    pub fn is_finite(&self) -> bool {
        self.l_e.is_finite() && self.l_gp.is_finite() && self.l_fp.is_finite() && self.total.is_finite()
    }

    /// Componentwise sum, used to accumulate over documents.
    pub fn accumulate(&mut self, other: &LossBreakdown) {
        self.l_e += other.l_e;
        self.l_gp += other.l_gp;
        self.l_fp += other.l_fp;
        self.total += other.total;
    }
}

/// `L_e + L_fp` in pre-training, `L_e + L_gp + L_fp` in training.
pub fn phase_loss(b: &LossBreakdown, phase: Phase) -> f64 {
    phase_loss_masked(b, phase, LossMask::ALL)
}

/// [`phase_loss`] with some components switched off. Summation order is
/// always `l_e`, `l_gp`, `l_fp`.
pub fn phase_loss_masked(b: &LossBreakdown, phase: Phase, mask: LossMask) -> f64 {
    let mut total = 0.0;
    if mask.emotion {
        total += b.l_e;
    }
    if mask.uses_genuine(phase) {
        total += b.l_gp;
    }
    if mask.fake {
        total += b.l_fp;
    }
    total
}

/// Summed clause-level cross-entropy against "is an emotion clause" labels.
pub fn emotion_loss(probs: &[f64], labels: &[f64]) -> f64 {
    debug_assert_eq!(probs.len(), labels.len());
    probs.iter().zip(labels).map(|(&p, &y)| bce_value(p, y)).sum()
}

/// Summed cross-entropy over `(probability, label)` genuine pairs.
pub fn genuine_loss(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|&(p, y)| bce_value(p, y)).sum()
}

/// Summed cross-entropy over `(probability, label)` fake pairs.
pub fn fake_loss(pairs: &[(f64, f64)]) -> f64 {
    genuine_loss(pairs)
}

/// Tape version of the summed cross-entropy; an empty set yields 0.
pub fn bce_sum(tape: &mut Tape<'_>, probs: &[Var], labels: &[f64]) -> Var {
    let terms: alloc::vec::Vec<Var> = probs.iter().zip(labels).map(|(&p, &y)| tape.bce(p, y)).collect();
    tape.sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::LN_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_forms() {
        assert!((emotion_loss(&[0.5], &[1.0]) - LN_2).abs() < 1e-12);
        assert!(emotion_loss(&[1.0, 0.0], &[1.0, 0.0]) < 1e-6);
        let a = emotion_loss(&[0.3], &[1.0]);
        let b = emotion_loss(&[0.8], &[0.0]);
        assert_eq!(emotion_loss(&[0.3, 0.8], &[1.0, 0.0]), a + b);
        assert!((genuine_loss(&[(0.5, 1.0)]) - LN_2).abs() < 1e-12);
        assert!((fake_loss(&[(0.5, 0.0)]) - LN_2).abs() < 1e-12);
        assert_eq!(genuine_loss(&[]), 0.0);
        assert_eq!(fake_loss(&[]), 0.0);
    }

    #[test]
    fn phase_sums() {
        let b = LossBreakdown { l_e: 1.0, l_gp: 2.0, l_fp: 3.0, total: 0.0 };
        assert_eq!(phase_loss(&b, Phase::Train), 6.0);
        assert_eq!(phase_loss(&b, Phase::Pretrain), 4.0);
        assert_eq!(phase_loss(&LossBreakdown::default(), Phase::Train), 0.0);
        let no_e = LossMask { emotion: false, ..LossMask::ALL };
        assert_eq!(phase_loss_masked(&b, Phase::Train, no_e), 5.0);
    }

    fn brute_force(pairs: &[(f64, f64)]) -> f64 {
        let mut total = 0.0;
        for &(p, y) in pairs {
            let p = p.clamp(1e-7, 1.0 - 1e-7);
            total += if y == 1.0 { -libm::log(p) } else { -libm::log(1.0 - p) };
        }
        total
    }

    #[test]
    fn pair_losses_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(0..40);
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(0.0..=1.0), if rng.gen_bool(0.3) { 1.0 } else { 0.0 }))
                .collect();
            assert!((genuine_loss(&pairs) - brute_force(&pairs)).abs() < 1e-9);
            assert!((fake_loss(&pairs) - brute_force(&pairs)).abs() < 1e-9);
            assert!(genuine_loss(&pairs) >= 0.0);
        }
    }

    #[test]
    fn tape_sum_matches_value_sum() {
        let store = crate::params::ParamStore::new();
        let mut t = Tape::new(&store);
        let ps: Vec<Var> = [0.2, 0.9, 0.4].iter().map(|&p| t.constant(alloc::vec![p])).collect();
        let l = bce_sum(&mut t, &ps, &[1.0, 0.0, 1.0]);
        assert_eq!(t.scalar(l), emotion_loss(&[0.2, 0.9, 0.4], &[1.0, 0.0, 1.0]));
        let empty = bce_sum(&mut t, &[], &[]);
        assert_eq!(t.scalar(empty), 0.0);
    }
}
