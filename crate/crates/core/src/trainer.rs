//! Two-phase training: a pre-training phase on `L_e + L_fp` followed by the
//! training phase on `L_e + L_gp + L_fp`, with Adam updates over
//! length-bucketed mini-batches. Candidate sets are rebuilt on every forward
//! pass, so improvements in emotion prediction immediately change which
//! pairs are supervised.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::EncodedDoc;
use crate::encoder::pad_batch;
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::model::{forward_document, DropoutRates, EpoModel, ForwardSpec, ModelConfig};
use crate::objectives::{phase_loss_masked, LossBreakdown, LossMask, Phase};
use crate::optim::{Adam, AdamConfig};
use crate::params::Gradients;
use crate::tape::Tape;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_pretrain: f64,
    pub lr_train: f64,
    pub epochs_pretrain: usize,
    pub epochs_train: usize,
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub k: usize,
    #[cfg_attr(feature = "serde", serde(rename = "w"))]
    pub window: usize,
    pub embed_dim: usize,
    pub clause_dim: usize,
    pub dropout: DropoutRates,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Rescale gradients whose global norm exceeds this value.
    pub clip_norm: Option<f64>,
    pub skip_pretrain: bool,
    /// Loss components used in the training phase.
    pub train_losses: LossMask,
    pub min_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            lr_pretrain: 0.001,
            lr_train: 0.001,
            epochs_pretrain: 5,
            epochs_train: 50,
            k: 3,
            window: 2,
            embed_dim: 200,
            clause_dim: 200,
            dropout: DropoutRates::default(),
            seed: 0,
            adam: AdamConfig::default(),
            clip_norm: None,
            skip_pretrain: false,
            train_losses: LossMask::ALL,
            min_count: 1,
        }
    }
}

impl TrainConfig {
    /// Lists every invalid field rather than stopping at the first.
    pub fn validate(&self) -> core::result::Result<(), Vec<String>> {
        let mut bad = Vec::new();
        let mut positive = |name: &str, v: usize| {
            if v == 0 {
                bad.push(format!("{name} must be positive"));
            }
        };
        positive("batch_size", self.batch_size);
        positive("K", self.k);
        positive("embed_dim", self.embed_dim);
        positive("clause_dim", self.clause_dim);
        positive("min_count", self.min_count);
        if !self.clause_dim.is_multiple_of(2) {
            bad.push(String::from("clause_dim must be even"));
        }
        for (name, lr) in [("lr_pretrain", self.lr_pretrain), ("lr_train", self.lr_train)] {
            if !(lr.is_finite() && lr > 0.0) {
                bad.push(format!("{name} must be a positive finite number"));
            }
        }
        let d = &self.dropout;
        for (name, p) in [
            ("dropout.embedding", d.embedding),
            ("dropout.word", d.word),
            ("dropout.clause", d.clause),
            ("dropout.prediction", d.prediction),
        ] {
            if !(0.0..1.0).contains(&p) {
                bad.push(format!("{name} must lie in [0, 1)"));
            }
        }
        if let Some(c) = self.clip_norm {
            if !(c.is_finite() && c > 0.0) {
                bad.push(String::from("clip_norm must be a positive finite number"));
            }
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.eps.partial_cmp(&0.0) != Some(core::cmp::Ordering::Greater) {
            bad.push(String::from("adam requires beta1, beta2 in [0, 1) and eps > 0"));
        }
        if bad.is_empty() { Ok(()) } else { Err(bad) }
    }

    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            clause_dim: self.clause_dim,
            k: self.k,
            window: self.window,
            dropout: self.dropout,
        }
    }

    pub fn learning_rate(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Pretrain => self.lr_pretrain,
            Phase::Train => self.lr_train,
        }
    }

    pub fn loss_mask(&self, phase: Phase) -> LossMask {
        match phase {
            Phase::Pretrain => LossMask::ALL,
            Phase::Train => self.train_losses,
        }
    }
}

/// Epochs completed so far in the current phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Progress {
    pub phase: Phase,
    pub epoch: usize,
}

/// Per-epoch summary: component losses summed over all batches, each taken
/// before that batch's update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub phase: Phase,
    /// 1-based within the phase.
    pub epoch: usize,
    pub batches: usize,
    pub losses: LossBreakdown,
}

pub struct Trainer {
    pub model: EpoModel,
    pub optimizer: Adam,
    pub rng: ChaCha8Rng,
    pub config: TrainConfig,
    pub progress: Progress,
}

impl Trainer {
    pub fn new(model: EpoModel, config: TrainConfig) -> Self {
        let optimizer = Adam::new(&model.store, config.adam);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Trainer { model, optimizer, rng, config, progress: Progress { phase: Phase::Pretrain, epoch: 0 } }
    }

    /// One forward/backward/update on a batch. Returns the pre-update losses.
    pub fn step(&mut self, batch: &[&EncodedDoc], phase: Phase) -> Result<LossBreakdown> {
        if batch.is_empty() {
            return Err(Error::Contract("empty batch"));
        }
        if batch.iter().any(|d| d.is_empty() || d.clauses.iter().all(Vec::is_empty)) {
            return Err(Error::Contract("batch contains an all-padding document"));
        }
        let mask = self.config.loss_mask(phase);
        let spec = ForwardSpec::training(phase, mask);
        let padded = pad_batch(batch);

        let Trainer { model, rng, .. } = self;
        let (breakdown, grads) = {
            let mut tape = Tape::new(&model.store);
            let mut mode = Mode::Train(rng);
            let mut totals = Vec::with_capacity(batch.len());
            let mut breakdown = LossBreakdown::default();
            for (p, doc) in padded.iter().zip(batch) {
                let g = forward_document(&mut tape, model, p, &doc.gold_pairs, spec, &mut mode)?;
                breakdown.accumulate(&g.breakdown(&tape));
                totals.push(g.total);
            }
            let root = tape.sum(&totals);
            breakdown.total = phase_loss_masked(&breakdown, phase, mask);
            if !breakdown.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss in {} step: l_e={} l_gp={} l_fp={}",
                    phase.name(),
                    breakdown.l_e,
                    breakdown.l_gp,
                    breakdown.l_fp
                )));
            }
            (breakdown, tape.backward(root))
        };
        self.apply(grads, phase)?;
        Ok(breakdown)
    }

    fn apply(&mut self, mut grads: Gradients, phase: Phase) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::NonFinite(format!("gradient in {} step", phase.name())));
        }
        if let Some(limit) = self.config.clip_norm {
            let norm = grads.global_norm();
            if norm > limit {
                grads.scale(limit / norm);
            }
        }
        let lr = self.config.learning_rate(phase);
        self.optimizer.step(&mut self.model.store, &grads, lr);
        Ok(())
    }

    /// One bucket per clause count, each cut into batches of at most
    /// `batch_size`; the batch order is reshuffled each epoch.
    fn batches(&mut self, docs: &[EncodedDoc]) -> Vec<Vec<usize>> {
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, d) in docs.iter().enumerate() {
            buckets.entry(d.len()).or_default().push(i);
        }
        let mut batches: Vec<Vec<usize>> = buckets
            .values()
            .flat_map(|b| b.chunks(self.config.batch_size).map(<[usize]>::to_vec))
            .collect();
        batches.shuffle(&mut self.rng);
        batches
    }

    pub fn run_epoch(&mut self, docs: &[EncodedDoc], phase: Phase) -> Result<EpochRecord> {
        let epoch = if self.progress.phase == phase { self.progress.epoch + 1 } else { 1 };
        let batches = self.batches(docs);
        let mut losses = LossBreakdown::default();
        for (b, idx) in batches.iter().enumerate() {
            let batch: Vec<&EncodedDoc> = idx.iter().map(|&i| &docs[i]).collect();
            let step = self.step(&batch, phase).map_err(|e| match e {
                Error::NonFinite(msg) => {
                    Error::NonFinite(format!("{msg} (epoch {epoch}, batch {})", b + 1))
                }
                other => other,
            })?;
            losses.accumulate(&step);
        }
        self.progress = Progress { phase, epoch };
        Ok(EpochRecord { phase, epoch, batches: batches.len(), losses })
    }

    /// `epochs_pretrain` epochs on `L_e + L_fp`.
    pub fn pretrain(&mut self, docs: &[EncodedDoc], log: &mut dyn FnMut(&EpochRecord)) -> Result<()> {
        self.run_phase(docs, Phase::Pretrain, self.config.epochs_pretrain, log)
    }

    /// `epochs_train` epochs on the training-phase objective.
    pub fn train(&mut self, docs: &[EncodedDoc], log: &mut dyn FnMut(&EpochRecord)) -> Result<()> {
        self.run_phase(docs, Phase::Train, self.config.epochs_train, log)
    }

    /// Pre-training (unless `skip_pretrain`) followed by training.
    pub fn fit(&mut self, docs: &[EncodedDoc], log: &mut dyn FnMut(&EpochRecord)) -> Result<()> {
        if !self.config.skip_pretrain {
            self.pretrain(docs, log)?;
        }
        self.train(docs, log)
    }

    fn run_phase(
        &mut self,
        docs: &[EncodedDoc],
        phase: Phase,
        epochs: usize,
        log: &mut dyn FnMut(&EpochRecord),
    ) -> Result<()> {
        if epochs > 0 && docs.is_empty() {
            return Err(Error::Argument("cannot train on an empty corpus".into()));
        }
        for _ in 0..epochs {
            let record = self.run_epoch(docs, phase)?;
            log(&record);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;
    use crate::synth::generate_synthetic;
    use alloc::vec;

    fn small_setup(seed: u64) -> (Trainer, Vec<EncodedDoc>) {
        let (docs, _) = generate_synthetic(12, seed, 8, 2);
        let vocab = build_vocab(&docs, 1).unwrap();
        let encoded: Vec<EncodedDoc> = docs.iter().map(|d| vocab.encode(d)).collect();
        let config = TrainConfig {
            embed_dim: 8,
            clause_dim: 8,
            batch_size: 4,
            epochs_pretrain: 2,
            epochs_train: 2,
            seed,
            ..TrainConfig::default()
        };
        let model = EpoModel::new(config.model_config(vocab.len()), seed).unwrap();
        (Trainer::new(model, config), encoded)
    }

    #[test]
    fn default_config_uses_reported_hyperparameters() {
        let c = TrainConfig::default();
        assert_eq!((c.batch_size, c.epochs_pretrain, c.epochs_train, c.k, c.window), (32, 5, 50, 3, 2));
        assert_eq!((c.lr_pretrain, c.lr_train), (0.001, 0.001));
        assert_eq!(c.dropout, DropoutRates { embedding: 0.1, word: 0.5, clause: 0.1, prediction: 0.1 });
        assert_eq!(c.clause_dim, 200);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation_lists_every_bad_field() {
        let c = TrainConfig { batch_size: 0, k: 0, clause_dim: 7, lr_train: -1.0, ..TrainConfig::default() };
        let errs = c.validate().unwrap_err();
        assert_eq!(errs.len(), 4, "{errs:?}");
    }

    #[test]
    fn zero_pretrain_epochs_leave_model_unchanged() {
        let (mut t, docs) = small_setup(0);
        t.config.epochs_pretrain = 0;
        let before = t.model.store.clone();
        t.pretrain(&docs, &mut |_| {}).unwrap();
        assert_eq!(t.model.store, before);
    }

    #[test]
    fn pretraining_never_moves_genuine_scorer() {
        let (mut t, docs) = small_setup(1);
        let ids = t.model.genuine_scorer_ids();
        let before: Vec<_> = ids.iter().map(|&id| t.model.store.get(id).clone()).collect();
        t.pretrain(&docs, &mut |_| {}).unwrap();
        let after: Vec<_> = ids.iter().map(|&id| t.model.store.get(id).clone()).collect();
        assert_eq!(before, after);
        for id in ids {
            assert_eq!(t.optimizer.steps[id.0], 0);
            assert!(t.optimizer.m[id.0].iter().all(|&m| m == 0.0));
        }
        t.train(&docs, &mut |_| {}).unwrap();
        assert_ne!(t.model.store.get(ids[0]), &before[0]);
    }

    #[test]
    fn identical_states_give_identical_steps() {
        let (mut a, docs) = small_setup(2);
        let (mut b, _) = small_setup(2);
        let batch: Vec<&EncodedDoc> = docs.iter().take(3).collect();
        let la = a.step(&batch, Phase::Train).unwrap();
        let lb = b.step(&batch, Phase::Train).unwrap();
        assert_eq!(la, lb);
        assert_eq!(la.total, la.l_e + la.l_gp + la.l_fp);
        assert_eq!(a.model.store, b.model.store);
    }

    #[test]
    fn degenerate_batches_are_rejected() {
        let (mut t, _) = small_setup(3);
        assert!(t.step(&[], Phase::Train).is_err());
        let empty = EncodedDoc { clauses: vec![], gold_pairs: Default::default() };
        assert!(matches!(t.step(&[&empty], Phase::Train), Err(Error::Contract(_))));
    }

    #[test]
    fn runs_are_reproducible() {
        let run = || {
            let (mut t, docs) = small_setup(4);
            let mut log = Vec::new();
            t.fit(&docs, &mut |r| log.push(*r)).unwrap();
            log
        };
        let a = run();
        assert_eq!(a.len(), 4);
        assert_eq!(a, run());
        assert_eq!(a[0].phase, Phase::Pretrain);
        assert_eq!(a[0].losses.l_gp, 0.0);
        assert_eq!(a[3].phase, Phase::Train);
        assert_eq!(a[3].epoch, 2);
    }

    #[test]
    fn non_finite_parameters_abort_with_diagnostics() {
        let (mut t, docs) = small_setup(5);
        let w = t.model.head.emotion_score.w;
        t.model.store.get_mut(w).data[0] = f64::NAN;
        let err = t.run_epoch(&docs, Phase::Train).unwrap_err();
        match err {
            Error::NonFinite(msg) => assert!(msg.contains("epoch 1") && msg.contains("l_e")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
