//! Versioned binary checkpoints.
//!
//! Layout: 8-byte magic, `u32` version, `u64` header length, JSON header,
//! raw little-endian `f64` payload (parameters, then Adam first and second
//! moments when present), and a trailing SHA-256 of everything before it.

use std::fs;
use std::path::Path;

use epo_core::corpus::Vocabulary;
use epo_core::optim::Adam;
use epo_core::trainer::{Progress, TrainConfig, Trainer};
use epo_core::EpoModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const MAGIC: &[u8; 8] = b"EPOCKPT\0";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;
const PREFIX_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: [u8; 32],
    stream: u64,
    /// Decimal string: JSON numbers cannot hold a full `u128`.
    word_pos: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    vocab: Vec<String>,
    progress: Progress,
    rng: RngState,
    params: Vec<ParamEntry>,
    /// Per-group Adam step counts; absent when no optimizer state is stored.
    adam_steps: Option<Vec<u64>>,
}

/// Everything needed to evaluate or resume a training run.
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub model: EpoModel,
    pub optimizer: Adam,
    pub rng: ChaCha8Rng,
    pub progress: Progress,
}

impl Checkpoint {
    pub fn into_trainer(self) -> (Trainer, Vocabulary) {
        let mut trainer = Trainer::new(self.model, self.config);
        trainer.optimizer = self.optimizer;
        trainer.rng = self.rng;
        trainer.progress = self.progress;
        (trainer, self.vocab)
    }
}

pub fn encode(trainer: &Trainer, vocab: &Vocabulary) -> Vec<u8> {
    let store = &trainer.model.store;
    let header = Header {
        config: trainer.config.clone(),
        vocab: vocab.corpus_tokens().to_vec(),
        progress: trainer.progress,
        rng: RngState {
            seed: trainer.rng.get_seed(),
            stream: trainer.rng.get_stream(),
            word_pos: trainer.rng.get_word_pos().to_string(),
        },
        params: store
            .iter()
            .map(|(_, name, t)| ParamEntry { name: name.to_string(), rows: t.rows, cols: t.cols })
            .collect(),
        adam_steps: Some(trainer.optimizer.steps.clone()),
    };
    let json = serde_json::to_vec(&header).expect("checkpoint header always serializes");

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let mut put = |xs: &[f64]| {
        for x in xs {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    for (_, _, t) in store.iter() {
        put(&t.data);
    }
    for m in &trainer.optimizer.m {
        put(m);
    }
    for v in &trainer.optimizer.v {
        put(v);
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(digest.as_slice());
    out
}

pub fn save(path: &Path, trainer: &Trainer, vocab: &Vocabulary) -> Result<()> {
    let bytes = encode(trainer, vocab);
    write_atomic(path, |w| w.write_all(&bytes))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        DecodeError::Version(found) => Error::Version { path: path.to_path_buf(), found, expected: VERSION },
        DecodeError::Corrupt(message) => Error::Corrupt { path: path.to_path_buf(), message },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    Version(u32),
    Corrupt(String),
}

fn corrupt(msg: impl Into<String>) -> DecodeError {
    DecodeError::Corrupt(msg.into())
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Checkpoint, DecodeError> {
    if bytes.len() < PREFIX_LEN + DIGEST_LEN || &bytes[..8] != MAGIC {
        return Err(corrupt("not a checkpoint file or truncated"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(DecodeError::Version(version));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch (file truncated or modified)"));
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let json = body.get(PREFIX_LEN..PREFIX_LEN.saturating_add(header_len)).ok_or_else(|| corrupt("bad header length"))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| corrupt(format!("bad header: {e}")))?;
    let mut payload = &body[PREFIX_LEN + header_len..];

    let mut take = |n: usize| -> std::result::Result<Vec<f64>, DecodeError> {
        let len = n.checked_mul(8).filter(|&l| l <= payload.len()).ok_or_else(|| corrupt("payload too short"))?;
        let (head, rest) = payload.split_at(len);
        payload = rest;
        Ok(head.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };

    let vocab = Vocabulary::from_tokens(header.vocab.clone());
    header.config.validate().map_err(|e| corrupt(format!("stored config invalid: {}", e.join("; "))))?;
    let mut model = EpoModel::new(header.config.model_config(vocab.len()), header.config.seed)
        .map_err(|e| corrupt(format!("cannot rebuild model: {e}")))?;
    if model.store.len() != header.params.len() {
        return Err(corrupt("parameter list does not match the model layout"));
    }
    let mut ids = Vec::with_capacity(header.params.len());
    for entry in &header.params {
        let id = model.store.find(&entry.name).ok_or_else(|| corrupt(format!("unknown parameter {}", entry.name)))?;
        let t = model.store.get_mut(id);
        if (t.rows, t.cols) != (entry.rows, entry.cols) {
            return Err(corrupt(format!("parameter {} has shape {}x{}", entry.name, entry.rows, entry.cols)));
        }
        t.data = take(entry.rows * entry.cols)?;
        ids.push(id);
    }

    let mut optimizer = Adam::new(&model.store, header.config.adam);
    if let Some(steps) = &header.adam_steps {
        if steps.len() != ids.len() {
            return Err(corrupt("optimizer state does not match the parameter list"));
        }
        for (k, e) in header.params.iter().enumerate() {
            optimizer.m[ids[k].0] = take(e.rows * e.cols)?;
        }
        for (k, e) in header.params.iter().enumerate() {
            optimizer.v[ids[k].0] = take(e.rows * e.cols)?;
        }
        for (k, &s) in steps.iter().enumerate() {
            optimizer.steps[ids[k].0] = s;
        }
    }
    if !payload.is_empty() {
        return Err(corrupt("trailing bytes after payload"));
    }

    let mut rng = ChaCha8Rng::from_seed(header.rng.seed);
    rng.set_stream(header.rng.stream);
    rng.set_word_pos(header.rng.word_pos.parse().map_err(|_| corrupt("bad rng position"))?);

    Ok(Checkpoint { config: header.config, vocab, model, optimizer, rng, progress: header.progress })
}
