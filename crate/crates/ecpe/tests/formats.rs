use epo_core::corpus::EncodedDoc;
use epo_core::objectives::Phase;
use epo_core::params::ParamId;
use epo_core::synth::generate_synthetic;
use epo_core::trainer::TrainConfig;
use epo_ecpe::checkpoint::{self, decode, encode, DecodeError};
use epo_ecpe::experiment::fit;
use epo_ecpe::{io, Error};

fn small_config() -> TrainConfig {
    TrainConfig { embed_dim: 8, clause_dim: 8, epochs_pretrain: 1, epochs_train: 2, seed: 4, ..TrainConfig::default() }
}

#[test]
fn corpus_and_lexicon_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (docs, lexicon) = generate_synthetic(25, 7, 10, 3);
    let c = dir.path().join("c.jsonl");
    let l = dir.path().join("l.txt");
    io::save_corpus(&c, &docs).unwrap();
    io::save_lexicon(&l, &lexicon).unwrap();
    assert_eq!(io::load_corpus(&c).unwrap(), docs);
    assert_eq!(io::load_lexicon(&l).unwrap(), lexicon);

    let again = dir.path().join("c2.jsonl");
    io::save_corpus(&again, &io::load_corpus(&c).unwrap()).unwrap();
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn duplicate_doc_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (docs, _) = generate_synthetic(2, 0, 6, 1);
    let c = dir.path().join("c.jsonl");
    io::save_corpus(&c, &[docs[0].clone(), docs[0].clone()]).unwrap();
    assert!(matches!(io::load_corpus(&c), Err(Error::Parse { line: 2, .. }) | Err(Error::Validation { .. })));
}

#[test]
fn damaged_checkpoints_are_refused() {
    let (docs, _) = generate_synthetic(8, 1, 8, 2);
    let (trainer, vocab) = fit(&docs, &small_config(), None, &mut |_| {}).unwrap();
    let bytes = encode(&trainer, &vocab);
    assert!(decode(&bytes).is_ok());

    for cut in [0, 7, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(decode(&bytes[..cut]), Err(DecodeError::Corrupt(_))), "truncated at {cut}");
    }
    for pos in [20, bytes.len() / 2, bytes.len() - 40] {
        let mut flipped = bytes.clone();
        flipped[pos] ^= 0x01;
        assert!(matches!(decode(&flipped), Err(DecodeError::Corrupt(_))), "flip at {pos}");
    }
    let mut foreign = bytes.clone();
    foreign[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert_eq!(decode(&foreign).err(), Some(DecodeError::Version(2)));
    let mut other = bytes;
    other[0] = b'X';
    assert!(matches!(decode(&other), Err(DecodeError::Corrupt(_))));
}

#[test]
fn load_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("junk.ckpt");
    std::fs::write(&p, b"not a checkpoint at all, but long enough to pass the length check easily").unwrap();
    match checkpoint::load(&p) {
        Err(e @ Error::Corrupt { .. }) => assert!(e.to_string().contains("junk.ckpt")),
        other => panic!("unexpected {:?}", other.err()),
    }
}

#[test]
fn resumed_training_matches_uninterrupted_training() {
    let dir = tempfile::tempdir().unwrap();
    let (docs, _) = generate_synthetic(16, 2, 8, 2);
    let (mut original, vocab) = fit(&docs, &small_config(), None, &mut |_| {}).unwrap();
    let path = dir.path().join("mid.ckpt");
    checkpoint::save(&path, &original, &vocab).unwrap();
    let (mut resumed, vocab2) = checkpoint::load(&path).unwrap().into_trainer();
    assert_eq!(vocab2.corpus_tokens(), vocab.corpus_tokens());
    assert_eq!(resumed.progress, original.progress);

    let encoded: Vec<EncodedDoc> = docs.iter().map(|d| vocab.encode(d)).collect();
    let a = original.run_epoch(&encoded, Phase::Train).unwrap();
    let b = resumed.run_epoch(&encoded, Phase::Train).unwrap();
    assert_eq!(a.epoch, 3);
    assert_eq!(a.losses.total.to_bits(), b.losses.total.to_bits());
    for id in (0..original.model.store.len()).map(ParamId) {
        let (x, y) = (original.model.store.get(id), resumed.model.store.get(id));
        assert!(x.data.iter().zip(&y.data).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
