use std::collections::BTreeSet;

use epo_core::corpus::{build_vocab, make_folds, Pair};
use epo_core::evaluation::evaluate_corpus;
use epo_core::extractor::{contains_sentiment_word, extract, scored_pairs};
use epo_core::model::evaluate_document;
use epo_core::synth::generate_synthetic;
use epo_core::trainer::TrainConfig;
use epo_core::EpoModel;

#[test]
fn untrained_model_predictions_obey_the_rule() {
    let (docs, lexicon) = generate_synthetic(60, 4, 10, 3);
    let vocab = build_vocab(&docs, 1).unwrap();
    for seed in 0..3 {
        let config = TrainConfig { embed_dim: 16, clause_dim: 16, seed, ..TrainConfig::default() };
        let model = EpoModel::new(config.model_config(vocab.len()), seed).unwrap();
        for d in &docs {
            let out = evaluate_document(&model, &vocab.encode(d)).unwrap();
            let scored = scored_pairs(&out.pairs);
            let pred = extract(d, &scored, &lexicon).pairs;

            let genuine: BTreeSet<Pair> = scored.iter().map(|s| (s.emotion_index, s.cause_index)).collect();
            let fake: BTreeSet<Pair> = out.pairs.fake.iter().map(|f| (f.emotion, f.cause)).collect();
            assert!(pred.is_subset(&genuine));
            assert!(pred.is_disjoint(&fake));
            for &(e, c) in &pred {
                assert!(contains_sentiment_word(d.clause(e), &lexicon));
                assert!(e.abs_diff(c) <= config.window);
            }

            let top = scored
                .iter()
                .max_by(|a, b| a.score.total_cmp(&b.score).then((b.emotion_index, b.cause_index).cmp(&(a.emotion_index, a.cause_index))))
                .unwrap();
            if contains_sentiment_word(d.clause(top.emotion_index), &lexicon) {
                assert!(pred.contains(&(top.emotion_index, top.cause_index)));
            }
        }
    }
}

#[test]
fn cross_validation_folds_cover_the_corpus_once() {
    let (docs, lexicon) = generate_synthetic(21, 1, 8, 2);
    let folds = make_folds(docs.len(), 10, 3).unwrap();
    let mut sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
    sizes.sort_unstable();
    assert_eq!(sizes, [vec![2; 9], vec![3]].concat());

    let mut seen = vec![0; docs.len()];
    for f in &folds {
        for &i in &f.test {
            seen[i] += 1;
        }
        assert_eq!(f.train.len() + f.test.len(), docs.len());
        let train: Vec<_> = f.train.iter().map(|&i| docs[i].clone()).collect();
        let test: Vec<_> = f.test.iter().map(|&i| docs[i].clone()).collect();
        let vocab = build_vocab(&train, 1).unwrap();
        let config = TrainConfig { embed_dim: 8, clause_dim: 8, ..TrainConfig::default() };
        let model = EpoModel::new(config.model_config(vocab.len()), 0).unwrap();
        let (report, _) = evaluate_corpus(&model, &vocab, &test, &lexicon).unwrap();
        assert_eq!(report.n_docs, test.len());
        assert_eq!(report.n_single + report.n_multi, test.len());
    }
    assert!(seen.iter().all(|&n| n == 1));
}
