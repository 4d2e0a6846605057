//! Deterministic synthetic corpus with known emotion-cause structure.
//!
//! Every document has 4..=`max_len` clauses built from a closed filler
//! vocabulary. Each gold emotion clause carries exactly one sentiment word of
//! some emotion category; its cause clause, at most two clauses away, carries
//! a trigger word of the same category. All other clauses are pure filler, so
//! the lexicon never fires outside gold emotion clauses.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Lexicon, Pair};

/// Farthest a cause is placed from its emotion clause.
pub const MAX_CAUSE_DISTANCE: usize = 2;

/// Share of documents with more than one pair, close to the roughly 10%
/// seen in real emotion-cause corpora.
pub const MULTI_PAIR_RATE: f64 = 0.1;

struct Category {
    sentiment: &'static [&'static str],
    triggers: &'static [&'static str],
}

const CATEGORIES: &[Category] = &[
    Category { sentiment: &["happy", "delighted"], triggers: &["won"] },
    Category { sentiment: &["sad", "heartbroken"], triggers: &["died"] },
    Category { sentiment: &["angry", "furious"], triggers: &["cheated"] },
    Category { sentiment: &["afraid", "scared"], triggers: &["earthquake"] },
    Category { sentiment: &["surprised", "amazed"], triggers: &["suddenly"] },
];

const FILLER: &[&str] = &[
    "the", "a", "man", "woman", "city", "today", "went", "to", "market", "said", "that", "it",
    "was", "and", "then", "news", "report", "people", "home", "work", "after", "his", "her",
    "family", "school", "morning", "police", "village",
];

/// Every sentiment word the generator can emit.
pub fn lexicon() -> Lexicon {
    Lexicon::new(CATEGORIES.iter().flat_map(|c| c.sentiment.iter().copied()))
}

/// Generates `n_docs` documents and the sentiment lexicon they were built
/// from. Identical arguments always give identical output.
pub fn generate_synthetic(
    n_docs: usize,
    seed: u64,
    max_len: usize,
    max_pairs: usize,
) -> (Vec<Document>, Lexicon) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_len = max_len.max(4);
    let max_pairs = max_pairs.clamp(1, CATEGORIES.len());
    let docs = (0..n_docs)
        .map(|i| generate_document(&mut rng, format!("synth-{seed}-{i:04}"), max_len, max_pairs))
        .collect();
    (docs, lexicon())
}

fn generate_document(rng: &mut ChaCha8Rng, doc_id: String, max_len: usize, max_pairs: usize) -> Document {
    let n_clauses = rng.gen_range(4..=max_len);
    let wanted = if max_pairs > 1 && rng.gen_bool(MULTI_PAIR_RATE) { rng.gen_range(2..=max_pairs) } else { 1 };

    let mut categories: Vec<usize> = (0..CATEGORIES.len()).collect();
    categories.shuffle(rng);

    // (emotion, cause, category)
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for &category in categories.iter().take(wanted) {
        for _attempt in 0..16 {
            let emotion = rng.gen_range(1..=n_clauses);
            let offset: i64 = if rng.gen_bool(0.1) {
                0
            } else {
                let d = rng.gen_range(1..=MAX_CAUSE_DISTANCE as i64);
                if rng.gen_bool(0.5) { -d } else { d }
            };
            let cause = emotion as i64 + offset;
            if cause < 1 || cause > n_clauses as i64 {
                continue;
            }
            let cause = cause as usize;
            if used.contains(&emotion) || used.contains(&cause) {
                continue;
            }
            used.insert(emotion);
            used.insert(cause);
            pairs.push((emotion, cause, category));
            break;
        }
    }
    if pairs.is_empty() {
        // Unreachable in practice; keeps the one-pair guarantee unconditional.
        pairs.push((1, 1, categories[0]));
    }

    let mut marks: Vec<Vec<&'static str>> = (0..n_clauses).map(|_| Vec::new()).collect();
    for &(emotion, cause, category) in &pairs {
        let cat = &CATEGORIES[category];
        marks[emotion - 1].push(cat.sentiment[rng.gen_range(0..cat.sentiment.len())]);
        marks[cause - 1].push(cat.triggers[rng.gen_range(0..cat.triggers.len())]);
    }

    let clauses = marks
        .into_iter()
        .map(|special| {
            let n_filler = rng.gen_range(1..=3);
            let mut tokens: Vec<String> =
                (0..n_filler).map(|_| FILLER[rng.gen_range(0..FILLER.len())].to_string()).collect();
            for word in special {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, word.to_string());
            }
            tokens
        })
        .collect();

    let gold: Vec<Pair> = pairs.iter().map(|&(e, c, _)| (e, c)).collect();
    Document::new(doc_id, clauses, gold).expect("generator emits valid documents")
}
