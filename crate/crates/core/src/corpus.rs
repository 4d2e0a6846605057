//! Documents, lexicons, vocabularies and cross-validation folds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An (emotion clause, cause clause) pair of 1-based clause indices.
pub type Pair = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Clause {
    /// 1-based position within the document.
    pub index: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Document {
    pub doc_id: String,
    pub clauses: Vec<Clause>,
    pub gold_pairs: BTreeSet<Pair>,
}

impl Document {
    /// Builds a document from token lists, numbering clauses from 1, and
    /// validates it.
    pub fn new(
        doc_id: impl Into<String>,
        clauses: Vec<Vec<String>>,
        gold_pairs: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        let doc = Document {
            doc_id: doc_id.into(),
            clauses: clauses
                .into_iter()
                .enumerate()
                .map(|(i, tokens)| Clause { index: i + 1, tokens })
                .collect(),
            gold_pairs: gold_pairs.into_iter().collect(),
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Clause by 1-based index.
    pub fn clause(&self, index: usize) -> &Clause {
        &self.clauses[index - 1]
    }

    /// Clause indices that are the emotion of at least one gold pair.
    pub fn emotion_clauses(&self) -> BTreeSet<usize> {
        self.gold_pairs.iter().map(|p| p.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::Validation { doc_id: self.doc_id.clone(), reason };
        if self.clauses.is_empty() {
            return Err(invalid("document has no clauses".to_string()));
        }
        for (pos, clause) in self.clauses.iter().enumerate() {
            if clause.index != pos + 1 {
                return Err(invalid(format!(
                    "clause at position {} carries index {}",
                    pos + 1,
                    clause.index
                )));
            }
            if clause.tokens.is_empty() {
                return Err(invalid(format!("clause {} is empty", clause.index)));
            }
        }
        let n = self.clauses.len();
        for &(e, c) in &self.gold_pairs {
            if e == 0 || c == 0 || e > n || c > n {
                return Err(invalid(format!("pair ({e}, {c}) outside 1..={n}")));
            }
        }
        Ok(())
    }
}

/// Sentiment lexicon with exact-match membership.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lexicon {
    words: BTreeSet<String>,
}

impl Lexicon {
    /// Empty strings are dropped.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Lexicon {
            words: words.into_iter().map(Into::into).filter(|w: &String| !w.is_empty()).collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token ↔ id mapping with padding at 0 and unknown at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[cfg_attr(feature = "serde", serde(skip))]
    index: BTreeMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(Vec::new())
    }
}

impl Vocabulary {
    /// Builds a vocabulary whose ids 2.. follow `tokens` order. Reserved
    /// names and duplicates are skipped.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let mut all = Vec::with_capacity(tokens.len() + 2);
        all.push(PAD_TOKEN.to_string());
        all.push(UNK_TOKEN.to_string());
        let mut index = BTreeMap::new();
        for tok in tokens {
            if tok == PAD_TOKEN || tok == UNK_TOKEN || index.contains_key(&tok) {
                continue;
            }
            index.insert(tok.clone(), all.len() as u32);
            all.push(tok);
        }
        Vocabulary { tokens: all, index }
    }

    /// Restores the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Corpus tokens in id order (without the reserved entries).
    pub fn corpus_tokens(&self) -> &[String] {
        &self.tokens[2..]
    }

    pub fn encode(&self, doc: &Document) -> EncodedDoc {
        EncodedDoc {
            clauses: doc
                .clauses
                .iter()
                .map(|c| c.tokens.iter().map(|t| self.id(t)).collect())
                .collect(),
            gold_pairs: doc.gold_pairs.clone(),
        }
    }
}

/// Vocabulary of every token occurring at least `min_count` times, in
/// first-occurrence order.
pub fn build_vocab(docs: &[Document], min_count: usize) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::Argument("min_count must be at least 1".to_string()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut order = Vec::new();
    for tok in docs.iter().flat_map(|d| &d.clauses).flat_map(|c| &c.tokens) {
        let n = counts.entry(tok.as_str()).or_insert(0);
        if *n == 0 {
            order.push(tok.as_str());
        }
        *n += 1;
    }
    Ok(Vocabulary::from_tokens(
        order.into_iter().filter(|t| counts[t] >= min_count).map(String::from).collect(),
    ))
}

/// A document mapped to vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDoc {
    pub clauses: Vec<Vec<u32>>,
    pub gold_pairs: BTreeSet<Pair>,
}

impl EncodedDoc {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Per-clause 0/1 emotion labels.
    pub fn emotion_labels(&self) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.clauses.len()];
        for &(e, _) in &self.gold_pairs {
            y[e - 1] = 1.0;
        }
        y
    }
}

/// One cross-validation fold, as positions into the corpus slice.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldSplit {
    pub fold_id: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n_docs` under `seed` and cuts it into `n_folds` contiguous
/// test blocks whose sizes differ by at most one.
pub fn make_folds(n_docs: usize, n_folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if n_folds == 0 || n_folds > n_docs {
        return Err(Error::Argument(format!(
            "cannot make {n_folds} folds from {n_docs} documents"
        )));
    }
    let mut order: Vec<usize> = (0..n_docs).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n_docs / n_folds, n_docs % n_folds);
    let mut folds = Vec::with_capacity(n_folds);
    let mut start = 0;
    for fold_id in 0..n_folds {
        let size = base + usize::from(fold_id < extra);
        let mut test = order[start..start + size].to_vec();
        let mut train: Vec<usize> =
            order[..start].iter().chain(&order[start + size..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push(FoldSplit { fold_id, train, test });
        start += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn document_rejects_out_of_range_pairs() {
        let err = Document::new("d1", vec![toks(&["he", "won"]), toks(&["he", "was", "happy"])], [(3, 1)])
            .unwrap_err();
        assert!(matches!(err, Error::Validation { ref doc_id, .. } if doc_id == "d1"));
        let ok = Document::new("d1", vec![toks(&["he", "won"]), toks(&["happy"])], [(2, 1)]).unwrap();
        assert_eq!(ok.len(), 2);
        assert!(ok.gold_pairs.contains(&(2, 1)));
    }

    #[test]
    fn self_pairs_are_allowed() {
        assert!(Document::new("d", vec![toks(&["x"])], [(1, 1)]).is_ok());
    }

    #[test]
    fn lexicon_dedups_and_drops_empty() {
        let lex = Lexicon::new(["happy", "sad", "happy", ""]);
        assert_eq!(lex.len(), 2);
        assert!(lex.contains("happy") && !lex.contains("hap"));
    }

    #[test]
    fn vocab_respects_min_count() {
        let d = Document::new("d", vec![toks(&["a", "b", "a"]), toks(&["a"])], []).unwrap();
        let v = build_vocab(core::slice::from_ref(&d), 2).unwrap();
        assert!(v.contains("a"));
        assert_eq!(v.id("b"), UNK_ID);
        let all = build_vocab(core::slice::from_ref(&d), 1).unwrap();
        assert_eq!(all.len(), 4);
        assert_ne!(all.id("a"), PAD_ID);
        assert_ne!(all.id("a"), UNK_ID);
        let empty = build_vocab(&[], 1).unwrap();
        assert_eq!(empty.len(), 2);
        assert!(build_vocab(&[], 0).is_err());
    }

    #[test]
    fn folds_of_twenty_and_twenty_one() {
        let f = make_folds(20, 10, 3).unwrap();
        assert!(f.iter().all(|s| s.test.len() == 2));
        let mut sizes: Vec<usize> = make_folds(21, 10, 3).unwrap().iter().map(|s| s.test.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 2, 2, 2, 2, 2, 3]);
        assert_eq!(make_folds(21, 10, 3).unwrap(), make_folds(21, 10, 3).unwrap());
        assert!(make_folds(3, 10, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn folds_partition_the_corpus(n in 10usize..=200, seed in 0u64..100) {
            let folds = make_folds(n, 10, seed).unwrap();
            let mut seen = vec![0usize; n];
            for f in &folds {
                for &t in &f.test { seen[t] += 1; }
                prop_assert_eq!(f.train.len() + f.test.len(), n);
                prop_assert!(f.train.iter().all(|t| !f.test.contains(t)));
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
