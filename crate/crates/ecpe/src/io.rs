//! Text formats: corpus and prediction JSONL, lexicon lists and
//! whitespace-separated embedding files.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use epo_core::corpus::{Document, Lexicon, Pair, Vocabulary, PAD_ID};
use epo_core::extractor::Prediction;
use epo_core::params::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One corpus line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocRecord {
    pub doc_id: String,
    pub clauses: Vec<Vec<String>>,
    #[serde(default)]
    pub pairs: Vec<Pair>,
}

impl From<&Document> for DocRecord {
    fn from(doc: &Document) -> Self {
        DocRecord {
            doc_id: doc.doc_id.clone(),
            clauses: doc.clauses.iter().map(|c| c.tokens.clone()).collect(),
            pairs: doc.gold_pairs.iter().copied().collect(),
        }
    }
}

/// One prediction line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub pairs: Vec<Pair>,
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    Ok(open(path)?.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        let file = w.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    for (line_no, line) in lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(rec.doc_id.clone()) {
            return Err(Error::Validation { doc_id: rec.doc_id, reason: "duplicate doc_id".into() });
        }
        docs.push(Document::new(rec.doc_id, rec.clauses, rec.pairs)?);
    }
    Ok(docs)
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let items: Vec<T> = items.into_iter().collect();
    write_atomic(path, |w| {
        for item in &items {
            serde_json::to_writer(&mut *w, item)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

pub fn save_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    write_jsonl(path, docs.iter().map(DocRecord::from))
}

/// One word per line; blank lines and lines starting with `#` are skipped.
pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let mut words = Vec::new();
    for (_, line) in lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        let word = line.trim();
        if !word.is_empty() && !word.starts_with('#') {
            words.push(word.to_string());
        }
    }
    Ok(Lexicon::new(words))
}

pub fn save_lexicon(path: &Path, lexicon: &Lexicon) -> Result<()> {
    write_atomic(path, |w| {
        for word in lexicon.iter() {
            writeln!(w, "{word}")?;
        }
        Ok(())
    })
}

pub fn save_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    write_jsonl(
        path,
        predictions
            .iter()
            .map(|p| PredictionRecord { doc_id: p.doc_id.clone(), pairs: p.pairs.iter().copied().collect() }),
    )
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (line_no, line) in lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Parsed embedding file, independent of any vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl Embeddings {
    /// Reads `token v1 ... v_dim` lines. A leading `count dim` header line,
    /// as written by word2vec, is skipped.
    pub fn read(path: &Path, dim: usize) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (line_no, line) in lines(path)? {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let values: Vec<&str> = fields.collect();
            if line_no == 1 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok()
            {
                continue;
            }
            if values.len() != dim {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message: format!(
                        "line {line_no}: token {token:?} has {} values, expected {dim}",
                        values.len()
                    ),
                });
            }
            let vec = values
                .iter()
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Format {
                    path: path.to_path_buf(),
                    message: format!("line {line_no}: token {token:?} has a non-numeric value"),
                })?;
            vectors.insert(token.to_string(), vec);
        }
        Ok(Embeddings { dim, vectors })
    }

    /// `V × dim` table: file rows copied, every other row uniform in
    /// `[-0.1, 0.1]` from `seed`, padding row zero.
    pub fn table(&self, vocab: &Vocabulary, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let mut t = Tensor::zeros(vocab.len(), self.dim);
        for id in 0..vocab.len() as u32 {
            let row = t.row_mut(id as usize);
            for x in row.iter_mut() {
                *x = rng.gen_range(-0.1..=0.1);
            }
            if id == PAD_ID {
                row.fill(0.0);
            } else if let Some(v) = vocab.token(id).and_then(|tok| self.vectors.get(tok)) {
                row.copy_from_slice(v);
            }
        }
        t
    }

    /// Vocabulary tokens (excluding the reserved rows) present in the file.
    pub fn coverage(&self, vocab: &Vocabulary) -> usize {
        vocab.corpus_tokens().iter().filter(|t| self.vectors.contains_key(t.as_str())).count()
    }
}

pub fn load_embeddings(path: &Path, vocab: &Vocabulary, dim: usize, seed: u64) -> Result<Tensor> {
    Ok(Embeddings::read(path, dim)?.table(vocab, seed))
}
