//! Word-vector storage, synonym retrieval, and the stop-word filter.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: unparseable vector entry")]
    ParseError(usize),
    #[error("line {0}: vector dimension differs from the first entry")]
    DimensionMismatch(usize),
    #[error("word {0:?} is not in the vector store")]
    UnknownWord(String),
}

#[derive(Debug, Clone)]
struct Entry<F> {
    vector: Vec<F>,
    norm: F,
}

/// In-memory embedding table with precomputed norms.
#[derive(Debug, Clone)]
pub struct VectorStore<F: Scalar = f64> {
    dim: usize,
    entries: HashMap<String, Entry<F>>,
}

/// One synonym candidate with its cosine to the query word.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<F: Scalar = f64> {
    pub word: String,
    pub cosine: F,
}

/// The top-k neighbor list for one word, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<F: Scalar = f64> {
    pub word: String,
    pub candidates: Vec<Candidate<F>>,
}

impl<F: Scalar> VectorStore<F> {
    /// Builds a store from (word, vector) pairs; later duplicates are ignored.
    /// Panics on inconsistent dimensions, which file loading reports as errors.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, Vec<F>)>) -> Self {
        let mut store = VectorStore {
            dim: 0,
            entries: HashMap::new(),
        };
        for (word, vector) in entries {
            if store.entries.is_empty() {
                store.dim = vector.len();
            }
            assert_eq!(vector.len(), store.dim, "inconsistent vector dimensions");
            let norm = vector.iter().map(|v| *v * *v).sum::<F>().sqrt();
            store.entries.entry(word).or_insert(Entry { vector, norm });
        }
        store
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[F]> {
        self.entries.get(word).map(|e| e.vector.as_slice())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Cosine similarity between two stored words, when both exist and have
    /// nonzero norms.
    pub fn cosine(&self, a: &str, b: &str) -> Option<F> {
        let ea = self.entries.get(a)?;
        let eb = self.entries.get(b)?;
        cosine_between(ea, eb)
    }

    /// The `k` nearest neighbors of `word` by cosine, excluding the word
    /// itself, ties broken lexicographically. Zero-norm entries on either
    /// side are skipped.
    pub fn top_k_synonyms(&self, word: &str, k: usize) -> Result<CandidateSet<F>, StoreError> {
        let query = self
            .entries
            .get(word)
            .ok_or_else(|| StoreError::UnknownWord(word.to_string()))?;
        let mut scored: Vec<Candidate<F>> = self
            .entries
            .iter()
            .filter(|(other, _)| other.as_str() != word)
            .filter_map(|(other, entry)| {
                cosine_between(query, entry).map(|cosine| Candidate {
                    word: other.clone(),
                    cosine,
                })
            })
            .collect();
        scored.sort_by(|a, b| {
            b.cosine
                .partial_cmp(&a.cosine)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.word.cmp(&b.word))
        });
        scored.truncate(k);
        Ok(CandidateSet {
            word: word.to_string(),
            candidates: scored,
        })
    }

    /// Writes the store as `word v1 .. vd` lines, sorted by word.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        for word in words {
            write!(file, "{word}")?;
            for v in &self.entries[word].vector {
                write!(file, " {v}")?;
            }
            writeln!(file)?;
        }
        Ok(())
    }
}

fn cosine_between<F: Scalar>(a: &Entry<F>, b: &Entry<F>) -> Option<F> {
    if a.norm == F::zero() || b.norm == F::zero() {
        return None;
    }
    let dot = a
        .vector
        .iter()
        .zip(&b.vector)
        .map(|(x, y)| *x * *y)
        .sum::<F>();
    Some(dot / (a.norm * b.norm))
}

/// Loads a text vector file: one `word v1 .. vd` entry per line, with an
/// optional `count dim` header. The dimension is fixed by the first data
/// line; duplicate words keep their first entry.
pub fn load_vectors<F: Scalar>(path: impl AsRef<Path>) -> Result<VectorStore<F>, StoreError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut entries: Vec<(String, Vec<F>)> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut seen: HashSet<String> = HashSet::new();

    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            continue;
        }
        if fields.len() < 2 {
            return Err(StoreError::ParseError(line_no));
        }
        let word = fields[0].to_string();
        let mut vector = Vec::with_capacity(fields.len() - 1);
        for field in &fields[1..] {
            let value: f64 = field.parse().map_err(|_| StoreError::ParseError(line_no))?;
            if !value.is_finite() {
                return Err(StoreError::ParseError(line_no));
            }
            vector.push(F::from_config(value));
        }
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(StoreError::DimensionMismatch(line_no));
            }
            Some(_) => {}
        }
        if seen.insert(word.clone()) {
            entries.push((word, vector));
        }
    }
    Ok(VectorStore::from_entries(entries))
}

/// Case-insensitive membership list of words never selected for substitution.
#[derive(Debug, Clone)]
pub struct StopWordList {
    words: HashSet<String>,
}

const BUNDLED_STOP_WORDS: &str = include_str!("../data/stopwords.txt");

impl Default for StopWordList {
    fn default() -> Self {
        StopWordList::from_words(BUNDLED_STOP_WORDS.lines())
    }
}

impl StopWordList {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopWordList {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        StopWordList {
            words: HashSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }
}
