//! Word-vector store and averaged-embedding text similarity.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Immutable token → vector map. Every vector has length `dim`.
#[derive(Debug, Clone, Default)]
pub struct WordVectorStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

/// Mean word vector of a text plus the share of its tokens found in the store.
#[derive(Debug, Clone, PartialEq)]
pub struct TextVector {
    pub values: Vec<f64>,
    pub coverage: f64,
}

impl WordVectorStore {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: HashMap::new() }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch { left: self.dim, right: vector.len() });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Reads a GloVe-style text file: `token v1 v2 ... vd` per line. The
    /// dimension is taken from the first line. With `vocab`, tokens outside
    /// it are skipped to bound memory.
    pub fn load(path: impl AsRef<Path>, vocab: Option<&HashSet<String>>) -> Result<Self, EmbeddingError> {
        Self::parse(BufReader::new(File::open(path)?), vocab)
    }

    pub fn parse(reader: impl BufRead, vocab: Option<&HashSet<String>>) -> Result<Self, EmbeddingError> {
        let mut store: Option<Self> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let values = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::Parse { line: i + 1, message: e.to_string() })?;
            if values.is_empty() {
                return Err(EmbeddingError::Parse { line: i + 1, message: "token without vector".into() });
            }
            let store = store.get_or_insert_with(|| Self::new(values.len()));
            if values.len() != store.dim {
                return Err(EmbeddingError::Parse {
                    line: i + 1,
                    message: format!("expected {} values, found {}", store.dim, values.len()),
                });
            }
            if vocab.is_none_or(|v| v.contains(token)) {
                store.vectors.insert(token.to_string(), values);
            }
        }
        Ok(store.unwrap_or_default())
    }

    /// Mean of the vectors of in-vocabulary tokens; the zero vector with
    /// coverage 0 when none are known.
    pub fn embed_text<S: AsRef<str>>(&self, tokens: &[S]) -> TextVector {
        let mut values = vec![0.0; self.dim];
        let mut found = 0usize;
        for t in tokens {
            if let Some(v) = self.vectors.get(t.as_ref()) {
                values.iter_mut().zip(v).for_each(|(a, x)| *a += x);
                found += 1;
            }
        }
        if found > 0 {
            values.iter_mut().for_each(|a| *a /= found as f64);
        }
        let coverage = if tokens.is_empty() { 0.0 } else { found as f64 / tokens.len() as f64 };
        TextVector { values, coverage }
    }
}

/// Cosine of two equal-length slices; 0 when either has zero norm.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn cosine(a: &TextVector, b: &TextVector) -> Result<f64, EmbeddingError> {
    cosine_slices(&a.values, &b.values)
}
