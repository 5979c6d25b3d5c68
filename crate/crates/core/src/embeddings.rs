//! Pre-trained word embeddings in GloVe text format.
//!
//! Each line holds a key followed by its components, separated by spaces:
//!
//! *word c_1 c_2 … c_d*
//!
//! Keys are lowercased on load and on lookup.

use std::collections::HashMap;
use std::io::{self, BufRead};

use log::warn;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected {expected} components, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid component '{value}'")]
    InvalidNumber { line: usize, value: String },
    #[error("line {line}: no components after key")]
    MissingVector { line: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<String>,
    vectors: Vec<f64>,
    index: HashMap<String, usize>,
    oov: Vec<f64>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Keys in first-seen order.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(&key.to_lowercase()).copied()
    }

    /// Vector for `key` (lowercased), or the out-of-vocabulary vector.
    pub fn lookup(&self, key: &str) -> &[f64] {
        match self.index_of(key) {
            Some(i) => self.vector(i),
            None => &self.oov,
        }
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn oov(&self) -> &[f64] {
        &self.oov
    }
}

pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut dim = None;
    let mut keys = Vec::new();
    let mut vectors = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else { continue };
        let values = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| EmbeddingError::InvalidNumber {
                    line: lineno,
                    value: p.to_owned(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(EmbeddingError::MissingVector { line: lineno });
        }
        let d = *dim.get_or_insert(values.len());
        if values.len() != d {
            return Err(EmbeddingError::Ragged {
                line: lineno,
                expected: d,
                found: values.len(),
            });
        }
        let key = key.to_lowercase();
        match index.get(&key) {
            Some(&row) => {
                warn!("embedding key '{key}' repeated on line {lineno}; keeping the last vector");
                vectors[row * d..(row + 1) * d].copy_from_slice(&values);
            }
            None => {
                index.insert(key.clone(), keys.len());
                keys.push(key);
                vectors.extend(values);
            }
        }
    }

    let dim = dim.unwrap_or(0);
    Ok(EmbeddingTable {
        dim,
        keys,
        vectors,
        index,
        oov: vec![0.0; dim],
    })
}
