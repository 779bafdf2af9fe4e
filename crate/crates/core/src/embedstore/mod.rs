//! Encoder input assembly, the in-memory embedding matrix, its binary store
//! and exhaustive nearest-neighbour queries.

mod knn;
mod store;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::AbstractRecord;
use crate::error::{Error, Result};

pub use knn::{knn_query, similarity};
pub use store::{decode_store, encode_store, read_store, write_store, STORE_MAGIC};

pub const SEPARATOR: &str = "[SEP]";

/// Text handed to an encoder: `title + " [SEP] " + abstract`, verbatim.
///
/// The leading classification token is not part of the string; each encoder
/// prepends its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderInput {
    pub text: String,
    /// The title or abstract already contained `[SEP]`.
    #[serde(skip)]
    pub embedded_separator: bool,
}

pub fn assemble_input(record: &AbstractRecord) -> EncoderInput {
    let embedded = record.title.contains(SEPARATOR) || record.abstract_text.contains(SEPARATOR);
    if embedded {
        log::warn!("record {:?} contains a literal {SEPARATOR} marker", record.id);
    }
    EncoderInput {
        text: format!("{} {SEPARATOR} {}", record.title, record.abstract_text),
        embedded_separator: embedded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMetric {
    Cosine,
    Pearson,
}

/// Row-per-document embeddings with unique ids and finite values.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl PartialEq for EmbeddingMatrix {
    /// Bitwise on values, so that `-0.0 != 0.0` and identical NaN payloads
    /// would compare equal (they cannot occur after validation anyway).
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.dim == other.dim
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = ids.len().checked_mul(dim).ok_or_else(|| Error::invalid("matrix size overflows"))?;
        if values.len() != expected {
            return Err(Error::Dimension { expected, actual: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim, col: pos % dim });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(EmbeddingMatrix { ids, dim, values, index })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension { expected: dim, actual: r.len() });
            }
            values.extend_from_slice(r);
        }
        Self::new(ids, dim, values)
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_by_id(&self, id: &str) -> Result<&[f64]> {
        self.row_index(id).map(|i| self.row(i)).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    /// Same ids, every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.ids.clone(), self.dim, self.values.iter().map(|v| v * factor).collect())
    }

    /// Rows reordered to follow `ids`.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let mut values = Vec::with_capacity(ids.len() * self.dim);
        for id in ids {
            values.extend_from_slice(self.row_by_id(id)?);
        }
        Self::new(ids.to_vec(), self.dim, values)
    }
}
