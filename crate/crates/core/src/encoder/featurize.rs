//! Signed feature hashing of lowercase word tokens.
//!
//! Tokens are maximal runs of alphanumeric characters after lowercasing.
//! Each token is hashed with 64-bit FNV-1a over `seed.to_le_bytes()`
//! followed by the token's UTF-8 bytes; the bucket is `h % feature_dim` and
//! the sign is `+1` when the top bit of `h` is clear, `-1` otherwise. Counts
//! are accumulated per bucket, zero buckets dropped, and the vector
//! L2-normalized.

use serde::{Deserialize, Serialize};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Sparse vector with strictly increasing indices and no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

fn fnv1a(seed: u64, token: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Bucket and sign for one token.
pub fn hash_token(token: &str, feature_dim: usize, seed: u64) -> (usize, f64) {
    let h = fnv1a(seed, token);
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    ((h % feature_dim as u64) as usize, sign)
}

pub fn featurize(text: &str, feature_dim: usize, seed: u64) -> SparseVector {
    assert!(feature_dim >= 2, "feature_dim must be at least 2");
    let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
    for tok in tokenize(text) {
        let (bucket, sign) = hash_token(&tok, feature_dim, seed);
        *acc.entry(bucket).or_insert(0.0) += sign;
    }
    acc.retain(|_, v| *v != 0.0);
    let norm = acc.values().map(|v| v * v).sum::<f64>().sqrt();
    SparseVector { indices: acc.keys().map(|&k| k as u32).collect(), values: acc.values().map(|v| v / norm).collect() }
}
