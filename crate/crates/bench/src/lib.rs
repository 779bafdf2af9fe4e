//! Seeded inputs shared by the benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scidoc_core::EmbeddingMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × dim` matrix with entries uniform in [-1, 1).
pub fn random_matrix(seed: u64, rows: usize, dim: usize) -> EmbeddingMatrix {
    let mut r = rng(seed);
    let values = (0..rows * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let ids = (0..rows).map(|i| format!("d{i:06}")).collect();
    EmbeddingMatrix::new(ids, dim, values).expect("finite values, unique ids")
}

pub fn random_scores(seed: u64, n: usize) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let scores = (0..n).map(|_| r.random::<f64>()).collect();
    let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.3)).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

pub fn random_labels(seed: u64, n: usize, classes: usize) -> Vec<usize> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(0..classes)).collect()
}
