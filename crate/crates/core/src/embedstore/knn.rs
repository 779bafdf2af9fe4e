use super::{EmbeddingMatrix, SimilarityMetric};
use crate::error::{Error, Result};
use crate::metrics;

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
}

/// Similarity of two rows. Zero vectors (cosine) and constant vectors
/// (Pearson) score 0.
pub fn similarity(metric: SimilarityMetric, u: &[f64], v: &[f64]) -> f64 {
    match metric {
        SimilarityMetric::Cosine => cosine(u, v),
        SimilarityMetric::Pearson => metrics::pearson(u, v).unwrap_or(0.0),
    }
}

/// Exhaustive k-nearest neighbours of `query_id`, excluding itself, by
/// descending score with ties broken by ascending id.
pub fn knn_query(
    matrix: &EmbeddingMatrix,
    query_id: &str,
    k: usize,
    metric: SimilarityMetric,
) -> Result<Vec<(String, f64)>> {
    let qi = matrix.row_index(query_id).ok_or_else(|| Error::UnknownId(query_id.to_string()))?;
    if k > matrix.rows() - 1 {
        return Err(Error::invalid(format!("k = {k} exceeds the {} other rows", matrix.rows() - 1)));
    }
    let q = matrix.row(qi);
    let mut scored: Vec<(&str, f64)> = (0..matrix.rows())
        .filter(|&i| i != qi)
        .map(|i| (matrix.ids()[i].as_str(), similarity(metric, q, matrix.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(id, s)| (id.to_string(), s)).collect())
}
