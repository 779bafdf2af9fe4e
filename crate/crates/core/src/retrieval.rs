//! Pairwise retrieval evaluation within arXiv fields: two papers are
//! relevant to each other iff their subcategory sets intersect; pairs are
//! ranked by the Pearson correlation of their embeddings and scored with
//! average precision and AUC.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AbstractRecord, SubcategoryTaxonomy};
use crate::embedstore::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::metrics;

pub const DEFAULT_MAX_PAIRS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub id_a: String,
    pub id_b: String,
    pub relevant: bool,
}

/// Document id with the subcategories used for relevance.
#[derive(Debug, Clone)]
pub struct PairItem<'a> {
    pub id: &'a str,
    pub subcategories: BTreeSet<&'a str>,
}

fn intersects(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> bool {
    // Walk the smaller set.
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().any(|s| large.contains(s))
}

/// Unordered pair `(i, j)`, `i < j`, at row-major position `linear` among the
/// `n(n−1)/2` pairs. `offsets[i]` is the position of `(i, i+1)`.
fn decode_pair(offsets: &[u64], linear: u64) -> (usize, usize) {
    let i = offsets.partition_point(|&o| o <= linear) - 1;
    let j = i + 1 + (linear - offsets[i]) as usize;
    (i, j)
}

/// All unordered pairs when there are at most `max_pairs`; otherwise a
/// uniform sample of `max_pairs` distinct pairs drawn with `seed`. Pairs come
/// back in row-major order of the input.
pub fn build_pairs_from(items: &[PairItem<'_>], max_pairs: usize, seed: u64) -> Result<Vec<LabeledPair>> {
    let n = items.len();
    if n < 2 {
        return Err(Error::invalid("need at least 2 records to build pairs"));
    }
    if let Some(bad) = items.iter().find(|it| it.subcategories.is_empty()) {
        return Err(Error::invalid(format!("record {:?} has no subcategories", bad.id)));
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let make = |i: usize, j: usize| LabeledPair {
        id_a: items[i].id.to_string(),
        id_b: items[j].id.to_string(),
        relevant: intersects(&items[i].subcategories, &items[j].subcategories),
    };
    if total <= max_pairs as u64 {
        let mut out = Vec::with_capacity(total as usize);
        for i in 0..n {
            for j in i + 1..n {
                out.push(make(i, j));
            }
        }
        return Ok(out);
    }
    let total_usize = usize::try_from(total).map_err(|_| Error::invalid("too many pairs"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, total_usize, max_pairs).into_vec();
    picks.sort_unstable();
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0u64;
    for i in 0..n {
        offsets.push(acc);
        acc += (n - 1 - i) as u64;
    }
    // Rows with no pairs (the last) share the final offset; partition_point
    // still lands on the last row that owns `linear`.
    Ok(picks
        .into_iter()
        .map(|l| {
            let (i, j) = decode_pair(&offsets[..n - 1], l as u64);
            make(i, j)
        })
        .collect())
}

/// Pairs over records of one field using each record's full subcategory set.
pub fn build_pairs(records: &[AbstractRecord], max_pairs: usize, seed: u64) -> Result<Vec<LabeledPair>> {
    let items: Vec<PairItem<'_>> = records
        .iter()
        .map(|r| PairItem { id: &r.id, subcategories: r.subcategories.iter().map(String::as_str).collect() })
        .collect();
    build_pairs_from(&items, max_pairs, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub id_a: String,
    pub id_b: String,
    pub score: f64,
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPairSet {
    pub field: String,
    /// Sorted by descending score, ties by `(id_a, id_b)` ascending.
    pub pairs: Vec<ScoredPair>,
    pub positives: usize,
    pub negatives: usize,
    /// Pairs where a row had zero variance; they score 0.
    pub zero_variance_pairs: usize,
    pub average_precision: f64,
    pub auc: f64,
}

/// Scores every pair by Pearson correlation and computes AP and AUC.
pub fn score_field(field: &str, embeddings: &EmbeddingMatrix, pairs: &[LabeledPair]) -> Result<RankedPairSet> {
    let mut zero_var = 0;
    let mut scored = Vec::with_capacity(pairs.len());
    for p in pairs {
        let a = embeddings.row_by_id(&p.id_a)?;
        let b = embeddings.row_by_id(&p.id_b)?;
        let score = match metrics::pearson(a, b) {
            Ok(r) => r,
            Err(Error::ZeroVariance) => {
                zero_var += 1;
                0.0
            }
            Err(e) => return Err(e),
        };
        scored.push(ScoredPair { id_a: p.id_a.clone(), id_b: p.id_b.clone(), score, relevant: p.relevant });
    }
    let positives = scored.iter().filter(|p| p.relevant).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid(format!("field {field:?}: pairs must include both relevant and irrelevant labels")));
    }
    scored.sort_by(|x, y| {
        y.score.total_cmp(&x.score).then_with(|| x.id_a.cmp(&y.id_a)).then_with(|| x.id_b.cmp(&y.id_b))
    });
    let ranked: Vec<bool> = scored.iter().map(|p| p.relevant).collect();
    let scores: Vec<f64> = scored.iter().map(|p| p.score).collect();
    Ok(RankedPairSet {
        field: field.to_string(),
        average_precision: metrics::average_precision(&ranked)?,
        auc: metrics::auc(&scores, &ranked)?,
        positives,
        negatives,
        zero_variance_pairs: zero_var,
        pairs: scored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScore {
    pub field: String,
    pub records: usize,
    pub pairs: usize,
    pub positives: usize,
    /// `None` when the field could not be scored; see `absent_reason`.
    pub average_precision: Option<f64>,
    pub auc: Option<f64>,
    pub absent_reason: Option<String>,
}

impl FieldScore {
    pub fn is_present(&self) -> bool {
        self.average_precision.is_some()
    }
}

/// One row per taxonomy field, in taxonomy order. A record belongs to a
/// field when one of its field labels is an archive of that field and it
/// carries at least one of the field's subcategories; only those
/// subcategories decide relevance. Fields with fewer than two such records,
/// or whose pairs are all relevant or all irrelevant, are reported absent.
pub fn evaluate_all_fields(
    corpus: &[AbstractRecord],
    embeddings: &EmbeddingMatrix,
    taxonomy: &SubcategoryTaxonomy,
    max_pairs: usize,
    seed: u64,
) -> Result<Vec<FieldScore>> {
    let mut rows = Vec::with_capacity(taxonomy.fields.len());
    for (fi, field) in taxonomy.fields.iter().enumerate() {
        let items: Vec<PairItem<'_>> = corpus
            .iter()
            .filter(|r| field.covers(r))
            .map(|r| PairItem { id: &r.id, subcategories: field.restrict(r) })
            .filter(|it| !it.subcategories.is_empty())
            .collect();
        let absent = |reason: String, pairs: usize, positives: usize| FieldScore {
            field: field.field.clone(),
            records: items.len(),
            pairs,
            positives,
            average_precision: None,
            auc: None,
            absent_reason: Some(reason),
        };
        if items.len() < 2 {
            rows.push(absent(format!("{} eligible records", items.len()), 0, 0));
            continue;
        }
        let pairs = build_pairs_from(&items, max_pairs, seed.wrapping_add(fi as u64))?;
        let positives = pairs.iter().filter(|p| p.relevant).count();
        if positives == 0 || positives == pairs.len() {
            rows.push(absent("pairs are single-class".into(), pairs.len(), positives));
            continue;
        }
        let ranked = score_field(&field.field, embeddings, &pairs)?;
        rows.push(FieldScore {
            field: field.field.clone(),
            records: items.len(),
            pairs: pairs.len(),
            positives,
            average_precision: Some(ranked.average_precision),
            auc: Some(ranked.auc),
            absent_reason: None,
        });
    }
    Ok(rows)
}

/// Mean AP over the fields that could be scored.
pub fn mean_average_precision(rows: &[FieldScore]) -> Option<f64> {
    let aps: Vec<f64> = rows.iter().filter_map(|r| r.average_precision).collect();
    (!aps.is_empty()).then(|| metrics::mean(&aps))
}
