//! Scoring functions shared by the probe, clustering and retrieval
//! evaluations. All functions are pure.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::LabelIndex;
use crate::error::{Error, Result};

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension { expected: a, actual: b });
    }
    if a == 0 {
        return Err(Error::invalid("empty input"));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy(predictions: &[LabelIndex], truth: &[LabelIndex]) -> Result<f64> {
    same_len(predictions.len(), truth.len())?;
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Unweighted mean of per-class F1 over the classes that occur in either
/// `predictions` or `truth`. A class with no true positives scores 0.
pub fn macro_f1(predictions: &[LabelIndex], truth: &[LabelIndex], n_classes: usize) -> Result<f64> {
    same_len(predictions.len(), truth.len())?;
    let mut tp = vec![0usize; n_classes];
    let mut pred_count = vec![0usize; n_classes];
    let mut true_count = vec![0usize; n_classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::invalid(format!("label {} outside 0..{n_classes}", p.max(t))));
        }
        pred_count[p] += 1;
        true_count[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..n_classes {
        if pred_count[c] == 0 && true_count[c] == 0 {
            continue;
        }
        present += 1;
        if tp[c] == 0 {
            continue;
        }
        let precision = tp[c] as f64 / pred_count[c] as f64;
        let recall = tp[c] as f64 / true_count[c] as f64;
        sum += 2.0 * precision * recall / (precision + recall);
    }
    Ok(sum / present as f64)
}

/// Pearson correlation, treating vector positions as samples.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    same_len(u.len(), v.len())?;
    if u.len() < 2 {
        return Err(Error::invalid("pearson needs at least 2 samples"));
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut cov, mut su, mut sv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        cov += da * db;
        su += da * da;
        sv += db * db;
    }
    if su == 0.0 || sv == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (su.sqrt() * sv.sqrt())).clamp(-1.0, 1.0))
}

/// Σ over clusters of the size of the cluster's most frequent class,
/// divided by the number of documents.
pub fn purity(clusters: &[usize], truth: &[LabelIndex]) -> Result<f64> {
    same_len(clusters.len(), truth.len())?;
    let mut counts: HashMap<usize, HashMap<LabelIndex, usize>> = HashMap::new();
    for (&c, &t) in clusters.iter().zip(truth) {
        *counts.entry(c).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = counts.values().map(|per_class| per_class.values().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / truth.len() as f64)
}

/// Mean over relevant positions k (1-based) of precision@k. `ranked` is
/// already in rank order.
pub fn average_precision(ranked: &[bool]) -> Result<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in ranked.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::invalid("average precision needs at least one positive"));
    }
    Ok(sum / hits as f64)
}

/// Sorts by descending score (stable, so ties keep input order) and returns
/// the permutation.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Average precision of `labels` ranked by descending `scores`.
pub fn average_precision_scored(scores: &[f64], labels: &[bool]) -> Result<f64> {
    same_len(scores.len(), labels.len())?;
    let ranked: Vec<bool> = rank_descending(scores).into_iter().map(|i| labels[i]).collect();
    average_precision(&ranked)
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs where the
/// positive scores higher, ties counting one half. Computed from mid-ranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    same_len(scores.len(), labels.len())?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("AUC needs both positive and negative labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum keeps mid-ranks integral.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share the mid-rank (i+j+2)/2.
        let mid_x2 = (i + j + 2) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        rank_sum_x2 += mid_x2 * pos_in_group;
        i = j + 1;
    }
    let np = n_pos as u128;
    let u_x2 = rank_sum_x2 - np * (np + 1);
    Ok(u_x2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator); 0 for a single value.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Scores from repeated runs or folds of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreSample(Vec<f64>);

impl ScoreSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("score sample is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("score sample has non-finite values"));
        }
        Ok(ScoreSample(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ScoreSample {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ScoreSample::new(v)
    }
}

impl From<ScoreSample> for Vec<f64> {
    fn from(s: ScoreSample) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    /// Equal-variance (Student) test.
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Two-sided unpaired t-test of mean(a) − mean(b).
pub fn unpaired_t_test(a: &ScoreSample, b: &ScoreSample, variant: TTestVariant) -> Result<TTest> {
    let (a, b) = (a.values(), b.values());
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("t-test needs at least 2 values per sample"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let (se2, df) = match variant {
        TTestVariant::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            (pooled * (1.0 / na + 1.0 / nb), df)
        }
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            (se2, df)
        }
    };
    if se2 == 0.0 {
        if ma == mb {
            return Ok(TTest { t: 0.0, df, p: 1.0 });
        }
        return Err(Error::DegenerateTTest);
    }
    let t = (ma - mb) / se2.sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, df, p })
}
