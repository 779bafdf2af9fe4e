//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

pub mod criteria;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use scidoc_core::encoder::{mean_loss, Gradients, SparseVector, ToyEncoderParams};
use scidoc_core::EmbeddingMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let mut hits = 0usize;
    for i in 0..pred.len() {
        if pred[i] == truth[i] {
            hits += 1;
        }
    }
    hits as f64 / pred.len() as f64
}

/// Per-class F1 from explicit confusion counts, averaged over classes that
/// occur in either list.
pub fn macro_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> f64 {
    let mut total = 0.0;
    let mut used = 0usize;
    for c in 0..n_classes {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fneg = 0.0;
        for i in 0..pred.len() {
            match (pred[i] == c, truth[i] == c) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                _ => {}
            }
        }
        if tp + fp + fneg == 0.0 {
            continue;
        }
        used += 1;
        if tp == 0.0 {
            continue;
        }
        let p = tp / (tp + fp);
        let r = tp / (tp + fneg);
        total += 2.0 * p * r / (p + r);
    }
    total / used as f64
}

pub fn purity(clusters: &[usize], truth: &[usize]) -> f64 {
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (c, t) in clusters.iter().zip(truth) {
        *table.entry(*c).or_default().entry(*t).or_default() += 1;
    }
    let hit: usize = table.values().map(|row| *row.values().max().unwrap()).sum();
    hit as f64 / clusters.len() as f64
}

/// Precision at every positive position, term by term.
pub fn average_precision(ranked: &[bool]) -> f64 {
    let mut terms = Vec::new();
    for k in 0..ranked.len() {
        if ranked[k] {
            let hits = ranked[..=k].iter().filter(|&&b| b).count();
            terms.push(hits as f64 / (k + 1) as f64);
        }
    }
    terms.iter().sum::<f64>() / terms.len() as f64
}

/// Mann-Whitney over every (positive, negative) pair, ties counted 1/2.
/// Returned as the exact fraction (twice the wins, twice the pair count).
pub fn auc_fraction(scores: &[f64], labels: &[bool]) -> (u64, u64) {
    let mut twice_wins = 0u64;
    let mut pairs = 0u64;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1;
                if scores[i] > scores[j] {
                    twice_wins += 2;
                } else if scores[i] == scores[j] {
                    twice_wins += 1;
                }
            }
        }
    }
    (twice_wins, 2 * pairs)
}

pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (w, p) = auc_fraction(scores, labels);
    w as f64 / p as f64
}

pub fn pearson(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..u.len() {
        sxy += (u[i] - mu) * (v[i] - mv);
        sxx += (u[i] - mu).powi(2);
        syy += (v[i] - mv).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// P(|T| <= t) for Student's t with integer `df`, by the finite
/// trigonometric series for odd and even degrees of freedom.
pub fn student_t_central(t: f64, df: u32) -> f64 {
    let theta = (t / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut k = 1;
            while 2 * k + 1 < df {
                term *= c2 * (2 * k) as f64 / (2 * k + 1) as f64;
                sum += term;
                k += 1;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k < df {
            term *= c2 * (2 * k - 1) as f64 / (2 * k) as f64;
            sum += term;
            k += 1;
        }
        s * sum
    }
}

/// Pooled two-sample t statistic and two-sided p.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> (f64, u32, f64) {
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let ss = |x: &[f64], m: f64| x.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    let (ma, mb) = (mean(a), mean(b));
    let df = (a.len() + b.len() - 2) as u32;
    let sp2 = (ss(a, ma) + ss(b, mb)) / df as f64;
    let se = (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    let t = (ma - mb) / se;
    (t, df, 1.0 - student_t_central(t.abs(), df))
}

pub fn random_sparse<R: Rng>(r: &mut R, dim: usize, nnz: usize) -> SparseVector {
    let mut idx: Vec<u32> = rand::seq::index::sample(r, dim, nnz).into_iter().map(|i| i as u32).collect();
    idx.sort_unstable();
    let values = idx.iter().map(|_| r.random_range(-1.0..1.0)).collect();
    SparseVector { indices: idx, values }
}

pub fn random_params<R: Rng>(r: &mut R, feature_dim: usize, hidden: usize, n: usize) -> ToyEncoderParams {
    let mut p = ToyEncoderParams::zeros(feature_dim, hidden, n, 0);
    let g = Normal::new(0.0, 0.5).unwrap();
    for block in [&mut p.w1, &mut p.b1, &mut p.w2, &mut p.b2] {
        block.iter_mut().for_each(|w| *w = g.sample(r));
    }
    p
}

fn block_mut(p: &mut ToyEncoderParams, b: usize) -> &mut Vec<f64> {
    match b {
        0 => &mut p.w1,
        1 => &mut p.b1,
        2 => &mut p.w2,
        _ => &mut p.b2,
    }
}

/// Largest per-block relative error between analytic gradients and central
/// differences of the mean loss, `‖a − f‖ / max(‖a‖, ‖f‖)`.
pub fn gradient_check(p: &ToyEncoderParams, batch: &[(&SparseVector, usize)], g: &Gradients, step: f64) -> f64 {
    let analytic = [&g.w1, &g.b1, &g.w2, &g.b2];
    let mut worst: f64 = 0.0;
    for b in 0..4 {
        let mut q = p.clone();
        let len = block_mut(&mut q, b).len();
        let mut diff2 = 0.0;
        let mut a2 = 0.0;
        let mut f2 = 0.0;
        for i in 0..len {
            let orig = block_mut(&mut q, b)[i];
            block_mut(&mut q, b)[i] = orig + step;
            let up = mean_loss(&q, batch).unwrap();
            block_mut(&mut q, b)[i] = orig - step;
            let down = mean_loss(&q, batch).unwrap();
            block_mut(&mut q, b)[i] = orig;
            let f = (up - down) / (2.0 * step);
            let a = analytic[b][i];
            diff2 += (a - f).powi(2);
            a2 += a * a;
            f2 += f * f;
        }
        let denom = a2.sqrt().max(f2.sqrt());
        if denom > 0.0 {
            worst = worst.max(diff2.sqrt() / denom);
        }
    }
    worst
}

/// Gaussian blobs with unit variance around the given centers; ids are
/// zero-padded so lexical and row order agree.
pub fn blobs(seed: u64, centers: &[Vec<f64>], per_blob: usize, sigma: f64) -> (EmbeddingMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let g = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            rows.push(center.iter().map(|x| x + g.sample(&mut r)).collect::<Vec<f64>>());
            truth.push(c);
        }
    }
    let ids = (0..rows.len()).map(|i| format!("p{i:05}")).collect();
    (EmbeddingMatrix::from_rows(ids, &rows).unwrap(), truth)
}

/// Leave-nothing-out nearest-centroid accuracy (training accuracy of the
/// centroid rule), used as a separability reference.
pub fn nearest_centroid_accuracy(rows: &[Vec<f64>], truth: &[usize], n_classes: usize) -> f64 {
    let d = rows[0].len();
    let mut sums = vec![vec![0.0; d]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (x, &t) in rows.iter().zip(truth) {
        counts[t] += 1;
        for (s, v) in sums[t].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= c.max(1) as f64);
    }
    let mut hits = 0;
    for (x, &t) in rows.iter().zip(truth) {
        let best = (0..n_classes)
            .filter(|&c| counts[c] > 0)
            .min_by(|&a, &b| {
                let da: f64 = x.iter().zip(&sums[a]).map(|(p, q)| (p - q).powi(2)).sum();
                let db: f64 = x.iter().zip(&sums[b]).map(|(p, q)| (p - q).powi(2)).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        if best == t {
            hits += 1;
        }
    }
    hits as f64 / rows.len() as f64
}

pub fn matrix_rows(m: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}
