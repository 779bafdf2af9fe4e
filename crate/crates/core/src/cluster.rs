//! Lloyd's k-means with k-means++ seeding, and the purity sweep over
//! several cluster counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelIndex;
use crate::embedstore::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::metrics;

/// Cluster counts of the standard purity sweep.
pub const PURITY_KS: [usize; 4] = [10, 20, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMeansInit {
    KMeansPP,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once `(previous − current) / previous` inertia drops below this.
    pub rel_tol: f64,
    pub seed: u64,
    pub init: KMeansInit,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig { k: 10, max_iters: 300, rel_tol: 1e-6, seed: 0, init: KMeansInit::KMeansPP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after the initial assignment and after every iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub centroids: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_centroids(m: &EmbeddingMatrix, k: usize, init: KMeansInit, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = m.rows();
    match init {
        KMeansInit::Random => rand::seq::index::sample(rng, n, k).into_vec(),
        KMeansInit::KMeansPP => {
            let mut chosen = vec![rng.random_range(0..n)];
            let mut is_chosen = vec![false; n];
            is_chosen[chosen[0]] = true;
            let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(m.row(i), m.row(chosen[0]))).collect();
            while chosen.len() < k {
                let total: f64 = d2.iter().sum();
                let next = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut pick = None;
                    for (i, &d) in d2.iter().enumerate() {
                        if d <= 0.0 {
                            continue;
                        }
                        pick = Some(i);
                        if target < d {
                            break;
                        }
                        target -= d;
                    }
                    pick.expect("positive total has a positive entry")
                } else {
                    // Every remaining point coincides with a centroid.
                    let free: Vec<usize> = (0..n).filter(|&i| !is_chosen[i]).collect();
                    free[rng.random_range(0..free.len())]
                };
                is_chosen[next] = true;
                chosen.push(next);
                for (i, d) in d2.iter_mut().enumerate() {
                    *d = d.min(sq_dist(m.row(i), m.row(next)));
                }
            }
            chosen
        }
    }
}

/// Nearest centroid for every point. A point keeps its current cluster when
/// that is among the nearest; otherwise the lowest index wins.
fn assign(m: &EmbeddingMatrix, centroids: &[f64], k: usize, current: Option<&[usize]>, out: &mut [usize]) -> f64 {
    let d = m.dim();
    let mut inertia = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        let x = m.row(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let dc = sq_dist(x, &centroids[c * d..(c + 1) * d]);
            if dc < best_d {
                best = c;
                best_d = dc;
            }
        }
        if let Some(cur) = current {
            let c = cur[i];
            if sq_dist(x, &centroids[c * d..(c + 1) * d]) == best_d {
                best = c;
            }
        }
        *slot = best;
        inertia += best_d;
    }
    inertia
}

pub fn kmeans(m: &EmbeddingMatrix, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let (n, d, k) = (m.rows(), m.dim(), cfg.k);
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids: Vec<f64> =
        seed_centroids(m, k, cfg.init, &mut rng).into_iter().flat_map(|i| m.row(i).to_vec()).collect();
    let mut assignments = vec![0usize; n];
    let mut inertia = assign(m, &centroids, k, None, &mut assignments);
    let mut trace = vec![inertia];
    let mut iterations = 0;

    while iterations < cfg.max_iters && inertia > 0.0 {
        iterations += 1;
        // Update step, summed in point order.
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for (s, x) in sums[c * d..(c + 1) * d].iter_mut().zip(m.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centroids[c * d..(c + 1) * d].iter_mut().zip(&sums[c * d..(c + 1) * d]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
        // Empty clusters take the point farthest from its own centroid.
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| !taken[i])
                .map(|i| {
                    let a = assignments[i];
                    (i, sq_dist(m.row(i), &centroids[a * d..(a + 1) * d]))
                })
                .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            if far.0 == usize::MAX {
                break;
            }
            taken[far.0] = true;
            centroids[c * d..(c + 1) * d].copy_from_slice(m.row(far.0));
        }

        let prev = assignments.clone();
        let next = assign(m, &centroids, k, Some(&prev), &mut assignments);
        trace.push(next);
        let improvement = (inertia - next) / inertia;
        inertia = next;
        if assignments == prev || improvement < cfg.rel_tol {
            break;
        }
    }
    Ok(KMeansResult { assignments, inertia, inertia_trace: trace, iterations, centroids })
}

/// Lowest-inertia result over `restarts` runs seeded `seed, seed + 1, ...`.
pub fn kmeans_restarts(m: &EmbeddingMatrix, cfg: &KMeansConfig, restarts: usize) -> Result<KMeansResult> {
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let run = KMeansConfig { seed: cfg.seed.wrapping_add(r as u64), ..*cfg };
        let res = kmeans(m, &run)?;
        if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
            best = Some(res);
        }
    }
    Ok(best.unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityRow {
    pub k: usize,
    pub purity: f64,
    pub inertia: f64,
}

/// k-means at each `k` followed by purity against `truth`.
pub fn purity_sweep(
    m: &EmbeddingMatrix,
    truth: &[LabelIndex],
    ks: &[usize],
    seed: u64,
    restarts: usize,
) -> Result<Vec<PurityRow>> {
    if truth.len() != m.rows() {
        return Err(Error::Dimension { expected: m.rows(), actual: truth.len() });
    }
    ks.iter()
        .map(|&k| {
            let cfg = KMeansConfig { k, seed, ..KMeansConfig::default() };
            let res = kmeans_restarts(m, &cfg, restarts)?;
            Ok(PurityRow { k, purity: metrics::purity(&res.assignments, truth)?, inertia: res.inertia })
        })
        .collect()
}
