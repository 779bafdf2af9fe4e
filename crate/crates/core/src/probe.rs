//! Linear evaluation of frozen embeddings: multinomial logistic regression
//! trained by plain mini-batch gradient descent under stratified k-fold
//! cross-validation, keeping the epoch snapshot with the best validation
//! accuracy.
//!
//! The held-out fold is used both to pick the snapshot and to score it.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelIndex;
use crate::embedstore::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::metrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub folds: usize,
    /// L2 penalty on the weights.
    pub regularization: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { lr: 5e-4, batch: 100, epochs: 5, folds: 4, regularization: 0.0, runs: 3, seed: 0 }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid("probe needs folds >= 2"));
        }
        if self.epochs < 1 || self.batch < 1 || self.runs < 1 {
            return Err(Error::invalid("probe needs epochs, batch and runs >= 1"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0 && self.regularization.is_finite() && self.regularization >= 0.0) {
            return Err(Error::invalid("lr and regularization must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub run: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// 1-based epoch of the kept snapshot.
    pub best_epoch: usize,
    pub val_accuracy_by_epoch: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub per_fold: Vec<FoldScore>,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub runs: usize,
    pub n_classes: usize,
}

impl ProbeResult {
    /// Means and sample standard deviations over every (run, fold) entry.
    pub fn aggregate(per_fold: Vec<FoldScore>, runs: usize, n_classes: usize) -> Self {
        let acc: Vec<f64> = per_fold.iter().map(|f| f.accuracy).collect();
        let f1: Vec<f64> = per_fold.iter().map(|f| f.macro_f1).collect();
        ProbeResult {
            mean_acc: metrics::mean(&acc),
            std_acc: metrics::sample_std(&acc),
            mean_f1: metrics::mean(&f1),
            std_f1: metrics::sample_std(&f1),
            per_fold,
            runs,
            n_classes,
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.per_fold.iter().map(|f| f.accuracy).collect()
    }

    pub fn f1s(&self) -> Vec<f64> {
        self.per_fold.iter().map(|f| f.macro_f1).collect()
    }
}

/// A train / validation index split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Class-stratified k-fold split. Each class's indices are shuffled and dealt
/// to folds with one cursor shared across classes (classes in ascending
/// order), so every class is spread as evenly as possible and classes
/// smaller than `folds` fall out as round-robin. Both index lists come back
/// sorted.
pub fn stratified_folds(labels: &[LabelIndex], folds: usize, seed: u64) -> Result<Vec<Split>> {
    if folds < 2 {
        return Err(Error::invalid("folds must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); folds];
    let mut cursor = 0;
    for mut members in by_class {
        members.shuffle(&mut rng);
        for i in members {
            assigned[cursor].push(i);
            cursor = (cursor + 1) % folds;
        }
    }
    Ok(assigned
        .into_iter()
        .map(|mut validation| {
            validation.sort_unstable();
            let mut in_val = vec![false; labels.len()];
            validation.iter().for_each(|&i| in_val[i] = true);
            let train = (0..labels.len()).filter(|&i| !in_val[i]).collect();
            Split { train, validation }
        })
        .collect())
}

/// Softmax regression weights: `w` is `dim × n_classes` row-major.
#[derive(Debug, Clone)]
struct Linear {
    n_classes: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Linear {
    fn zeros(dim: usize, n_classes: usize) -> Self {
        Linear { n_classes, w: vec![0.0; dim * n_classes], b: vec![0.0; n_classes] }
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.b.clone();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let row = &self.w[j * self.n_classes..(j + 1) * self.n_classes];
            for (zc, w) in z.iter_mut().zip(row) {
                *zc += xj * w;
            }
        }
        z
    }

    fn predict(&self, x: &[f64]) -> LabelIndex {
        let z = self.logits(x);
        let mut best = 0;
        for (c, &v) in z.iter().enumerate() {
            if v > z[best] {
                best = c;
            }
        }
        best
    }

    fn step(&mut self, m: &EmbeddingMatrix, labels: &[LabelIndex], batch: &[usize], lr: f64, reg: f64) {
        let c = self.n_classes;
        let mut gw = vec![0.0; self.w.len()];
        let mut gb = vec![0.0; c];
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let x = m.row(i);
            let mut d = crate::encoder::softmax(&self.logits(x));
            d[labels[i]] -= 1.0;
            for (g, dc) in gb.iter_mut().zip(&d) {
                *g += dc * scale;
            }
            for (j, &xj) in x.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                let row = &mut gw[j * c..(j + 1) * c];
                for (g, dc) in row.iter_mut().zip(&d) {
                    *g += xj * dc * scale;
                }
            }
        }
        for (w, g) in self.w.iter_mut().zip(&gw) {
            *w -= lr * (g + reg * *w);
        }
        for (b, g) in self.b.iter_mut().zip(&gb) {
            *b -= lr * g;
        }
    }
}

fn check_inputs(embeddings: &EmbeddingMatrix, labels: &[LabelIndex]) -> Result<usize> {
    if labels.len() != embeddings.rows() {
        return Err(Error::Dimension { expected: embeddings.rows(), actual: labels.len() });
    }
    let distinct: std::collections::BTreeSet<_> = labels.iter().collect();
    if distinct.len() < 2 {
        return Err(Error::TooFewClasses);
    }
    Ok(labels.iter().max().unwrap() + 1)
}

fn run_split(
    embeddings: &EmbeddingMatrix,
    labels: &[LabelIndex],
    n_classes: usize,
    split: &Split,
    cfg: &ProbeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, usize, Vec<f64>)> {
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(Error::invalid("split has an empty train or validation side"));
    }
    let mut model = Linear::zeros(embeddings.dim(), n_classes);
    let truth: Vec<LabelIndex> = split.validation.iter().map(|&i| labels[i]).collect();
    let mut order = split.train.clone();
    let mut best: Option<(f64, usize, Linear)> = None;
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch) {
            model.step(embeddings, labels, batch, cfg.lr, cfg.regularization);
        }
        let preds: Vec<LabelIndex> = split.validation.iter().map(|&i| model.predict(embeddings.row(i))).collect();
        let acc = metrics::accuracy(&preds, &truth)?;
        curve.push(acc);
        if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
            best = Some((acc, epoch, model.clone()));
        }
    }
    let (_, best_epoch, snapshot) = best.expect("epochs >= 1");
    let preds: Vec<LabelIndex> = split.validation.iter().map(|&i| snapshot.predict(embeddings.row(i))).collect();
    let acc = metrics::accuracy(&preds, &truth)?;
    let f1 = metrics::macro_f1(&preds, &truth, n_classes)?;
    Ok((acc, f1, best_epoch, curve))
}

fn run_seed(cfg: &ProbeConfig, run: usize) -> u64 {
    cfg.seed.wrapping_add(run as u64)
}

fn fold_rng(run_seed: u64, fold: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(fold as u64 + 1);
    rng
}

/// Cross-validated linear probe, `cfg.runs` times with seeds `seed + run`.
pub fn train_probe(embeddings: &EmbeddingMatrix, labels: &[LabelIndex], cfg: &ProbeConfig) -> Result<ProbeResult> {
    cfg.validate()?;
    let n_classes = check_inputs(embeddings, labels)?;
    if embeddings.rows() < cfg.folds {
        return Err(Error::invalid(format!("{} rows is fewer than {} folds", embeddings.rows(), cfg.folds)));
    }
    let mut per_fold = Vec::with_capacity(cfg.runs * cfg.folds);
    for run in 0..cfg.runs {
        let seed = run_seed(cfg, run);
        for (fold, split) in stratified_folds(labels, cfg.folds, seed)?.iter().enumerate() {
            let mut rng = fold_rng(seed, fold);
            let (accuracy, macro_f1, best_epoch, curve) =
                run_split(embeddings, labels, n_classes, split, cfg, &mut rng)?;
            per_fold.push(FoldScore { run, fold, accuracy, macro_f1, best_epoch, val_accuracy_by_epoch: curve });
        }
    }
    Ok(ProbeResult::aggregate(per_fold, cfg.runs, n_classes))
}

/// Probe over caller-supplied splits instead of cross-validation folds.
/// `cfg.folds` is ignored.
pub fn train_probe_with_splits(
    embeddings: &EmbeddingMatrix,
    labels: &[LabelIndex],
    splits: &[Split],
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    let n_classes = check_inputs(embeddings, labels)?;
    if splits.is_empty() {
        return Err(Error::invalid("no splits given"));
    }
    for s in splits {
        if let Some(&bad) = s.train.iter().chain(&s.validation).find(|&&i| i >= labels.len()) {
            return Err(Error::invalid(format!("split index {bad} out of range")));
        }
    }
    let mut per_fold = Vec::new();
    for run in 0..cfg.runs.max(1) {
        let seed = run_seed(cfg, run);
        for (fold, split) in splits.iter().enumerate() {
            let mut rng = fold_rng(seed, fold);
            let (accuracy, macro_f1, best_epoch, curve) =
                run_split(embeddings, labels, n_classes, split, cfg, &mut rng)?;
            per_fold.push(FoldScore { run, fold, accuracy, macro_f1, best_epoch, val_accuracy_by_epoch: curve });
        }
    }
    Ok(ProbeResult::aggregate(per_fold, cfg.runs.max(1), n_classes))
}
