use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::featurize::{featurize, SparseVector};
use super::model::{loss_and_gradients, mean_loss, ToyEncoderParams};
use crate::corpus::{AbstractRecord, JournalLabelMap, LabelIndex};
use crate::embedstore::{assemble_input, EmbeddingMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub feature_dim: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { hidden_dim: 64, feature_dim: 4096, lr: 0.1, batch: 100, epochs: 5, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim < 2 || self.hidden_dim == 0 || self.batch == 0 {
            return Err(Error::invalid("need feature_dim >= 2, hidden_dim >= 1 and batch >= 1"));
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::invalid("learning rate must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ToyEncoderParams,
    /// Mean loss over the whole corpus before the first update.
    pub initial_loss: f64,
    /// Mean training loss per epoch, accumulated over the epoch's batches
    /// (each batch scored before its update).
    pub epoch_losses: Vec<f64>,
}

/// Hashed features of `title [SEP] abstract`.
pub fn record_features(record: &AbstractRecord, feature_dim: usize, seed: u64) -> SparseVector {
    featurize(&assemble_input(record).text, feature_dim, seed)
}

/// Untrained parameters exactly as [`train`] would start from.
pub fn initial_params(cfg: &TrainConfig, n_classes: usize) -> ToyEncoderParams {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ToyEncoderParams::init(cfg.feature_dim, cfg.hidden_dim, n_classes, cfg.seed, &mut rng)
}

/// Mini-batch gradient descent on the mean journal cross-entropy.
///
/// Deterministic in `cfg.seed`: the same generator initializes the weights
/// and then shuffles the corpus at the start of every epoch, and all
/// reductions run sequentially.
pub fn train(records: &[AbstractRecord], labels: &JournalLabelMap, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }
    let targets: Vec<LabelIndex> = labels.labels_for(records)?;
    let feats: Vec<SparseVector> = records.iter().map(|r| record_features(r, cfg.feature_dim, cfg.seed)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ToyEncoderParams::init(cfg.feature_dim, cfg.hidden_dim, labels.len(), cfg.seed, &mut rng);

    let all: Vec<(&SparseVector, LabelIndex)> = feats.iter().zip(targets.iter().copied()).collect();
    let initial_loss = mean_loss(&params, &all)?;

    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<(&SparseVector, LabelIndex)> = chunk.iter().map(|&i| (&feats[i], targets[i])).collect();
            let (loss, g) = loss_and_gradients(&params, &batch)?;
            total += loss * chunk.len() as f64;
            if cfg.lr == 0.0 {
                continue;
            }
            let step = |p: &mut [f64], d: &[f64]| {
                for (w, gw) in p.iter_mut().zip(d) {
                    *w -= cfg.lr * gw;
                }
            };
            step(&mut params.w1, &g.w1);
            step(&mut params.b1, &g.b1);
            step(&mut params.w2, &g.w2);
            step(&mut params.b2, &g.b2);
        }
        epoch_losses.push(total / records.len() as f64);
    }
    if !params.is_finite() {
        return Err(Error::invalid("training diverged to non-finite parameters"));
    }
    Ok(TrainOutput { params, initial_loss, epoch_losses })
}

/// Hidden-layer representation of every record, keyed by record id.
pub fn extract(params: &ToyEncoderParams, records: &[AbstractRecord]) -> Result<EmbeddingMatrix> {
    let mut values = Vec::with_capacity(records.len() * params.hidden_dim);
    for r in records {
        let x = record_features(r, params.feature_dim, params.seed);
        values.extend(params.forward(&x)?.hidden);
    }
    EmbeddingMatrix::new(records.iter().map(|r| r.id.clone()).collect(), params.hidden_dim, values)
}
