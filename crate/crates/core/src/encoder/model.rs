use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::featurize::SparseVector;
use crate::binfmt::{read_file, write_atomic, LeReader, LeWriter};
use crate::corpus::LabelIndex;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MTP1";

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-15;

/// Hashed features → ReLU hidden layer (the representation) → softmax over
/// journal classes. Matrices are row-major: `w1` is `feature_dim × hidden_dim`,
/// `w2` is `hidden_dim × n_classes`.
#[derive(Debug, Clone)]
pub struct ToyEncoderParams {
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    /// Seed used for hashing and initialization.
    pub seed: u64,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl PartialEq for ToyEncoderParams {
    fn eq(&self, o: &Self) -> bool {
        let bits =
            |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        self.feature_dim == o.feature_dim
            && self.hidden_dim == o.hidden_dim
            && self.n_classes == o.n_classes
            && self.seed == o.seed
            && bits(&self.w1, &o.w1)
            && bits(&self.b1, &o.b1)
            && bits(&self.w2, &o.w2)
            && bits(&self.b2, &o.b2)
    }
}

/// Output of the softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities(pub Vec<f64>);

impl ClassProbabilities {
    pub fn argmax(&self) -> LabelIndex {
        self.0.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best }).0
    }
}

pub struct Forward {
    pub pre_activation: Vec<f64>,
    /// The representation.
    pub hidden: Vec<f64>,
    pub probs: ClassProbabilities,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln(max(probs[label], 1e-15))`.
pub fn ce_loss(probs: &ClassProbabilities, label: LabelIndex) -> f64 {
    -probs.0[label].max(PROB_FLOOR).ln()
}

impl ToyEncoderParams {
    pub fn zeros(feature_dim: usize, hidden_dim: usize, n_classes: usize, seed: u64) -> Self {
        ToyEncoderParams {
            feature_dim,
            hidden_dim,
            n_classes,
            seed,
            w1: vec![0.0; feature_dim * hidden_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; hidden_dim * n_classes],
            b2: vec![0.0; n_classes],
        }
    }

    /// He Gaussian init with zero biases: `w1 ~ N(0, 2 / feature_dim)`,
    /// `w2 ~ N(0, 2 / hidden_dim)`.
    pub fn init<R: Rng>(feature_dim: usize, hidden_dim: usize, n_classes: usize, seed: u64, rng: &mut R) -> Self {
        let mut p = Self::zeros(feature_dim, hidden_dim, n_classes, seed);
        let n1 = Normal::new(0.0, (2.0 / feature_dim as f64).sqrt()).unwrap();
        let n2 = Normal::new(0.0, (2.0 / hidden_dim as f64).sqrt()).unwrap();
        p.w1.iter_mut().for_each(|w| *w = n1.sample(rng));
        p.w2.iter_mut().for_each(|w| *w = n2.sample(rng));
        p
    }

    pub fn is_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2].iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn forward(&self, x: &SparseVector) -> Result<Forward> {
        if let Some(&i) = x.indices.last() {
            if i as usize >= self.feature_dim {
                return Err(Error::Dimension { expected: self.feature_dim, actual: i as usize + 1 });
            }
        }
        let h = self.hidden_dim;
        let mut pre = self.b1.clone();
        for (j, xj) in x.iter() {
            let row = &self.w1[j * h..(j + 1) * h];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += xj * w;
            }
        }
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let mut logits = self.b2.clone();
        for (k, &vk) in hidden.iter().enumerate() {
            if vk == 0.0 {
                continue;
            }
            let row = &self.w2[k * self.n_classes..(k + 1) * self.n_classes];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += vk * w;
            }
        }
        Ok(Forward { pre_activation: pre, hidden, probs: ClassProbabilities(softmax(&logits)) })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&read_file(path)?)
    }

    /// `"MTP1" | feature_dim u32 | hidden_dim u32 | n_classes u32 | seed u64 |
    /// w1 | b1 | w2 | b2` with every block little-endian row-major f64.
    pub fn encode(&self) -> Result<Vec<u8>> {
        let dim = |n: usize| u32::try_from(n).map_err(|_| Error::invalid("dimension exceeds u32"));
        let mut w = LeWriter::with_capacity(24 + 8 * (self.w1.len() + self.w2.len() + self.b1.len() + self.b2.len()));
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(dim(self.feature_dim)?);
        w.u32(dim(self.hidden_dim)?);
        w.u32(dim(self.n_classes)?);
        w.u64(self.seed);
        w.f64s(&self.w1);
        w.f64s(&self.b1);
        w.f64s(&self.w2);
        w.f64s(&self.b2);
        Ok(w.into_inner())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = LeReader::new(bytes);
        r.magic(CHECKPOINT_MAGIC)?;
        let f = r.u32()? as u64;
        let h = r.u32()? as u64;
        let n = r.u32()? as u64;
        let seed = r.u64()?;
        let w1 = r.f64s(f * h)?;
        let b1 = r.f64s(h)?;
        let w2 = r.f64s(h * n)?;
        let b2 = r.f64s(n)?;
        r.finish()?;
        let p = ToyEncoderParams {
            feature_dim: f as usize,
            hidden_dim: h as usize,
            n_classes: n as usize,
            seed,
            w1,
            b1,
            w2,
            b2,
        };
        if !p.is_finite() {
            return Err(Error::invalid("checkpoint contains non-finite parameters"));
        }
        Ok(p)
    }
}

/// Gradients of the mean cross-entropy, same layout as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Mean loss over `batch` and its analytic gradient.
pub fn loss_and_gradients(
    params: &ToyEncoderParams,
    batch: &[(&SparseVector, LabelIndex)],
) -> Result<(f64, Gradients)> {
    let (h, n) = (params.hidden_dim, params.n_classes);
    let mut g = Gradients {
        w1: vec![0.0; params.w1.len()],
        b1: vec![0.0; h],
        w2: vec![0.0; params.w2.len()],
        b2: vec![0.0; n],
    };
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut dh = vec![0.0; h];
    for &(x, y) in batch {
        if y >= n {
            return Err(Error::invalid(format!("label {y} outside 0..{n}")));
        }
        let fw = params.forward(x)?;
        loss += ce_loss(&fw.probs, y);
        let mut dlogits = fw.probs.0;
        dlogits[y] -= 1.0;
        dlogits.iter_mut().for_each(|d| *d *= scale);
        for (gb, d) in g.b2.iter_mut().zip(&dlogits) {
            *gb += d;
        }
        for k in 0..h {
            let row = &params.w2[k * n..(k + 1) * n];
            let vk = fw.hidden[k];
            if vk != 0.0 {
                let grow = &mut g.w2[k * n..(k + 1) * n];
                for (gw, d) in grow.iter_mut().zip(&dlogits) {
                    *gw += vk * d;
                }
            }
            dh[k] = if fw.pre_activation[k] > 0.0 { row.iter().zip(&dlogits).map(|(w, d)| w * d).sum() } else { 0.0 };
        }
        for (gb, d) in g.b1.iter_mut().zip(&dh) {
            *gb += d;
        }
        for (j, xj) in x.iter() {
            let grow = &mut g.w1[j * h..(j + 1) * h];
            for (gw, d) in grow.iter_mut().zip(&dh) {
                *gw += xj * d;
            }
        }
    }
    Ok((loss * scale, g))
}

/// Mean loss only.
pub fn mean_loss(params: &ToyEncoderParams, batch: &[(&SparseVector, LabelIndex)]) -> Result<f64> {
    let mut loss = 0.0;
    for &(x, y) in batch {
        loss += ce_loss(&params.forward(x)?.probs, y);
    }
    Ok(loss / batch.len() as f64)
}
