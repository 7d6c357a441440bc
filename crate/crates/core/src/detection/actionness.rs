//! One-hidden-layer per-frame actionness head trained with binary cross-entropy.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FrameScorer;
use crate::conditioning::Sample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ActionnessModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
    pub seed: u64,
    pub final_loss: Option<f64>,
}

/// On-disk JSON layout.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    c: usize,
    h: usize,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    seed: u64,
    final_loss: Option<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln p + (1-y) ln(1-p)]` with `p = sigmoid(z)`, computed from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl ActionnessModel {
    pub fn zeros(c: usize, h: usize) -> Self {
        ActionnessModel {
            w1: Array2::zeros((h, c)),
            b1: Array1::zeros(h),
            w2: Array1::zeros(h),
            b2: 0.0,
            seed: 0,
            final_loss: None,
        }
    }

    /// Uniform weights in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
    pub fn init(c: usize, h: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = 1.0 / (c as f64).sqrt();
        let a2 = 1.0 / (h as f64).sqrt();
        let w1 = Array2::from_shape_simple_fn((h, c), || rng.random_range(-a1..=a1));
        let w2 = Array1::from_shape_simple_fn(h, || rng.random_range(-a2..=a2));
        ActionnessModel {
            w1,
            b1: Array1::zeros(h),
            w2,
            b2: 0.0,
            seed,
            final_loss: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    fn logit(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let pre = self.w1.dot(&x) + &self.b1;
        let hidden = pre.mapv(|v| v.max(0.0));
        (self.w2.dot(&hidden) + self.b2, pre)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            c: self.input_dim(),
            h: self.hidden_dim(),
            w1: self.w1.rows().into_iter().map(|r| r.to_vec()).collect(),
            b1: self.b1.to_vec(),
            w2: self.w2.to_vec(),
            b2: self.b2,
            seed: self.seed,
            final_loss: self.final_loss,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model json: {e}")))?;
        let shape_ok = file.w1.len() == file.h
            && file.w1.iter().all(|r| r.len() == file.c)
            && file.b1.len() == file.h
            && file.w2.len() == file.h;
        if !shape_ok {
            return Err(Error::Shape(format!(
                "model json: weights do not match c={} h={}",
                file.c, file.h
            )));
        }
        let flat: Vec<f64> = file.w1.into_iter().flatten().collect();
        let model = ActionnessModel {
            w1: Array2::from_shape_vec((file.h, file.c), flat).expect("checked"),
            b1: Array1::from(file.b1),
            w2: Array1::from(file.w2),
            b2: file.b2,
            seed: file.seed,
            final_loss: file.final_loss,
        };
        let finite = model.w1.iter().chain(&model.b1).chain(&model.w2).all(|v| v.is_finite())
            && model.b2.is_finite();
        if !finite {
            return Err(Error::Config("model json: non-finite weight".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Per-frame probabilities `sigmoid(w2 . relu(W1 x + b1) + b2)`.
pub fn actionness_forward(model: &ActionnessModel, sample: &Sample) -> Result<Vec<f64>> {
    if model.input_dim() != sample.channels() {
        return Err(Error::Shape(format!(
            "model expects {} channels, sample has {}",
            model.input_dim(),
            sample.channels()
        )));
    }
    Ok(sample
        .features
        .rows()
        .into_iter()
        .map(|x| sigmoid(model.logit(x).0))
        .collect())
}

impl FrameScorer for ActionnessModel {
    fn score_frames(&self, sample: &Sample) -> Result<Vec<f64>> {
        actionness_forward(self, sample)
    }
}

/// 1.0 for frames whose centre lies inside any label span.
pub fn frame_targets(sample: &Sample) -> Vec<f64> {
    (0..sample.n_frames())
        .map(|i| {
            if sample.labels.iter().any(|l| l.contains_frame(i)) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Gradient with the model's parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

/// Mean BCE over every frame of `samples`, and its gradient.
pub fn loss_and_grad(model: &ActionnessModel, samples: &[&Sample]) -> (f64, Gradient) {
    let (h, c) = model.w1.dim();
    let mut grad = Gradient {
        w1: Array2::zeros((h, c)),
        b1: Array1::zeros(h),
        w2: Array1::zeros(h),
        b2: 0.0,
    };
    let mut loss = 0.0;
    let mut frames = 0usize;
    for sample in samples {
        let targets = frame_targets(sample);
        for (x, &y) in sample.features.rows().into_iter().zip(&targets) {
            let (z, pre) = model.logit(x);
            loss += bce_from_logit(z, y);
            let dz = sigmoid(z) - y;
            grad.b2 += dz;
            for j in 0..h {
                if pre[j] > 0.0 {
                    grad.w2[j] += dz * pre[j];
                    let dpre = dz * model.w2[j];
                    grad.b1[j] += dpre;
                    grad.w1.row_mut(j).scaled_add(dpre, &x);
                }
            }
        }
        frames += targets.len();
    }
    if frames == 0 {
        return (0.0, grad);
    }
    let inv = 1.0 / frames as f64;
    grad.w1 *= inv;
    grad.b1 *= inv;
    grad.w2 *= inv;
    grad.b2 *= inv;
    (loss * inv, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 0.5,
            batch_size: 16,
            hidden: 32,
            seed: 0,
        }
    }
}

/// Mini-batch gradient descent on mean per-frame BCE.
///
/// Initialization and the per-epoch shuffle both derive from `cfg.seed`.
pub fn actionness_train(samples: &[Sample], cfg: &TrainConfig) -> Result<ActionnessModel> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Training("no samples".into()))?;
    let c = first.channels();
    if samples.iter().any(|s| s.channels() != c) {
        return Err(Error::Training("samples disagree on channel count".into()));
    }
    if cfg.batch_size == 0 || cfg.hidden == 0 {
        return Err(Error::Config("batch_size and hidden must be >= 1".into()));
    }
    if !(cfg.lr.is_finite() && cfg.lr >= 0.0) {
        return Err(Error::Config(format!("lr must be >= 0, got {}", cfg.lr)));
    }
    let (pos, total) = samples.iter().fold((0usize, 0usize), |(p, t), s| {
        let y = frame_targets(s);
        (p + y.iter().filter(|&&v| v > 0.5).count(), t + y.len())
    });
    if pos == 0 || pos == total {
        return Err(Error::Training(format!(
            "degenerate targets: {pos} positive of {total} frames"
        )));
    }

    let mut model = ActionnessModel::init(c, cfg.hidden, cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4521);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (_, g) = loss_and_grad(&model, &batch);
            model.w1.scaled_add(-cfg.lr, &g.w1);
            model.b1.scaled_add(-cfg.lr, &g.b1);
            model.w2.scaled_add(-cfg.lr, &g.w2);
            model.b2 -= cfg.lr * g.b2;
        }
    }
    let all: Vec<&Sample> = samples.iter().collect();
    model.final_loss = Some(loss_and_grad(&model, &all).0);
    Ok(model)
}
