//! Sequentially trained feed-forward baseline.
//!
//! One hidden layer with a clamped-linear nonlinearity (`clamp(z, 0, 1)`),
//! a softmax output over the six classes, and per-frame stochastic gradient
//! steps on the cross-entropy loss. The model is trained on one class's data
//! at a time with no replay, which is exactly what exposes catastrophic
//! forgetting in the comparison.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use clifer_core::seeding::rng_from_parts;
use clifer_core::{ClassLabel, LabeledSequence};

use crate::HarnessError;

pub const NUM_CLASSES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            hidden: 24,
            epochs: 8,
            learning_rate: 0.05,
        }
    }
}

/// Weights are plain row-major matrices; everything is public so tests can
/// perturb individual parameters for finite-difference checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients in the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl BaselineModel {
    pub fn new(dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = rng_from_parts(&[seed, 0xba5e]);
        let scale1 = 1.0 / (dim as f64).sqrt();
        let scale2 = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize, scale: f64| -> Vec<f64> {
            (0..n)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        BaselineModel {
            dim,
            hidden,
            w1: draw(hidden * dim, scale1),
            b1: vec![0.0; hidden],
            w2: draw(NUM_CLASSES * hidden, scale2),
            b2: vec![0.0; NUM_CLASSES],
        }
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.dim..(j + 1) * self.dim];
                row.iter().zip(x).map(|(&w, &v)| w * v).sum::<f64>() + self.b1[j]
            })
            .collect()
    }

    fn logits_from_hidden(&self, a: &[f64]) -> Vec<f64> {
        (0..NUM_CLASSES)
            .map(|c| {
                let row = &self.w2[c * self.hidden..(c + 1) * self.hidden];
                row.iter().zip(a).map(|(&w, &v)| w * v).sum::<f64>() + self.b2[c]
            })
            .collect()
    }

    /// Class probabilities for one frame.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z1 = self.hidden_pre(x);
        let a1: Vec<f64> = z1.iter().map(|&z| z.clamp(0.0, 1.0)).collect();
        softmax(&self.logits_from_hidden(&a1))
    }

    /// Cross-entropy loss of one frame under the current parameters.
    pub fn loss(&self, x: &[f64], label: ClassLabel) -> f64 {
        let p = self.probabilities(x);
        -p[label.index()].max(1e-300).ln()
    }

    /// Analytic gradients of the per-frame cross-entropy loss.
    pub fn gradients(&self, x: &[f64], label: ClassLabel) -> (f64, BaselineGradients) {
        let z1 = self.hidden_pre(x);
        let a1: Vec<f64> = z1.iter().map(|&z| z.clamp(0.0, 1.0)).collect();
        let probs = softmax(&self.logits_from_hidden(&a1));
        let loss = -probs[label.index()].max(1e-300).ln();

        // d logits = p - onehot(y)
        let mut dz2 = probs;
        dz2[label.index()] -= 1.0;

        let mut gw2 = vec![0.0; NUM_CLASSES * self.hidden];
        for c in 0..NUM_CLASSES {
            for j in 0..self.hidden {
                gw2[c * self.hidden + j] = dz2[c] * a1[j];
            }
        }
        let gb2 = dz2.clone();

        // Back through the clamp: derivative 1 strictly inside (0,1).
        let mut dz1 = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            if z1[j] > 0.0 && z1[j] < 1.0 {
                let mut s = 0.0;
                for c in 0..NUM_CLASSES {
                    s += self.w2[c * self.hidden + j] * dz2[c];
                }
                dz1[j] = s;
            }
        }
        let mut gw1 = vec![0.0; self.hidden * self.dim];
        for j in 0..self.hidden {
            for i in 0..self.dim {
                gw1[j * self.dim + i] = dz1[j] * x[i];
            }
        }
        let gb1 = dz1;

        (
            loss,
            BaselineGradients {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
            },
        )
    }

    fn sgd_step(&mut self, x: &[f64], label: ClassLabel, lr: f64) -> f64 {
        let (loss, g) = self.gradients(x, label);
        for (w, gw) in self.w1.iter_mut().zip(&g.w1) {
            *w -= lr * gw;
        }
        for (b, gb) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * gb;
        }
        for (w, gw) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * gw;
        }
        for (b, gb) in self.b2.iter_mut().zip(&g.b2) {
            *b -= lr * gb;
        }
        loss
    }

    /// Sequence-level prediction: mean class probabilities over the frames,
    /// ties to the smaller canonical label.
    pub fn predict_sequence(&self, frames: &[Vec<f64>]) -> Result<ClassLabel, HarnessError> {
        if frames.is_empty() {
            return Err(HarnessError::Data(clifer_core::Error::Input(
                "cannot classify an empty sequence".into(),
            )));
        }
        let mut mean = vec![0.0; NUM_CLASSES];
        for frame in frames {
            for (m, p) in mean.iter_mut().zip(self.probabilities(frame)) {
                *m += p;
            }
        }
        let mut best = 0usize;
        for c in 1..NUM_CLASSES {
            if mean[c] > mean[best] {
                best = c;
            }
        }
        Ok(ClassLabel::from_index(best).expect("class index in range"))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Trains the model on one single-class episode: `epochs` passes over the
/// batch, one gradient step per frame, in order.
pub fn run_baseline_episode(
    model: &mut BaselineModel,
    batch: &[LabeledSequence],
    epochs: usize,
    learning_rate: f64,
) -> Result<(), HarnessError> {
    let Some(first) = batch.first() else {
        return Err(HarnessError::Data(clifer_core::Error::Protocol(
            "episode batch is empty".into(),
        )));
    };
    let label = first.label;
    if let Some(other) = batch.iter().find(|s| s.label != label) {
        return Err(HarnessError::Data(clifer_core::Error::Protocol(format!(
            "episode mixes labels `{label}` and `{}`",
            other.label
        ))));
    }
    for seq in batch {
        if seq.dim() != model.dim {
            return Err(HarnessError::Data(clifer_core::Error::DimensionMismatch {
                expected: model.dim,
                got: seq.dim(),
            }));
        }
    }
    for _ in 0..epochs {
        for seq in batch {
            for frame in seq.frames() {
                let loss = model.sgd_step(frame, label, learning_rate);
                if !loss.is_finite() {
                    return Err(HarnessError::Runtime(format!(
                        "non-finite loss while training the baseline on `{label}`"
                    )));
                }
            }
        }
    }
    Ok(())
}
