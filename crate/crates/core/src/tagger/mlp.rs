//! 512 -> 128 -> 2 tagging network with hand-written backprop.
//!
//! Both weight matrices are stored row-major with the bias as the last
//! column: `w1` is 128 x 513 and `w2` is 2 x 129. The hidden layer is a
//! rectifier; output 0 goes through tanh (valence), output 1 through the
//! logistic function (arousal).

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::rng::Rng;
use crate::types::AffectTag;

pub const INPUT_DIM: usize = 512;
pub const HIDDEN_DIM: usize = 128;
pub const OUTPUT_DIM: usize = 2;
const W1_COLS: usize = INPUT_DIM + 1;
const W2_COLS: usize = HIDDEN_DIM + 1;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sample_loss(heads(zp)) - sample_loss(heads(zm))`, where `dz = zp - zm`
/// is supplied exactly. Written in product form so the difference of two
/// nearly equal losses does not cancel.
fn loss_gap(
    zp: [f64; OUTPUT_DIM],
    zm: [f64; OUTPUT_DIM],
    dz: [f64; OUTPUT_DIM],
    target: [f64; OUTPUT_DIM],
) -> f64 {
    let (vp, vm) = (zp[0].tanh(), zm[0].tanh());
    let dv = dz[0].tanh() * (1.0 - vp * vm);
    let (ap, am) = (sigmoid(zp[1]), sigmoid(zm[1]));
    let da = -ap * (1.0 - am) * (-dz[1]).exp_m1();
    0.5 * (dv * (vp + vm - 2.0 * target[0]) + da * (ap + am - 2.0 * target[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTagger {
    w1: Vec<f64>,
    w2: Vec<f64>,
}

/// One supervised example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub target: AffectTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

struct Activations {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    out: [f64; OUTPUT_DIM],
}

impl MlpTagger {
    pub fn zeros() -> Self {
        Self {
            w1: vec![0.0; HIDDEN_DIM * W1_COLS],
            w2: vec![0.0; OUTPUT_DIM * W2_COLS],
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init(rng: &mut Rng) -> Self {
        let b1 = 1.0 / (INPUT_DIM as f64).sqrt();
        let b2 = 1.0 / (HIDDEN_DIM as f64).sqrt();
        Self {
            w1: (0..HIDDEN_DIM * W1_COLS)
                .map(|_| rng.uniform_range(-b1, b1))
                .collect(),
            w2: (0..OUTPUT_DIM * W2_COLS)
                .map(|_| rng.uniform_range(-b2, b2))
                .collect(),
        }
    }

    pub fn from_weights(w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        if w1.len() != HIDDEN_DIM * W1_COLS {
            return Err(Error::DimensionMismatch {
                expected: HIDDEN_DIM * W1_COLS,
                got: w1.len(),
            });
        }
        if w2.len() != OUTPUT_DIM * W2_COLS {
            return Err(Error::DimensionMismatch {
                expected: OUTPUT_DIM * W2_COLS,
                got: w2.len(),
            });
        }
        if w1.iter().chain(&w2).any(|w| !w.is_finite()) {
            return Err(validation("tagger weights must be finite"));
        }
        Ok(Self { w1, w2 })
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.w2.len()
    }

    /// Scale every parameter, e.g. to move into the near-linear head regime.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w1: self.w1.iter().map(|w| w * factor).collect(),
            w2: self.w2.iter().map(|w| w * factor).collect(),
        }
    }

    fn check_input(features: &[f64]) -> Result<()> {
        if features.len() != INPUT_DIM {
            return Err(Error::DimensionMismatch {
                expected: INPUT_DIM,
                got: features.len(),
            });
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(validation("features must be finite"));
        }
        Ok(())
    }

    fn hidden_pre(&self, j: usize, x: &[f64]) -> f64 {
        let row = &self.w1[j * W1_COLS..(j + 1) * W1_COLS];
        row[..INPUT_DIM]
            .iter()
            .zip(x)
            .map(|(w, xi)| w * xi)
            .sum::<f64>()
            + row[INPUT_DIM]
    }

    fn logits(&self, hidden: &[f64]) -> [f64; OUTPUT_DIM] {
        let mut z = [0.0; OUTPUT_DIM];
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.w2[k * W2_COLS..(k + 1) * W2_COLS];
            *zk = row[..HIDDEN_DIM]
                .iter()
                .zip(hidden)
                .map(|(w, h)| w * h)
                .sum::<f64>()
                + row[HIDDEN_DIM];
        }
        z
    }

    fn heads(z: [f64; OUTPUT_DIM]) -> [f64; OUTPUT_DIM] {
        [z[0].tanh(), sigmoid(z[1])]
    }

    fn activations(&self, x: &[f64]) -> Activations {
        let pre: Vec<f64> = (0..HIDDEN_DIM).map(|j| self.hidden_pre(j, x)).collect();
        let hidden: Vec<f64> = pre.iter().map(|p| p.max(0.0)).collect();
        let out = Self::heads(self.logits(&hidden));
        Activations { pre, hidden, out }
    }

    pub fn forward(&self, features: &[f64]) -> Result<AffectTag> {
        Self::check_input(features)?;
        let [valence, arousal] = self.activations(features).out;
        Ok(AffectTag { valence, arousal })
    }

    fn sample_loss(out: [f64; OUTPUT_DIM], target: AffectTag) -> f64 {
        0.5 * ((out[0] - target.valence).powi(2) + (out[1] - target.arousal).powi(2))
    }

    /// Sum of squared non-bias weights.
    pub fn weight_norm_sq(&self) -> f64 {
        let w1: f64 = self
            .w1
            .chunks(W1_COLS)
            .flat_map(|r| &r[..INPUT_DIM])
            .map(|w| w * w)
            .sum();
        let w2: f64 = self
            .w2
            .chunks(W2_COLS)
            .flat_map(|r| &r[..HIDDEN_DIM])
            .map(|w| w * w)
            .sum();
        w1 + w2
    }

    /// Mean over samples of the squared error averaged over both heads, plus
    /// `l2 * sum of squared weights` (biases excluded).
    pub fn loss(&self, samples: &[Sample], l2: f64) -> Result<f64> {
        if samples.is_empty() {
            return Err(validation("empty dataset"));
        }
        let mut data = 0.0;
        for s in samples {
            Self::check_input(&s.features)?;
            data += Self::sample_loss(self.activations(&s.features).out, s.target);
        }
        Ok(data / samples.len() as f64 + l2 * self.weight_norm_sq())
    }

    /// Analytic gradient of [`Self::loss`] over `samples`.
    pub fn gradients(&self, samples: &[&Sample], l2: f64) -> Result<Gradients> {
        if samples.is_empty() {
            return Err(validation("empty batch"));
        }
        let n = samples.len() as f64;
        let mut g1 = vec![0.0; self.w1.len()];
        let mut g2 = vec![0.0; self.w2.len()];
        for s in samples {
            Self::check_input(&s.features)?;
            let act = self.activations(&s.features);
            let [v, a] = act.out;
            let delta = [
                (v - s.target.valence) * (1.0 - v * v) / n,
                (a - s.target.arousal) * a * (1.0 - a) / n,
            ];
            for (k, d) in delta.iter().enumerate() {
                let row = &mut g2[k * W2_COLS..(k + 1) * W2_COLS];
                for (g, h) in row[..HIDDEN_DIM].iter_mut().zip(&act.hidden) {
                    *g += d * h;
                }
                row[HIDDEN_DIM] += d;
            }
            for j in 0..HIDDEN_DIM {
                if act.pre[j] <= 0.0 {
                    continue;
                }
                let dh: f64 = (0..OUTPUT_DIM)
                    .map(|k| delta[k] * self.w2[k * W2_COLS + j])
                    .sum();
                let row = &mut g1[j * W1_COLS..(j + 1) * W1_COLS];
                for (g, x) in row[..INPUT_DIM].iter_mut().zip(&s.features) {
                    *g += dh * x;
                }
                row[INPUT_DIM] += dh;
            }
        }
        for (i, g) in g1.iter_mut().enumerate() {
            if i % W1_COLS != INPUT_DIM {
                *g += 2.0 * l2 * self.w1[i];
            }
        }
        for (i, g) in g2.iter_mut().enumerate() {
            if i % W2_COLS != HIDDEN_DIM {
                *g += 2.0 * l2 * self.w2[i];
            }
        }
        Ok(Gradients { w1: g1, w2: g2 })
    }

    fn step(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.w1.iter_mut().zip(&grads.w1) {
            *w -= lr * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&grads.w2) {
            *w -= lr * g;
        }
    }

    pub fn train(
        &mut self,
        dataset: &[Sample],
        cfg: &TaggerTrainConfig,
        rng: &mut Rng,
    ) -> Result<TrainReport> {
        cfg.validate()?;
        if dataset.is_empty() {
            return Err(validation("empty dataset"));
        }
        for s in dataset {
            s.target.validate()?;
        }
        let initial_loss = self.loss(dataset, cfg.l2_coefficient)?;
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            rng.shuffle(&mut order);
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &dataset[i]).collect();
                let grads = self.gradients(&batch, cfg.l2_coefficient)?;
                self.step(&grads, cfg.learning_rate);
            }
            epoch_losses.push(self.loss(dataset, cfg.l2_coefficient)?);
        }
        Ok(TrainReport {
            initial_loss,
            epoch_losses,
        })
    }

    /// Compare the analytic gradient of the single-sample loss against
    /// central finite differences for every parameter.
    pub fn gradient_check(&self, sample: &Sample, epsilon: f64, l2: f64) -> Result<GradientCheck> {
        if !(epsilon > 0.0 && epsilon <= 1e-2) {
            return Err(validation("epsilon must lie in (0, 1e-2]"));
        }
        Self::check_input(&sample.features)?;
        let analytic = self.gradients(&[sample], l2)?;
        let x = &sample.features;
        let act = self.activations(x);
        let z = self.logits(&act.hidden);
        let target = [sample.target.valence, sample.target.arousal];
        let mut report = GradientCheck::default();
        // Central difference of the L2 penalty term.
        let penalty_gap = |w: f64, is_bias: bool| {
            if is_bias {
                0.0
            } else {
                l2 * ((w + epsilon).powi(2) - (w - epsilon).powi(2))
            }
        };

        // A W1 perturbation only moves one pre-activation, which moves each
        // logit by w2[k][j] times the change in that hidden unit.
        for idx in 0..self.w1.len() {
            let (j, col) = (idx / W1_COLS, idx % W1_COLS);
            let input = if col == INPUT_DIM { 1.0 } else { x[col] };
            let h_plus = (act.pre[j] + epsilon * input).max(0.0);
            let h_minus = (act.pre[j] - epsilon * input).max(0.0);
            let mut zp = z;
            let mut zm = z;
            let mut dz = [0.0; OUTPUT_DIM];
            for k in 0..OUTPUT_DIM {
                let w2 = self.w2[k * W2_COLS + j];
                zp[k] += w2 * (h_plus - act.hidden[j]);
                zm[k] += w2 * (h_minus - act.hidden[j]);
                dz[k] = w2 * (h_plus - h_minus);
            }
            let gap = loss_gap(zp, zm, dz, target) + penalty_gap(self.w1[idx], col == INPUT_DIM);
            report.record(analytic.w1[idx], gap / (2.0 * epsilon));
        }
        for idx in 0..self.w2.len() {
            let (k, col) = (idx / W2_COLS, idx % W2_COLS);
            let input = if col == HIDDEN_DIM {
                1.0
            } else {
                act.hidden[col]
            };
            let (mut zp, mut zm, mut dz) = (z, z, [0.0; OUTPUT_DIM]);
            zp[k] += epsilon * input;
            zm[k] -= epsilon * input;
            dz[k] = 2.0 * epsilon * input;
            let gap = loss_gap(zp, zm, dz, target) + penalty_gap(self.w2[idx], col == HIDDEN_DIM);
            report.record(analytic.w2[idx], gap / (2.0 * epsilon));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub max_abs_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
    pub checked: usize,
}

impl GradientCheck {
    /// Denominator floor: below this magnitude both gradients count as zero.
    pub const FLOOR: f64 = 1e-8;

    fn record(&mut self, analytic: f64, numeric: f64) {
        let diff = (analytic - numeric).abs();
        let rel = diff / analytic.abs().max(numeric.abs()).max(Self::FLOOR);
        self.max_relative_error = self.max_relative_error.max(rel);
        self.max_abs_error = self.max_abs_error.max(diff);
        self.max_abs_analytic = self.max_abs_analytic.max(analytic.abs());
        self.max_abs_numeric = self.max_abs_numeric.max(numeric.abs());
        self.checked += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerTrainConfig {
    pub learning_rate: f64,
    pub l2_coefficient: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for TaggerTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            l2_coefficient: 1e-4,
            batch_size: 32,
            epochs: 10,
        }
    }
}

impl TaggerTrainConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted so a frozen run can be expressed.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(validation("learning_rate must be finite and non-negative"));
        }
        if !(self.l2_coefficient >= 0.0 && self.l2_coefficient.is_finite()) {
            return Err(validation("l2_coefficient must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(validation("batch_size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses
            .last()
            .copied()
            .unwrap_or(self.initial_loss)
    }
}
