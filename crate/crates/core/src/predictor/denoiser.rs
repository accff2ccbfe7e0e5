//! A small time-conditioned MLP noise predictor with manual
//! reverse-mode differentiation.
//!
//! The network flattens the series, adds a learned per-step embedding at
//! the input and runs two tanh hidden layers into a linear output:
//!
//! ```text
//! z0 = flatten(x_t) + embed[t]
//! a1 = tanh(W1 z0 + b1)
//! a2 = tanh(W2 a1 + b2)
//! eps_hat = W3 a2 + b3
//! ```
//!
//! Every gradient is written out by hand so it can be checked against
//! central finite differences, and training is plain seeded SGD so runs are
//! bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::forward::diffuse;
use crate::schedule::NoiseSchedule;
use crate::series::{SeriesError, TimeSeries};

use super::{EpsilonPredictor, PredictorError};

/// Architecture of a [`DenoiserModel`]; immutable once the model is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenoiserConfig {
    pub channels: usize,
    pub length: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// Number of diffusion steps the embedding table covers.
    pub t_max: usize,
}

impl DenoiserConfig {
    pub fn dim(&self) -> usize {
        self.channels * self.length
    }

    pub fn param_count(&self) -> usize {
        let d = self.dim();
        self.hidden1 * d
            + self.hidden1
            + self.hidden2 * self.hidden1
            + self.hidden2
            + d * self.hidden2
            + d
            + self.t_max * d
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.channels == 0
            || self.length == 0
            || self.hidden1 == 0
            || self.hidden2 == 0
            || self.t_max == 0
        {
            Err(TrainError::DegenerateArchitecture)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// Some architecture dimension is zero.
    DegenerateArchitecture,
    /// Training needs at least one sample.
    EmptyDataset,
    /// The schedule length does not match the embedding table.
    ScheduleMismatch {
        model_t_max: usize,
        schedule_t_max: usize,
    },
    /// The loss became non-finite.
    Diverged {
        step: usize,
    },
    Predictor(PredictorError),
    Series(SeriesError),
    /// Parameter vector of the wrong length for the architecture.
    WrongParamCount {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::DegenerateArchitecture => {
                write!(f, "all architecture dimensions must be positive")
            }
            TrainError::EmptyDataset => write!(f, "training dataset is empty"),
            TrainError::ScheduleMismatch {
                model_t_max,
                schedule_t_max,
            } => write!(
                f,
                "model embeds {model_t_max} steps but schedule has {schedule_t_max}"
            ),
            TrainError::Diverged { step } => {
                write!(f, "loss became non-finite at step {step}")
            }
            TrainError::Predictor(e) => write!(f, "{e}"),
            TrainError::Series(e) => write!(f, "{e}"),
            TrainError::WrongParamCount { expected, got } => {
                write!(f, "expected {expected} parameters, got {got}")
            }
        }
    }
}

impl core::error::Error for TrainError {}

impl From<PredictorError> for TrainError {
    fn from(e: PredictorError) -> Self {
        TrainError::Predictor(e)
    }
}

impl From<SeriesError> for TrainError {
    fn from(e: SeriesError) -> Self {
        TrainError::Series(e)
    }
}

/// Gradients of the squared-error loss with respect to every parameter,
/// laid out exactly like the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
    pub time_embed: Vec<f64>,
}

impl Gradients {
    /// Flat view in the canonical order w1, b1, w2, b2, w3, b3, embed.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(
            self.w1.len()
                + self.b1.len()
                + self.w2.len()
                + self.b2.len()
                + self.w3.len()
                + self.b3.len()
                + self.time_embed.len(),
        );
        for part in [
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.w3,
            &self.b3,
            &self.time_embed,
        ] {
            out.extend_from_slice(part);
        }
        out
    }
}

/// Activations captured by a forward pass, sufficient for exact gradients.
#[derive(Debug, Clone)]
pub struct ActivationCache {
    t: usize,
    z0: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    revision: u64,
}

/// The trainable noise predictor.
#[derive(Debug, Clone)]
pub struct DenoiserModel {
    config: DenoiserConfig,
    w1: Vec<f64>, // hidden1 x dim
    b1: Vec<f64>,
    w2: Vec<f64>, // hidden2 x hidden1
    b2: Vec<f64>,
    w3: Vec<f64>, // dim x hidden2
    b3: Vec<f64>,
    time_embed: Vec<f64>, // t_max x dim
    revision: u64,
}

impl DenoiserModel {
    /// All-zero parameters; the output is identically zero.
    pub fn zeros(config: DenoiserConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let d = config.dim();
        Ok(Self {
            w1: vec![0.0; config.hidden1 * d],
            b1: vec![0.0; config.hidden1],
            w2: vec![0.0; config.hidden2 * config.hidden1],
            b2: vec![0.0; config.hidden2],
            w3: vec![0.0; d * config.hidden2],
            b3: vec![0.0; d],
            time_embed: vec![0.0; config.t_max * d],
            revision: 0,
            config,
        })
    }

    /// Random init: weights scaled by 1/sqrt(fan-in), biases and time
    /// embedding zero.
    pub fn random<R: Rng + ?Sized>(
        config: DenoiserConfig,
        rng: &mut R,
    ) -> Result<Self, TrainError> {
        let mut model = Self::zeros(config)?;
        let d = model.config.dim();
        fill_scaled_normal(&mut model.w1, d, rng);
        fill_scaled_normal(&mut model.w2, model.config.hidden1, rng);
        fill_scaled_normal(&mut model.w3, model.config.hidden2, rng);
        Ok(model)
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn param_count(&self) -> usize {
        self.config.param_count()
    }

    /// Bumped on every parameter update; guards against stale caches.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Flat parameter vector in the canonical order w1, b1, w2, b2, w3, b3,
    /// embed.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for part in [
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.w3,
            &self.b3,
            &self.time_embed,
        ] {
            out.extend_from_slice(part);
        }
        out
    }

    /// Rebuilds a model from a flat parameter vector.
    pub fn from_flat_params(config: DenoiserConfig, params: &[f64]) -> Result<Self, TrainError> {
        let mut model = Self::zeros(config)?;
        if params.len() != model.param_count() {
            return Err(TrainError::WrongParamCount {
                expected: model.param_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for part in [
            &mut model.w1,
            &mut model.b1,
            &mut model.w2,
            &mut model.b2,
            &mut model.w3,
            &mut model.b3,
            &mut model.time_embed,
        ] {
            let len = part.len();
            part.copy_from_slice(&params[offset..offset + len]);
            offset += len;
        }
        Ok(model)
    }

    /// Runs the network and captures the activations needed for gradients.
    pub fn forward(
        &self,
        x_t: &TimeSeries,
        t: usize,
    ) -> Result<(TimeSeries, ActivationCache), PredictorError> {
        self.check_input(x_t, t)?;
        let d = self.config.dim();
        let embed = &self.time_embed[(t - 1) * d..t * d];
        let z0: Vec<f64> = x_t
            .values()
            .iter()
            .zip(embed)
            .map(|(&x, &e)| x + e)
            .collect();

        let mut a1 = vec![0.0; self.config.hidden1];
        affine(&self.w1, &self.b1, &z0, &mut a1);
        for v in &mut a1 {
            *v = v.tanh();
        }
        let mut a2 = vec![0.0; self.config.hidden2];
        affine(&self.w2, &self.b2, &a1, &mut a2);
        for v in &mut a2 {
            *v = v.tanh();
        }
        let mut out = vec![0.0; d];
        affine(&self.w3, &self.b3, &a2, &mut out);

        let eps_hat = TimeSeries::new(x_t.channels(), x_t.length(), out)?;
        Ok((
            eps_hat,
            ActivationCache {
                t,
                z0,
                a1,
                a2,
                revision: self.revision,
            },
        ))
    }

    /// Exact gradients of the loss given `d_loss/d_eps_hat`.
    // indexed loops kept in the layout of the matrix math they implement
    #[allow(clippy::needless_range_loop)]
    pub fn backward(
        &self,
        cache: &ActivationCache,
        grad_output: &[f64],
    ) -> Result<Gradients, PredictorError> {
        if cache.revision != self.revision {
            return Err(PredictorError::StaleCache {
                cache_revision: cache.revision,
                model_revision: self.revision,
            });
        }
        let d = self.config.dim();
        if grad_output.len() != d {
            return Err(PredictorError::Series(SeriesError::LengthMismatch {
                expected: d,
                got: grad_output.len(),
            }));
        }
        let (h1, h2) = (self.config.hidden1, self.config.hidden2);

        let mut g = Gradients {
            w1: vec![0.0; h1 * d],
            b1: vec![0.0; h1],
            w2: vec![0.0; h2 * h1],
            b2: vec![0.0; h2],
            w3: vec![0.0; d * h2],
            b3: vec![0.0; d],
            time_embed: vec![0.0; self.config.t_max * d],
        };

        // output layer
        for i in 0..d {
            let gi = grad_output[i];
            g.b3[i] = gi;
            for j in 0..h2 {
                g.w3[i * h2 + j] = gi * cache.a2[j];
            }
        }
        // back through tanh at layer 2
        let mut dz2 = vec![0.0; h2];
        for j in 0..h2 {
            let mut da = 0.0;
            for i in 0..d {
                da += self.w3[i * h2 + j] * grad_output[i];
            }
            dz2[j] = da * (1.0 - cache.a2[j] * cache.a2[j]);
        }
        for i in 0..h2 {
            g.b2[i] = dz2[i];
            for j in 0..h1 {
                g.w2[i * h1 + j] = dz2[i] * cache.a1[j];
            }
        }
        // back through tanh at layer 1
        let mut dz1 = vec![0.0; h1];
        for j in 0..h1 {
            let mut da = 0.0;
            for i in 0..h2 {
                da += self.w2[i * h1 + j] * dz2[i];
            }
            dz1[j] = da * (1.0 - cache.a1[j] * cache.a1[j]);
        }
        for i in 0..h1 {
            g.b1[i] = dz1[i];
            for j in 0..d {
                g.w1[i * d + j] = dz1[i] * cache.z0[j];
            }
        }
        // the embedding sees the same gradient as the flattened input
        let embed_row = &mut g.time_embed[(cache.t - 1) * d..cache.t * d];
        for (j, slot) in embed_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..h1 {
                acc += self.w1[i * d + j] * dz1[i];
            }
            *slot = acc;
        }
        Ok(g)
    }

    /// One SGD step: params -= lr · grads. Invalidates existing caches.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (p, g) in [
            (&mut self.w1, &grads.w1),
            (&mut self.b1, &grads.b1),
            (&mut self.w2, &grads.w2),
            (&mut self.b2, &grads.b2),
            (&mut self.w3, &grads.w3),
            (&mut self.b3, &grads.b3),
            (&mut self.time_embed, &grads.time_embed),
        ] {
            for (pv, gv) in p.iter_mut().zip(g) {
                *pv -= learning_rate * gv;
            }
        }
        self.revision += 1;
    }

    fn check_input(&self, x_t: &TimeSeries, t: usize) -> Result<(), PredictorError> {
        if t < 1 || t > self.config.t_max {
            return Err(PredictorError::StepOutOfRange {
                t,
                t_max: self.config.t_max,
            });
        }
        if x_t.shape() != (self.config.channels, self.config.length) {
            return Err(PredictorError::Series(SeriesError::ShapeMismatch {
                left: x_t.shape(),
                right: (self.config.channels, self.config.length),
            }));
        }
        Ok(())
    }
}

impl EpsilonPredictor for DenoiserModel {
    fn predict(
        &self,
        x_t: &TimeSeries,
        t: usize,
        _schedule: &NoiseSchedule,
    ) -> Result<TimeSeries, PredictorError> {
        let (eps_hat, _) = self.forward(x_t, t)?;
        Ok(eps_hat)
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        *o = b[i] + row.iter().zip(x).map(|(&wv, &xv)| wv * xv).sum::<f64>();
    }
}

fn fill_scaled_normal<R: Rng + ?Sized>(w: &mut [f64], fan_in: usize, rng: &mut R) {
    let scale = 1.0 / (fan_in as f64).sqrt();
    for v in w.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z;
    }
}

/// Mean squared error between a prediction and the true noise.
pub fn epsilon_mse(eps_hat: &TimeSeries, eps: &TimeSeries) -> Result<f64, SeriesError> {
    eps_hat.shape_check(eps)?;
    let n = eps_hat.num_elements() as f64;
    Ok(eps_hat
        .values()
        .iter()
        .zip(eps.values())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Trains the model with single-sample SGD on the noise-prediction
/// objective: draw a sample, a uniform step `t` and fresh noise, diffuse,
/// and regress the prediction onto the injected noise.
///
/// Returns the per-step loss log. A non-finite loss aborts with
/// [`TrainError::Diverged`].
pub fn train<R: Rng + ?Sized>(
    model: &mut DenoiserModel,
    data: &[TimeSeries],
    schedule: &NoiseSchedule,
    steps: usize,
    learning_rate: f64,
    rng: &mut R,
) -> Result<Vec<f64>, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if schedule.t_max() != model.config.t_max {
        return Err(TrainError::ScheduleMismatch {
            model_t_max: model.config.t_max,
            schedule_t_max: schedule.t_max(),
        });
    }
    let (channels, length) = (model.config.channels, model.config.length);
    let dim = model.config.dim() as f64;
    let mut log = Vec::with_capacity(steps);
    for step in 0..steps {
        let sample = &data[rng.random_range(0..data.len())];
        let t = rng.random_range(1..=schedule.t_max());
        let eps = TimeSeries::standard_normal(channels, length, rng)?;
        let x_t = diffuse(sample, t, &eps, schedule).map_err(|e| match e {
            crate::forward::ForwardError::Series(s) => TrainError::Series(s),
            crate::forward::ForwardError::StepOutOfRange { t, t_max } => {
                TrainError::Predictor(PredictorError::StepOutOfRange { t, t_max })
            }
        })?;
        let (eps_hat, cache) = model.forward(&x_t, t)?;
        let loss = epsilon_mse(&eps_hat, &eps)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step });
        }
        let grad_out: Vec<f64> = eps_hat
            .values()
            .iter()
            .zip(eps.values())
            .map(|(&p, &e)| 2.0 * (p - e) / dim)
            .collect();
        let grads = model.backward(&cache, &grad_out)?;
        model.apply_gradients(&grads, learning_rate);
        log.push(loss);
    }
    Ok(log)
}

/// Central-difference step for [`finite_difference_max_rel_error`].
pub const FD_STEP: f64 = 1e-5;

/// Verifies the hand-written backward pass against central finite
/// differences of the squared-error loss.
///
/// For `probes` random `(x_t, t, eps)` triples, every parameter is
/// perturbed by ±[`FD_STEP`] and the numeric slope is compared to the
/// analytic gradient. Returns the worst relative error
/// `|num − ana| / max(|num| + |ana|, 1e-8)` seen across all parameters.
pub fn finite_difference_max_rel_error<R: Rng + ?Sized>(
    model: &DenoiserModel,
    probes: usize,
    rng: &mut R,
) -> Result<f64, TrainError> {
    let config = model.config().clone();
    let (channels, length) = (config.channels, config.length);
    let dim = config.dim() as f64;
    let base = model.flatten_params();
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let x_t = TimeSeries::standard_normal(channels, length, rng)?;
        let eps = TimeSeries::standard_normal(channels, length, rng)?;
        let t = rng.random_range(1..=config.t_max);

        let (eps_hat, cache) = model.forward(&x_t, t)?;
        let grad_out: Vec<f64> = eps_hat
            .values()
            .iter()
            .zip(eps.values())
            .map(|(&p, &e)| 2.0 * (p - e) / dim)
            .collect();
        let analytic = model.backward(&cache, &grad_out)?.flatten();

        let mut probe_params = base.clone();
        for k in 0..base.len() {
            let original = probe_params[k];
            probe_params[k] = original + FD_STEP;
            let plus = DenoiserModel::from_flat_params(config.clone(), &probe_params)?;
            probe_params[k] = original - FD_STEP;
            let minus = DenoiserModel::from_flat_params(config.clone(), &probe_params)?;
            probe_params[k] = original;

            let (out_plus, _) = plus.forward(&x_t, t)?;
            let (out_minus, _) = minus.forward(&x_t, t)?;
            let loss_plus = epsilon_mse(&out_plus, &eps)?;
            let loss_minus = epsilon_mse(&out_minus, &eps)?;
            let numeric = (loss_plus - loss_minus) / (2.0 * FD_STEP);
            let rel = (numeric - analytic[k]).abs() / (numeric.abs() + analytic[k].abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
