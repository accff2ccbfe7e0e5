//! Deterministic DDIM and sawtooth-resampling diffusion for multichannel
//! time series.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`series::TimeSeries`]: a fixed-shape channels × length block of
//!   finite `f64` samples, used for clean data, noisy states and noise alike.
//! - [`schedule`]: linear variance schedules, step subsequences and
//!   sawtooth resampling plans.
//! - [`forward`]: the closed-form forward noising `q(x_t | x_0)`.
//! - [`predictor`]: the noise-predictor abstraction with an exact Gaussian
//!   oracle, a ground-truth test double and a small trainable denoiser with
//!   hand-written backpropagation.
//! - [`sampler`]: DDPM ancestral sampling, the DDIM reverse step, full
//!   reverse passes and the sawtooth sampler, all with trajectory recording
//!   and predictor-call accounting.
//! - [`evaluation`]: periodogram-based similarity scoring, per-step
//!   similarity curves and a train-on-synthetic / test-on-real harness.
//! - [`data`]: seeded synthetic dataset generators.
//!
//! Everything is `no_std`-compatible (with `alloc`); file formats, the CLI
//! and wall-clock measurement live in the companion `sawtooth-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod evaluation;
pub mod forward;
mod linalg;
pub mod predictor;
pub mod sampler;
pub mod schedule;
pub mod seed;
pub mod series;

pub use predictor::EpsilonPredictor;
pub use sampler::Trajectory;
pub use schedule::{NoiseSchedule, SamplingPlan};
pub use series::TimeSeries;
