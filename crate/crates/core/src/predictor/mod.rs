//! Noise predictors: the behavioral contract plus three implementations.
//!
//! - [`GaussianOracle`](oracle::GaussianOracle): the exact minimum-MSE
//!   predictor when the data distribution is Gaussian; used to verify the
//!   samplers end to end.
//! - [`GroundTruthPredictor`]: a test double that replays a stored noise
//!   realization, turning reverse steps into exact algebraic transport.
//! - [`DenoiserModel`](denoiser::DenoiserModel): a small trainable MLP with
//!   hand-written backpropagation.

use core::fmt;

use crate::linalg::LinalgError;
use crate::schedule::NoiseSchedule;
use crate::series::{SeriesError, TimeSeries};

pub mod denoiser;
pub mod oracle;

pub use denoiser::{DenoiserConfig, DenoiserModel, Gradients, TrainError, train};
pub use oracle::{CovarianceSpec, GaussianDataSpec, GaussianOracle};

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorError {
    Series(SeriesError),
    /// Step index outside the range the predictor was built for.
    StepOutOfRange {
        t: usize,
        t_max: usize,
    },
    /// A linear solve failed; cannot happen for a valid Gaussian spec.
    Linalg(LinalgError),
    /// Backward called with a cache from a different parameter revision.
    StaleCache {
        cache_revision: u64,
        model_revision: u64,
    },
}

impl fmt::Display for PredictorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorError::Series(e) => write!(f, "{e}"),
            PredictorError::StepOutOfRange { t, t_max } => {
                write!(f, "step {t} outside 1..={t_max}")
            }
            PredictorError::Linalg(e) => write!(f, "{e}"),
            PredictorError::StaleCache {
                cache_revision,
                model_revision,
            } => write!(
                f,
                "activation cache from revision {cache_revision} does not match model revision {model_revision}"
            ),
        }
    }
}

impl core::error::Error for PredictorError {}

impl From<SeriesError> for PredictorError {
    fn from(e: SeriesError) -> Self {
        PredictorError::Series(e)
    }
}

impl From<LinalgError> for PredictorError {
    fn from(e: LinalgError) -> Self {
        PredictorError::Linalg(e)
    }
}

/// Shape-preserving estimator of the standard-normal noise component of a
/// noisy state.
pub trait EpsilonPredictor {
    /// Estimates ε given the state `x_t` at step `t`.
    ///
    /// Implementations must return a series of the same shape as `x_t` and
    /// must never produce non-finite values for finite input.
    fn predict(
        &self,
        x_t: &TimeSeries,
        t: usize,
        schedule: &NoiseSchedule,
    ) -> Result<TimeSeries, PredictorError>;
}

/// Replays a stored noise realization regardless of the queried state.
///
/// Feeding the noise that actually produced a state back into a reverse
/// step makes the step an exact algebraic transport, which is what the
/// sampler identity tests rely on.
#[derive(Debug, Clone)]
pub struct GroundTruthPredictor {
    eps: TimeSeries,
}

impl GroundTruthPredictor {
    pub fn new(eps: TimeSeries) -> Self {
        Self { eps }
    }

    pub fn eps(&self) -> &TimeSeries {
        &self.eps
    }
}

impl EpsilonPredictor for GroundTruthPredictor {
    fn predict(
        &self,
        x_t: &TimeSeries,
        _t: usize,
        _schedule: &NoiseSchedule,
    ) -> Result<TimeSeries, PredictorError> {
        x_t.shape_check(&self.eps)?;
        Ok(self.eps.clone())
    }
}
