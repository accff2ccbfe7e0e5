//! Closed-form forward noising `q(x_t | x_0)`.

use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::schedule::NoiseSchedule;
use crate::series::{SeriesError, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardError {
    Series(SeriesError),
    /// Step index outside 1..=T.
    StepOutOfRange {
        t: usize,
        t_max: usize,
    },
}

impl fmt::Display for ForwardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForwardError::Series(e) => write!(f, "{e}"),
            ForwardError::StepOutOfRange { t, t_max } => {
                write!(f, "step {t} outside 1..={t_max}")
            }
        }
    }
}

impl core::error::Error for ForwardError {}

impl From<SeriesError> for ForwardError {
    fn from(e: SeriesError) -> Self {
        ForwardError::Series(e)
    }
}

/// Jumps straight from clean data to the noisy state at step `t`:
/// `sqrt(ᾱ_t)·x0 + sqrt(1−ᾱ_t)·eps`, elementwise.
pub fn diffuse(
    x0: &TimeSeries,
    t: usize,
    eps: &TimeSeries,
    schedule: &NoiseSchedule,
) -> Result<TimeSeries, ForwardError> {
    if !schedule.contains_step(t) {
        return Err(ForwardError::StepOutOfRange {
            t,
            t_max: schedule.t_max(),
        });
    }
    let ab = schedule.alpha_bar(t);
    let signal = ab.sqrt();
    let noise = (1.0 - ab).sqrt();
    Ok(x0.zip_map(eps, |x, e| signal * x + noise * e)?)
}
