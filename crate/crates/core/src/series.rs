//! Fixed-shape multichannel sequences of finite samples.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

/// A channels × length block of finite `f64` samples.
///
/// The shape is fixed at construction and every constructor rejects
/// non-finite values, so downstream arithmetic can assume clean input.
/// States at any diffusion time, clean data and noise all share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channels: usize,
    length: usize,
    values: Vec<f64>, // row-major: channel-by-channel
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesError {
    /// Zero channels or zero length.
    EmptyShape,
    /// Backing vector length does not match channels × length.
    LengthMismatch { expected: usize, got: usize },
    /// A NaN or infinity at the given flat index.
    NonFinite { index: usize },
    /// Two series that were required to be shape-equal are not.
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesError::EmptyShape => write!(f, "channels and length must both be positive"),
            SeriesError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
            SeriesError::NonFinite { index } => {
                write!(f, "non-finite value at flat index {index}")
            }
            SeriesError::ShapeMismatch { left, right } => write!(
                f,
                "shape mismatch: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
        }
    }
}

impl core::error::Error for SeriesError {}

impl TimeSeries {
    /// Builds a series from a flat channel-major vector.
    pub fn new(channels: usize, length: usize, values: Vec<f64>) -> Result<Self, SeriesError> {
        if channels == 0 || length == 0 {
            return Err(SeriesError::EmptyShape);
        }
        let expected = channels * length;
        if values.len() != expected {
            return Err(SeriesError::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        Ok(Self {
            channels,
            length,
            values,
        })
    }

    /// An all-zero series.
    pub fn zeros(channels: usize, length: usize) -> Result<Self, SeriesError> {
        if channels == 0 || length == 0 {
            return Err(SeriesError::EmptyShape);
        }
        Ok(Self {
            channels,
            length,
            values: vec![0.0; channels * length],
        })
    }

    /// Builds a series by evaluating `f(channel, t)` over the shape.
    pub fn from_fn(
        channels: usize,
        length: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, SeriesError> {
        if channels == 0 || length == 0 {
            return Err(SeriesError::EmptyShape);
        }
        let mut values = Vec::with_capacity(channels * length);
        for c in 0..channels {
            for t in 0..length {
                values.push(f(c, t));
            }
        }
        Self::new(channels, length, values)
    }

    /// Draws every element from the standard normal distribution.
    pub fn standard_normal<R: Rng + ?Sized>(
        channels: usize,
        length: usize,
        rng: &mut R,
    ) -> Result<Self, SeriesError> {
        if channels == 0 || length == 0 {
            return Err(SeriesError::EmptyShape);
        }
        let values = (0..channels * length)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        Self::new(channels, length, values)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }

    pub fn num_elements(&self) -> usize {
        self.values.len()
    }

    /// Flat channel-major view of the samples.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The samples of one channel.
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }

    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.values[c * self.length + t]
    }

    pub fn same_shape(&self, other: &TimeSeries) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn shape_check(&self, other: &TimeSeries) -> Result<(), SeriesError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(SeriesError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            })
        }
    }

    /// Elementwise map into a new series of the same shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, SeriesError> {
        Self::new(
            self.channels,
            self.length,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Elementwise combination of two shape-equal series.
    pub fn zip_map(
        &self,
        other: &TimeSeries,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, SeriesError> {
        self.shape_check(other)?;
        Self::new(
            self.channels,
            self.length,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Largest absolute difference to another series of the same shape.
    pub fn max_abs_diff(&self, other: &TimeSeries) -> Result<f64, SeriesError> {
        self.shape_check(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Compact single-line description used in error messages.
    pub fn describe(&self) -> String {
        alloc::format!("{}x{}", self.channels, self.length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn new_rejects_bad_input() {
        assert_eq!(TimeSeries::new(0, 3, vec![]), Err(SeriesError::EmptyShape));
        assert_eq!(
            TimeSeries::new(1, 3, vec![1.0, 2.0]),
            Err(SeriesError::LengthMismatch {
                expected: 3,
                got: 2
            })
        );
        assert_eq!(
            TimeSeries::new(1, 2, vec![1.0, f64::NAN]),
            Err(SeriesError::NonFinite { index: 1 })
        );
        assert_eq!(
            TimeSeries::new(1, 2, vec![1.0, f64::INFINITY]),
            Err(SeriesError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn channel_views_are_contiguous() {
        let x = TimeSeries::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(x.channel(0), &[1.0, 2.0, 3.0]);
        assert_eq!(x.channel(1), &[4.0, 5.0, 6.0]);
        assert_eq!(x.get(1, 2), 6.0);
    }

    #[test]
    fn zip_map_checks_shape() {
        let a = TimeSeries::zeros(1, 4).unwrap();
        let b = TimeSeries::zeros(2, 2).unwrap();
        assert!(matches!(
            a.zip_map(&b, |x, y| x + y),
            Err(SeriesError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn standard_normal_is_seed_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = TimeSeries::standard_normal(2, 5, &mut r1).unwrap();
        let b = TimeSeries::standard_normal(2, 5, &mut r2).unwrap();
        assert_eq!(a, b);
    }
}
