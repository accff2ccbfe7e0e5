//! Exact minimum-MSE noise prediction for Gaussian data.
//!
//! When `x0 ~ N(mu, C)` and `x_t = sqrt(ab)·x0 + sqrt(1-ab)·eps`, the pair
//! `(x0, x_t)` is jointly Gaussian, so `E[x0 | x_t]` has a closed form and
//! the optimal noise estimate follows from it. This turns the samplers into
//! something that can be verified against an analytically known target
//! distribution.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, LinalgError};
use crate::schedule::NoiseSchedule;
use crate::series::TimeSeries;

use super::{EpsilonPredictor, PredictorError};

/// Covariance of the flattened channels × length vector.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// Per-channel stationary AR(1): cov(t, u) = scale² · rho^|t-u|, channels
    /// independent. Positive definite for |rho| < 1 and scale > 0.
    Ar1 { rho: f64, scale: f64 },
    /// Full row-major D × D matrix over the flattened dimension.
    Dense { matrix: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaussianSpecError {
    /// AR(1) requires |rho| < 1 and scale > 0.
    InvalidAr1 { rho: f64, scale: f64 },
    /// Dense covariance entries must satisfy matrix[i][j] == matrix[j][i].
    NotSymmetric { row: usize, col: usize },
    /// Wrong entry count for the flattened dimension.
    WrongSize { expected: usize, got: usize },
    /// Cholesky failed: the matrix is not positive definite.
    NotPositiveDefinite(LinalgError),
}

impl fmt::Display for GaussianSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaussianSpecError::InvalidAr1 { rho, scale } => {
                write!(
                    f,
                    "AR(1) needs |rho| < 1 and scale > 0, got rho={rho} scale={scale}"
                )
            }
            GaussianSpecError::NotSymmetric { row, col } => {
                write!(f, "covariance not symmetric at ({row}, {col})")
            }
            GaussianSpecError::WrongSize { expected, got } => {
                write!(f, "covariance needs {expected} entries, got {got}")
            }
            GaussianSpecError::NotPositiveDefinite(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for GaussianSpecError {}

/// A Gaussian data distribution `N(mu, C)` over flattened series.
///
/// Construction materializes and factorizes the covariance once, which both
/// validates positive definiteness and gives the sampler in
/// [`data::gen_gaussian`](crate::data::gen_gaussian) its Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianDataSpec {
    mu: TimeSeries,
    cov: CovarianceSpec,
    cov_dense: Vec<f64>,
    cov_chol: Vec<f64>,
}

impl GaussianDataSpec {
    pub fn new(mu: TimeSeries, cov: CovarianceSpec) -> Result<Self, GaussianSpecError> {
        let dim = mu.num_elements();
        let cov_dense = match &cov {
            CovarianceSpec::Ar1 { rho, scale } => {
                if !(rho.abs() < 1.0 && *scale > 0.0) || !rho.is_finite() || !scale.is_finite() {
                    return Err(GaussianSpecError::InvalidAr1 {
                        rho: *rho,
                        scale: *scale,
                    });
                }
                ar1_block_diagonal(mu.channels(), mu.length(), *rho, *scale)
            }
            CovarianceSpec::Dense { matrix } => {
                if matrix.len() != dim * dim {
                    return Err(GaussianSpecError::WrongSize {
                        expected: dim * dim,
                        got: matrix.len(),
                    });
                }
                for i in 0..dim {
                    for j in 0..i {
                        let a = matrix[i * dim + j];
                        let b = matrix[j * dim + i];
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(GaussianSpecError::NotSymmetric { row: i, col: j });
                        }
                    }
                }
                matrix.clone()
            }
        };
        let cov_chol =
            linalg::cholesky(&cov_dense, dim).map_err(GaussianSpecError::NotPositiveDefinite)?;
        Ok(Self {
            mu,
            cov,
            cov_dense,
            cov_chol,
        })
    }

    /// AR(1) spec with the given per-channel correlation and scale.
    pub fn ar1(mu: TimeSeries, rho: f64, scale: f64) -> Result<Self, GaussianSpecError> {
        Self::new(mu, CovarianceSpec::Ar1 { rho, scale })
    }

    pub fn mu(&self) -> &TimeSeries {
        &self.mu
    }

    pub fn cov(&self) -> &CovarianceSpec {
        &self.cov
    }

    /// Flattened dimension D = channels × length.
    pub fn dim(&self) -> usize {
        self.mu.num_elements()
    }

    /// Materialized row-major D × D covariance.
    pub fn cov_matrix(&self) -> &[f64] {
        &self.cov_dense
    }

    /// Lower Cholesky factor of the covariance.
    pub fn cov_cholesky(&self) -> &[f64] {
        &self.cov_chol
    }
}

fn ar1_block_diagonal(channels: usize, length: usize, rho: f64, scale: f64) -> Vec<f64> {
    let dim = channels * length;
    let s2 = scale * scale;
    let mut cov = vec![0.0; dim * dim];
    for c in 0..channels {
        let base = c * length;
        for i in 0..length {
            for j in 0..length {
                cov[(base + i) * dim + (base + j)] = s2 * rho.powi((i as i32 - j as i32).abs());
            }
        }
    }
    cov
}

/// The exact conditional-expectation noise predictor for a Gaussian spec.
#[derive(Debug, Clone)]
pub struct GaussianOracle {
    spec: GaussianDataSpec,
}

impl GaussianOracle {
    pub fn new(spec: GaussianDataSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &GaussianDataSpec {
        &self.spec
    }

    /// `E[x0 | x_t]` under the data spec at step `t`.
    ///
    /// `mu + sqrt(ab)·C·(ab·C + (1-ab)·I)^-1·(x_t - sqrt(ab)·mu)` by joint
    /// Gaussian conditioning.
    pub fn posterior_mean(
        &self,
        x_t: &TimeSeries,
        t: usize,
        schedule: &NoiseSchedule,
    ) -> Result<TimeSeries, PredictorError> {
        let (ab, _) = self.step_coefficients(x_t, t, schedule)?;
        let dim = self.spec.dim();
        let cov = self.spec.cov_matrix();
        let mu = self.spec.mu.values();
        let sqrt_ab = ab.sqrt();

        // residual r = x_t - sqrt(ab) mu, then y = (ab C + (1-ab) I)^-1 r
        let mut y: Vec<f64> = x_t
            .values()
            .iter()
            .zip(mu)
            .map(|(&x, &m)| x - sqrt_ab * m)
            .collect();
        let mut marginal = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                marginal[i * dim + j] = ab * cov[i * dim + j];
            }
            marginal[i * dim + i] += 1.0 - ab;
        }
        let l = linalg::cholesky(&marginal, dim)?;
        linalg::cholesky_solve(&l, dim, &mut y);

        let mut cy = vec![0.0; dim];
        linalg::mat_vec(cov, dim, &y, &mut cy);
        let values = mu.iter().zip(&cy).map(|(&m, &v)| m + sqrt_ab * v).collect();
        Ok(TimeSeries::new(x_t.channels(), x_t.length(), values)?)
    }

    /// Expected per-element squared error of the oracle itself at step `t`,
    /// `tr(I - (1-ab)·(ab·C + (1-ab)·I)^-1) / D`.
    ///
    /// No predictor can do better on data drawn from this spec, which makes
    /// this the reference floor for trained denoisers.
    pub fn expected_residual_mse(&self, t: usize, schedule: &NoiseSchedule) -> f64 {
        let ab = schedule.alpha_bar(t);
        let dim = self.spec.dim();
        let cov = self.spec.cov_matrix();
        let mut marginal = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                marginal[i * dim + j] = ab * cov[i * dim + j];
            }
            marginal[i * dim + i] += 1.0 - ab;
        }
        let l = linalg::cholesky(&marginal, dim).expect("marginal covariance is SPD");
        let mut trace_inv = 0.0;
        let mut e = vec![0.0; dim];
        for i in 0..dim {
            e.fill(0.0);
            e[i] = 1.0;
            linalg::cholesky_solve(&l, dim, &mut e);
            trace_inv += e[i];
        }
        1.0 - (1.0 - ab) * trace_inv / dim as f64
    }

    fn step_coefficients(
        &self,
        x_t: &TimeSeries,
        t: usize,
        schedule: &NoiseSchedule,
    ) -> Result<(f64, f64), PredictorError> {
        if !schedule.contains_step(t) {
            return Err(PredictorError::StepOutOfRange {
                t,
                t_max: schedule.t_max(),
            });
        }
        x_t.shape_check(&self.spec.mu)?;
        let ab = schedule.alpha_bar(t);
        Ok((ab, 1.0 - ab))
    }
}

impl EpsilonPredictor for GaussianOracle {
    fn predict(
        &self,
        x_t: &TimeSeries,
        t: usize,
        schedule: &NoiseSchedule,
    ) -> Result<TimeSeries, PredictorError> {
        let (ab, one_minus_ab) = self.step_coefficients(x_t, t, schedule)?;
        let posterior = self.posterior_mean(x_t, t, schedule)?;
        let sqrt_ab = ab.sqrt();
        let inv = 1.0 / one_minus_ab.sqrt();
        Ok(x_t.zip_map(&posterior, |x, m| (x - sqrt_ab * m) * inv)?)
    }
}
