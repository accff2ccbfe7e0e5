//! Variance schedules, step subsequences and sawtooth resampling plans.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

/// Default β range used when a caller does not configure one.
pub const DEFAULT_BETA_START: f64 = 1e-4;
/// See [`DEFAULT_BETA_START`].
pub const DEFAULT_BETA_END: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleError {
    /// T must be at least 1.
    InvalidStepCount { t_max: usize },
    /// β bounds must satisfy 0 < start ≤ end < 1.
    InvalidBetaRange { beta_start: f64, beta_end: f64 },
    /// Subsequence length must satisfy 1 ≤ S ≤ T.
    InvalidSubsequence { t_max: usize, requested: usize },
    /// The step budget must split evenly across sawtooth iterations.
    IndivisibleBudget {
        total_steps: usize,
        iterations: usize,
    },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::InvalidStepCount { t_max } => {
                write!(f, "step count T must be >= 1, got {t_max}")
            }
            ScheduleError::InvalidBetaRange {
                beta_start,
                beta_end,
            } => write!(
                f,
                "beta bounds must satisfy 0 < start <= end < 1, got ({beta_start}, {beta_end})"
            ),
            ScheduleError::InvalidSubsequence { t_max, requested } => {
                write!(f, "subsequence length {requested} not in 1..={t_max}")
            }
            ScheduleError::IndivisibleBudget {
                total_steps,
                iterations,
            } => write!(
                f,
                "total_steps {total_steps} is not divisible by {iterations} iterations"
            ),
        }
    }
}

impl core::error::Error for ScheduleError {}

/// β/α/ᾱ tables over `T` diffusion steps.
///
/// Steps are indexed 1..=T to match the usual diffusion-time convention;
/// `alpha_bar(0)` is defined as 1 so the final reverse transition lands on
/// the clean-data estimate exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    t_max: usize,
    beta_start: f64,
    beta_end: f64,
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn beta_start(&self) -> f64 {
        self.beta_start
    }

    pub fn beta_end(&self) -> f64 {
        self.beta_end
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// β_t for a 1-based step index.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// α_t = 1 − β_t for a 1-based step index.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// ᾱ_t = ∏_{s ≤ t} α_s, with the `t = 0` convention ᾱ_0 = 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 { 1.0 } else { self.alpha_bars[t - 1] }
    }

    /// True when `t` is a valid 1-based step index.
    pub fn contains_step(&self, t: usize) -> bool {
        t >= 1 && t <= self.t_max
    }
}

/// An affine β ramp from `beta_start` to `beta_end` inclusive.
///
/// `T = 1` degenerates to `[beta_start]`.
pub fn linear_betas(
    t_max: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<Vec<f64>, ScheduleError> {
    if t_max == 0 {
        return Err(ScheduleError::InvalidStepCount { t_max });
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)
        || !beta_start.is_finite()
        || !beta_end.is_finite()
    {
        return Err(ScheduleError::InvalidBetaRange {
            beta_start,
            beta_end,
        });
    }
    if t_max == 1 {
        return Ok(vec![beta_start]);
    }
    let span = beta_end - beta_start;
    let denom = (t_max - 1) as f64;
    let mut betas: Vec<f64> = (0..t_max)
        .map(|i| beta_start + span * i as f64 / denom)
        .collect();
    // both endpoints are exact, not just correctly rounded
    betas[t_max - 1] = beta_end;
    Ok(betas)
}

/// Builds the full β/α/ᾱ tables for a linear schedule.
pub fn build_schedule(
    t_max: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<NoiseSchedule, ScheduleError> {
    let betas = linear_betas(t_max, beta_start, beta_end)?;
    let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
    let alpha_bars: Vec<f64> = alphas
        .iter()
        .scan(1.0, |prod, a| {
            *prod *= a;
            Some(*prod)
        })
        .collect();
    Ok(NoiseSchedule {
        t_max,
        beta_start,
        beta_end,
        betas,
        alphas,
        alpha_bars,
    })
}

/// Picks `s` strictly increasing step indices out of `1..=t_max`.
///
/// The rule is fixed so results are reproducible: the i-th index is
/// `round(i * T / S)` for `i = 1..=S`, rounding half away from zero. The
/// spacing `T / S >= 1` makes the result strictly increasing with the last
/// index exactly `T`.
pub fn select_subsequence(t_max: usize, s: usize) -> Result<Vec<usize>, ScheduleError> {
    if s == 0 || s > t_max {
        return Err(ScheduleError::InvalidSubsequence {
            t_max,
            requested: s,
        });
    }
    Ok((1..=s)
        .map(|i| ((i * t_max) as f64 / s as f64).round() as usize)
        .collect())
}

/// A reverse-pass plan: the τ subsequence plus the sawtooth iteration count.
///
/// `iterations = 1` describes a standard single-pass DDIM run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPlan {
    taus: Vec<usize>,
    iterations: usize,
    steps_per_iteration: usize,
    total_steps: usize,
}

impl SamplingPlan {
    /// Single-pass plan over `steps` evenly spaced indices ending at `t_max`.
    pub fn ddim(t_max: usize, steps: usize) -> Result<Self, ScheduleError> {
        let taus = select_subsequence(t_max, steps)?;
        Ok(Self {
            taus,
            iterations: 1,
            steps_per_iteration: steps,
            total_steps: steps,
        })
    }

    /// Single-pass plan visiting every step `1..=t_max`.
    pub fn full(t_max: usize) -> Result<Self, ScheduleError> {
        Self::ddim(t_max, t_max)
    }

    /// Strictly increasing step indices; the last entry is always T.
    pub fn taus(&self) -> &[usize] {
        &self.taus
    }

    /// The sawtooth iteration count N.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn steps_per_iteration(&self) -> usize {
        self.steps_per_iteration
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }
}

/// Splits a fixed step budget evenly across `iterations` sawtooth passes.
///
/// Every pass reuses the same schedule and the same τ subsequence; the
/// reset between passes changes bookkeeping only, never the tables.
pub fn build_sawtooth_plan(
    total_steps: usize,
    iterations: usize,
    t_max: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<(NoiseSchedule, SamplingPlan), ScheduleError> {
    if iterations == 0 || total_steps == 0 || !total_steps.is_multiple_of(iterations) {
        return Err(ScheduleError::IndivisibleBudget {
            total_steps,
            iterations,
        });
    }
    let steps_per_iteration = total_steps / iterations;
    let schedule = build_schedule(t_max, beta_start, beta_end)?;
    let taus = select_subsequence(t_max, steps_per_iteration)?;
    Ok((
        schedule,
        SamplingPlan {
            taus,
            iterations,
            steps_per_iteration,
            total_steps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_betas_endpoints() {
        let b = linear_betas(2, 1e-4, 0.02).unwrap();
        assert_eq!(b, vec![1e-4, 0.02]);
        let b = linear_betas(1, 1e-4, 0.02).unwrap();
        assert_eq!(b, vec![1e-4]);
    }

    #[test]
    fn linear_betas_midpoint() {
        let b = linear_betas(3, 0.1, 0.3).unwrap();
        assert_relative_eq!(b[0], 0.1, max_relative = 1e-15);
        assert_relative_eq!(b[1], 0.2, max_relative = 1e-15);
        assert_relative_eq!(b[2], 0.3, max_relative = 1e-15);
    }

    #[test]
    fn linear_betas_rejects_bad_bounds() {
        assert!(linear_betas(10, 0.0, 0.02).is_err());
        assert!(linear_betas(10, 0.02, 1e-4).is_err());
        assert!(linear_betas(10, 1e-4, 1.0).is_err());
        assert!(linear_betas(0, 1e-4, 0.02).is_err());
        assert!(linear_betas(10, f64::NAN, 0.02).is_err());
    }

    #[test]
    fn schedule_products_hand_checked() {
        let s = build_schedule(2, 0.1, 0.2).unwrap();
        assert_relative_eq!(s.alpha_bar(1), 0.9, max_relative = 1e-15);
        assert_relative_eq!(s.alpha_bar(2), 0.72, max_relative = 1e-15);
        assert_eq!(s.alpha_bar(0), 1.0);

        let s = build_schedule(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bars(), &[0.5]);
    }

    #[test]
    fn alpha_bars_strictly_decreasing() {
        let s = build_schedule(500, 1e-4, 0.02).unwrap();
        for w in s.alpha_bars().windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(s.alpha_bars().iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn subsequence_examples() {
        assert_eq!(
            select_subsequence(10, 10).unwrap(),
            (1..=10).collect::<Vec<_>>()
        );
        assert_eq!(select_subsequence(10, 2).unwrap(), vec![5, 10]);
        let taus = select_subsequence(3000, 100).unwrap();
        assert_eq!(taus.len(), 100);
        assert_eq!(*taus.last().unwrap(), 3000);
        assert_eq!(&taus[..3], &[30, 60, 90]);
    }

    #[test]
    fn subsequence_rejects_out_of_range() {
        assert!(select_subsequence(10, 11).is_err());
        assert!(select_subsequence(10, 0).is_err());
    }

    #[test]
    fn sawtooth_plan_budget() {
        let (_, plan) = build_sawtooth_plan(100, 1, 1000, 1e-4, 0.02).unwrap();
        assert_eq!(plan.steps_per_iteration(), 100);
        let (_, plan) = build_sawtooth_plan(100, 10, 1000, 1e-4, 0.02).unwrap();
        assert_eq!(plan.steps_per_iteration(), 10);
        assert_eq!(plan.total_steps(), 100);
        assert_eq!(plan.taus().len(), 10);

        assert_eq!(
            build_sawtooth_plan(100, 3, 1000, 1e-4, 0.02),
            Err(ScheduleError::IndivisibleBudget {
                total_steps: 100,
                iterations: 3
            })
        );
    }

    #[test]
    fn full_plan_is_identity_subsequence() {
        let plan = SamplingPlan::full(7).unwrap();
        assert_eq!(plan.taus(), &[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(plan.iterations(), 1);
    }
}
