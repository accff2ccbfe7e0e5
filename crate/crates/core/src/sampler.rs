//! Reverse-process samplers: the DDIM step, full reverse passes, the DDPM
//! ancestral baseline and the sawtooth resampler.
//!
//! All samplers walk a [`SamplingPlan`] from τ_S = T down to the data state
//! and record a [`Trajectory`]. With `eta = 0` no randomness is consumed at
//! all, so outputs are a pure function of the starting state.

use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;

use crate::predictor::{EpsilonPredictor, PredictorError};
use crate::schedule::{NoiseSchedule, SamplingPlan};
use crate::series::{SeriesError, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum SampleError {
    Series(SeriesError),
    /// τ indices must satisfy 0 ≤ τ_prev ≤ τ_cur ≤ T with τ_cur ≥ 1.
    InvalidTransition {
        tau_prev: usize,
        tau_cur: usize,
        t_max: usize,
    },
    /// ᾱ must decrease along the chain; anything else is a corrupt schedule.
    AlphaBarOrdering {
        tau_prev: usize,
        tau_cur: usize,
    },
    /// 1 − ᾱ_prev − σ² went negative (σ too large for this transition).
    NegativeRadicand {
        sigma: f64,
    },
    /// σ > 0 requires an injected-noise series.
    MissingNoise,
    /// η must be finite and ≥ 0.
    InvalidEta {
        eta: f64,
    },
    /// The plan was built for a different T than the schedule.
    PlanMismatch {
        plan_t_max: usize,
        schedule_t_max: usize,
    },
    /// A degenerate same-step transition is only defined for σ = 0.
    NoiseOnDegenerateStep {
        tau: usize,
    },
    /// Predictor failure, tagged with the 1-based step it happened on.
    Predictor {
        step: usize,
        tau: usize,
        source: PredictorError,
    },
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleError::Series(e) => write!(f, "{e}"),
            SampleError::InvalidTransition {
                tau_prev,
                tau_cur,
                t_max,
            } => write!(
                f,
                "invalid transition {tau_cur} -> {tau_prev} for T = {t_max}"
            ),
            SampleError::AlphaBarOrdering { tau_prev, tau_cur } => write!(
                f,
                "alpha_bar not decreasing between steps {tau_prev} and {tau_cur}"
            ),
            SampleError::NegativeRadicand { sigma } => {
                write!(
                    f,
                    "sigma {sigma} exceeds the noise budget of this transition"
                )
            }
            SampleError::MissingNoise => write!(f, "sigma > 0 requires a noise series"),
            SampleError::InvalidEta { eta } => write!(f, "eta must be finite and >= 0, got {eta}"),
            SampleError::PlanMismatch {
                plan_t_max,
                schedule_t_max,
            } => write!(
                f,
                "plan targets T = {plan_t_max} but schedule has T = {schedule_t_max}"
            ),
            SampleError::NoiseOnDegenerateStep { tau } => {
                write!(f, "same-step transition at {tau} must have sigma = 0")
            }
            SampleError::Predictor { step, tau, source } => {
                write!(f, "predictor failed at step {step} (tau = {tau}): {source}")
            }
        }
    }
}

impl core::error::Error for SampleError {}

impl From<SeriesError> for SampleError {
    fn from(e: SeriesError) -> Self {
        SampleError::Series(e)
    }
}

/// One recorded reverse transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepLabel {
    /// Sawtooth iteration this transition belongs to, 1-based.
    pub iteration: usize,
    pub tau_from: usize,
    pub tau_to: usize,
}

/// The ordered record of a reverse pass.
///
/// When state recording is on, `states` holds the initial state followed by
/// one state per completed transition; the last recorded state equals
/// [`Trajectory::output`]. With recording off, `states` is empty and only
/// the labels, the predictor-call count and the output remain.
#[derive(Debug, Clone)]
pub struct Trajectory {
    states: Vec<TimeSeries>,
    labels: Vec<StepLabel>,
    nfe: usize,
    wall_time: Duration,
    output: TimeSeries,
}

impl Trajectory {
    pub(crate) fn from_parts(
        states: Vec<TimeSeries>,
        labels: Vec<StepLabel>,
        output: TimeSeries,
    ) -> Self {
        let nfe = labels.len();
        Self {
            states,
            labels,
            nfe,
            wall_time: Duration::ZERO,
            output,
        }
    }

    /// Recorded states; empty when recording was off.
    pub fn states(&self) -> &[TimeSeries] {
        &self.states
    }

    /// One label per transition, in execution order.
    pub fn labels(&self) -> &[StepLabel] {
        &self.labels
    }

    /// Number of predictor evaluations spent producing the output.
    pub fn nfe(&self) -> usize {
        self.nfe
    }

    /// The final (data-space) state of the pass.
    pub fn output(&self) -> &TimeSeries {
        &self.output
    }

    pub fn recorded(&self) -> bool {
        !self.states.is_empty()
    }

    /// Wall time is stamped by callers that can measure it; the sampler
    /// itself has no clock.
    pub fn wall_time(&self) -> Duration {
        self.wall_time
    }

    pub fn set_wall_time(&mut self, wall_time: Duration) {
        self.wall_time = wall_time;
    }
}

/// Number of predictor evaluations recorded in a trajectory.
pub fn count_nfe(trajectory: &Trajectory) -> usize {
    trajectory.nfe()
}

/// Noise scale for a transition under the η parameterization:
/// `eta · sqrt((1−ᾱ_prev)/(1−ᾱ_cur)) · sqrt(1 − ᾱ_cur/ᾱ_prev)`.
///
/// η = 0 is the deterministic sampler; η = 1 on adjacent steps reproduces
/// the DDPM posterior standard deviation.
pub fn sigma_from_eta(
    eta: f64,
    tau_prev: usize,
    tau_cur: usize,
    schedule: &NoiseSchedule,
) -> Result<f64, SampleError> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(SampleError::InvalidEta { eta });
    }
    check_transition(tau_prev, tau_cur, schedule)?;
    if eta == 0.0 || tau_prev == tau_cur {
        return Ok(0.0);
    }
    let ab_cur = schedule.alpha_bar(tau_cur);
    let ab_prev = schedule.alpha_bar(tau_prev);
    Ok(eta * ((1.0 - ab_prev) / (1.0 - ab_cur)).sqrt() * (1.0 - ab_cur / ab_prev).sqrt())
}

/// One reverse transition τ_cur → τ_prev:
///
/// `sqrt(ᾱ_prev)·(x − sqrt(1−ᾱ_cur)·ε̂)/sqrt(ᾱ_cur)
///  + sqrt(1−ᾱ_prev−σ²)·ε̂ + σ·noise`
///
/// τ_prev = 0 denotes the final transition with ᾱ_0 = 1, which returns the
/// model's clean-data estimate exactly. A degenerate τ_prev = τ_cur call
/// with σ = 0 returns the state unchanged.
pub fn ddim_step(
    x_cur: &TimeSeries,
    eps_hat: &TimeSeries,
    tau_cur: usize,
    tau_prev: usize,
    sigma: f64,
    noise: Option<&TimeSeries>,
    schedule: &NoiseSchedule,
) -> Result<TimeSeries, SampleError> {
    check_transition(tau_prev, tau_cur, schedule)?;
    x_cur.shape_check(eps_hat)?;
    if tau_prev == tau_cur {
        if sigma != 0.0 {
            return Err(SampleError::NoiseOnDegenerateStep { tau: tau_cur });
        }
        return Ok(x_cur.clone());
    }
    let ab_cur = schedule.alpha_bar(tau_cur);
    let ab_prev = schedule.alpha_bar(tau_prev);
    if ab_prev <= ab_cur {
        return Err(SampleError::AlphaBarOrdering { tau_prev, tau_cur });
    }
    let radicand = 1.0 - ab_prev - sigma * sigma;
    if radicand < 0.0 {
        return Err(SampleError::NegativeRadicand { sigma });
    }

    let sqrt_ab_cur = ab_cur.sqrt();
    let sqrt_ab_prev = ab_prev.sqrt();
    let noise_cur = (1.0 - ab_cur).sqrt();
    let direction = radicand.sqrt();

    let mut next = x_cur.zip_map(eps_hat, |x, e| {
        sqrt_ab_prev * ((x - noise_cur * e) / sqrt_ab_cur) + direction * e
    })?;
    if sigma != 0.0 {
        let noise = noise.ok_or(SampleError::MissingNoise)?;
        next = next.zip_map(noise, |v, n| v + sigma * n)?;
    }
    Ok(next)
}

fn check_transition(
    tau_prev: usize,
    tau_cur: usize,
    schedule: &NoiseSchedule,
) -> Result<(), SampleError> {
    if tau_cur < 1 || tau_cur > schedule.t_max() || tau_prev > tau_cur {
        return Err(SampleError::InvalidTransition {
            tau_prev,
            tau_cur,
            t_max: schedule.t_max(),
        });
    }
    Ok(())
}

fn check_plan(plan: &SamplingPlan, schedule: &NoiseSchedule) -> Result<(), SampleError> {
    let plan_t_max = *plan.taus().last().expect("plans are never empty");
    if plan_t_max != schedule.t_max() {
        return Err(SampleError::PlanMismatch {
            plan_t_max,
            schedule_t_max: schedule.t_max(),
        });
    }
    Ok(())
}

/// One full sweep down the plan's subsequence, labeled with `iteration`.
#[allow(clippy::too_many_arguments)]
fn reverse_pass<P: EpsilonPredictor + ?Sized, R: Rng + ?Sized>(
    start: TimeSeries,
    iteration: usize,
    predictor: &P,
    schedule: &NoiseSchedule,
    plan: &SamplingPlan,
    eta: f64,
    rng: &mut R,
    states: &mut Vec<TimeSeries>,
    labels: &mut Vec<StepLabel>,
    record: bool,
) -> Result<TimeSeries, SampleError> {
    let taus = plan.taus();
    let mut x = start;
    for i in (0..taus.len()).rev() {
        let tau_cur = taus[i];
        let tau_prev = if i > 0 { taus[i - 1] } else { 0 };
        let step = labels.len() + 1;
        let eps_hat =
            predictor
                .predict(&x, tau_cur, schedule)
                .map_err(|source| SampleError::Predictor {
                    step,
                    tau: tau_cur,
                    source,
                })?;
        let sigma = sigma_from_eta(eta, tau_prev, tau_cur, schedule)?;
        let noise = if sigma > 0.0 {
            Some(TimeSeries::standard_normal(x.channels(), x.length(), rng)?)
        } else {
            None
        };
        x = ddim_step(
            &x,
            &eps_hat,
            tau_cur,
            tau_prev,
            sigma,
            noise.as_ref(),
            schedule,
        )?;
        labels.push(StepLabel {
            iteration,
            tau_from: tau_cur,
            tau_to: tau_prev,
        });
        if record {
            states.push(x.clone());
        }
    }
    Ok(x)
}

/// A single DDIM reverse pass over the plan's subsequence.
///
/// Consumes randomness only when `eta > 0`; with `eta = 0` the result is a
/// deterministic function of `x_t`.
pub fn ddim_sample<P: EpsilonPredictor + ?Sized, R: Rng + ?Sized>(
    x_t: &TimeSeries,
    predictor: &P,
    schedule: &NoiseSchedule,
    plan: &SamplingPlan,
    eta: f64,
    rng: &mut R,
    record: bool,
) -> Result<Trajectory, SampleError> {
    check_plan(plan, schedule)?;
    let mut states = Vec::new();
    if record {
        states.push(x_t.clone());
    }
    let mut labels = Vec::new();
    let output = reverse_pass(
        x_t.clone(),
        1,
        predictor,
        schedule,
        plan,
        eta,
        rng,
        &mut states,
        &mut labels,
        record,
    )?;
    Ok(Trajectory::from_parts(states, labels, output))
}

/// Ancestral baseline: a full pass over every step `1..=T` with η = 1.
pub fn ddpm_sample<P: EpsilonPredictor + ?Sized, R: Rng + ?Sized>(
    x_t: &TimeSeries,
    predictor: &P,
    schedule: &NoiseSchedule,
    rng: &mut R,
    record: bool,
) -> Result<Trajectory, SampleError> {
    let plan = SamplingPlan::full(schedule.t_max()).expect("T >= 1 by construction");
    ddim_sample(x_t, predictor, schedule, &plan, 1.0, rng, record)
}

/// The inter-pass handoff of the sawtooth sampler.
///
/// The state is forwarded unchanged; only the step counter is reset to
/// τ_S = T. No renoising, no rescaling. Kept as a named function so that
/// alternative handoffs can be swapped in and compared.
fn sawtooth_handoff(state: TimeSeries) -> TimeSeries {
    state
}

/// N consecutive deterministic DDIM passes with the scheduler reset in
/// between and the step budget split evenly across passes.
///
/// The output of pass k becomes the starting state of pass k+1 via
/// [`sawtooth_handoff`], re-labeled as sitting at τ_S = T. With
/// `plan.iterations() = 1` this is exactly [`ddim_sample`] at η = 0.
pub fn sawtooth_sample<P: EpsilonPredictor + ?Sized, R: Rng + ?Sized>(
    x_t: &TimeSeries,
    predictor: &P,
    schedule: &NoiseSchedule,
    plan: &SamplingPlan,
    rng: &mut R,
    record: bool,
) -> Result<Trajectory, SampleError> {
    check_plan(plan, schedule)?;
    let mut states = Vec::new();
    if record {
        states.push(x_t.clone());
    }
    let mut labels = Vec::new();
    let mut x = x_t.clone();
    for k in 1..=plan.iterations() {
        let pass_output = reverse_pass(
            x,
            k,
            predictor,
            schedule,
            plan,
            0.0,
            rng,
            &mut states,
            &mut labels,
            record,
        )?;
        x = sawtooth_handoff(pass_output);
    }
    Ok(Trajectory::from_parts(states, labels, x))
}
