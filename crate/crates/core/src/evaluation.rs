//! Spectral similarity scoring and the train-on-synthetic /
//! test-on-real harness.
//!
//! Similarity is the per-channel Bhattacharyya coefficient between
//! unit-normalized periodograms, averaged over channels. It inherits the
//! properties the tracking metric needs — 1 for identical spectra, 0 for
//! disjoint ones, symmetric, scale invariant — while staying dependency-free
//! and exactly reproducible.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::LabeledDataset;
use crate::sampler::Trajectory;
use crate::series::{SeriesError, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    Series(SeriesError),
    /// Periodograms need at least two samples per channel.
    TooShort {
        length: usize,
    },
    /// The reference set must be non-empty.
    EmptyReferenceSet,
    /// Per-step curves need a trajectory with recorded states.
    NoRecordedStates,
    /// TSTR needs at least two classes on both sides.
    NotEnoughClasses {
        side: &'static str,
        classes: usize,
    },
    /// A test label does not exist in the training set.
    UnknownClass {
        label: usize,
    },
    /// The test set is empty.
    EmptyTestSet,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Series(e) => write!(f, "{e}"),
            EvalError::TooShort { length } => {
                write!(f, "periodogram needs length >= 2, got {length}")
            }
            EvalError::EmptyReferenceSet => write!(f, "reference set is empty"),
            EvalError::NoRecordedStates => {
                write!(f, "trajectory has no recorded states")
            }
            EvalError::NotEnoughClasses { side, classes } => {
                write!(f, "{side} set has {classes} classes, need at least 2")
            }
            EvalError::UnknownClass { label } => {
                write!(f, "test label {label} absent from training set")
            }
            EvalError::EmptyTestSet => write!(f, "test set is empty"),
        }
    }
}

impl core::error::Error for EvalError {}

impl From<SeriesError> for EvalError {
    fn from(e: SeriesError) -> Self {
        EvalError::Series(e)
    }
}

/// A similarity value in [0, 1]; 1 means spectrally identical.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Unnormalized squared-magnitude spectra with per-channel totals.
fn raw_periodogram(x: &TimeSeries) -> Result<Vec<(Vec<f64>, f64)>, EvalError> {
    let n = x.length();
    if n < 2 {
        return Err(EvalError::TooShort { length: n });
    }
    let bins = n / 2 + 1;
    let mut spectra = Vec::with_capacity(x.channels());
    for c in 0..x.channels() {
        let signal = x.channel(c);
        let mut power = Vec::with_capacity(bins);
        for f in 0..bins {
            let omega = TAU * f as f64 / n as f64;
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in signal.iter().enumerate() {
                let phase = omega * t as f64;
                re += v * phase.cos();
                im -= v * phase.sin();
            }
            power.push(re * re + im * im);
        }
        let total: f64 = power.iter().sum();
        spectra.push((power, total));
    }
    Ok(spectra)
}

/// Per-channel squared-magnitude DFT over the non-negative frequencies,
/// each channel normalized to unit sum.
///
/// An all-zero channel has no spectral information and maps to the uniform
/// spectrum so scores stay well defined.
pub fn periodogram(x: &TimeSeries) -> Result<Vec<Vec<f64>>, EvalError> {
    let spectra = raw_periodogram(x)?;
    Ok(spectra
        .into_iter()
        .map(|(mut power, total)| {
            if total > 0.0 {
                for p in &mut power {
                    *p /= total;
                }
            } else {
                let uniform = 1.0 / power.len() as f64;
                power.fill(uniform);
            }
            power
        })
        .collect())
}

/// Mean over channels of the Bhattacharyya coefficient
/// `sum_f sqrt(p_f * q_f)` between unit-normalized spectra.
///
/// Normalization is folded into the coefficient as
/// `sum_f sqrt(P_f * Q_f) / sqrt(sum(P) * sum(Q))`, which is the same
/// quantity but returns exactly 1.0 for bitwise-identical spectra. Both the
/// products and the channel loop run in an argument-order-independent
/// expression order, so scores are exactly symmetric.
pub fn psd_similarity(a: &TimeSeries, b: &TimeSeries) -> Result<SimilarityScore, EvalError> {
    a.shape_check(b)?;
    let pa = raw_periodogram(a)?;
    let pb = raw_periodogram(b)?;
    let mut acc = 0.0;
    for ((p, p_total), (q, q_total)) in pa.iter().zip(&pb) {
        let coeff = if *p_total == 0.0 && *q_total == 0.0 {
            // two spectrally empty channels count as identical
            1.0
        } else if *p_total == 0.0 || *q_total == 0.0 {
            // one empty channel follows the uniform-spectrum convention
            let (spec, total) = if *p_total == 0.0 {
                (q, q_total)
            } else {
                (p, p_total)
            };
            let uniform = 1.0 / spec.len() as f64;
            uniform.sqrt() * spec.iter().map(|&v| (v / total).sqrt()).sum::<f64>()
        } else {
            let num: f64 = p.iter().zip(q).map(|(&x, &y)| (x * y).sqrt()).sum();
            num / (p_total * q_total).sqrt()
        };
        // rounding can drift a hair past 1; the score space is [0, 1]
        acc += coeff.min(1.0);
    }
    Ok(SimilarityScore(acc / pa.len() as f64))
}

/// Exhaustive argmax of [`psd_similarity`] over the reference set; ties go
/// to the lowest index.
pub fn nearest_real_match(
    generated: &TimeSeries,
    real_set: &[TimeSeries],
) -> Result<(usize, SimilarityScore), EvalError> {
    if real_set.is_empty() {
        return Err(EvalError::EmptyReferenceSet);
    }
    let mut best_idx = 0;
    let mut best = psd_similarity(generated, &real_set[0])?;
    for (idx, candidate) in real_set.iter().enumerate().skip(1) {
        let score = psd_similarity(generated, candidate)?;
        if score.value() > best.value() {
            best = score;
            best_idx = idx;
        }
    }
    Ok((best_idx, best))
}

/// One scored point of a denoising trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCurvePoint {
    /// Global 1-based transition index across all sawtooth iterations.
    pub step: usize,
    /// Sawtooth iteration the transition belongs to.
    pub iteration: usize,
    pub score: SimilarityScore,
    /// Index of the closest reference sequence.
    pub match_id: usize,
}

/// Similarity against the closest reference for every recorded state, in
/// step order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepCurve {
    points: Vec<StepCurvePoint>,
}

impl StepCurve {
    pub fn points(&self) -> &[StepCurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Scores each post-transition state of a recorded trajectory against its
/// nearest reference sequence.
pub fn per_step_curve(
    trajectory: &Trajectory,
    real_set: &[TimeSeries],
) -> Result<StepCurve, EvalError> {
    if real_set.is_empty() {
        return Err(EvalError::EmptyReferenceSet);
    }
    if trajectory.nfe() == 0 {
        return Ok(StepCurve::default());
    }
    if !trajectory.recorded() {
        return Err(EvalError::NoRecordedStates);
    }
    // states[0] is the initial state; one scored point per transition
    let mut points = Vec::with_capacity(trajectory.nfe());
    for (i, (state, label)) in trajectory.states()[1..]
        .iter()
        .zip(trajectory.labels())
        .enumerate()
    {
        let (match_id, score) = nearest_real_match(state, real_set)?;
        points.push(StepCurvePoint {
            step: i + 1,
            iteration: label.iteration,
            score,
            match_id,
        });
    }
    Ok(StepCurve { points })
}

/// Which aggregate the TSTR harness reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TstrMetric {
    /// Unweighted mean of per-class F1 scores.
    MacroF1,
    /// Geometric mean of per-class recalls; zero once any class is never
    /// recovered.
    GMean,
}

/// Macro F1 over a square confusion matrix (rows = true, cols = predicted).
///
/// Classes with no true and no predicted samples are skipped; a class whose
/// precision and recall are both zero contributes an F1 of zero.
pub fn macro_f1_from_confusion(confusion: &[Vec<usize>]) -> f64 {
    let mut sum = 0.0;
    let mut counted = 0;
    for (c, true_row) in confusion.iter().enumerate() {
        let tp = true_row[c];
        let row: usize = true_row.iter().sum();
        let col: usize = confusion.iter().map(|r| r[c]).sum();
        if row == 0 && col == 0 {
            continue;
        }
        let precision = if col > 0 { tp as f64 / col as f64 } else { 0.0 };
        let recall = if row > 0 { tp as f64 / row as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        sum += f1;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    }
}

/// Geometric mean of per-class recalls over a confusion matrix. Classes
/// without true samples are skipped.
pub fn gmean_from_confusion(confusion: &[Vec<usize>]) -> f64 {
    let mut log_sum = 0.0;
    let mut counted = 0;
    for (c, true_row) in confusion.iter().enumerate() {
        let row: usize = true_row.iter().sum();
        if row == 0 {
            continue;
        }
        let recall = true_row[c] as f64 / row as f64;
        if recall == 0.0 {
            return 0.0;
        }
        log_sum += recall.ln();
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        (log_sum / counted as f64).exp()
    }
}

/// Trains a nearest-centroid classifier in normalized-periodogram feature
/// space on `synthetic_train` and scores it on `real_test`.
pub fn tstr_evaluate(
    synthetic_train: &LabeledDataset,
    real_test: &LabeledDataset,
    metric: TstrMetric,
) -> Result<f64, EvalError> {
    let confusion = tstr_confusion(synthetic_train, real_test)?;
    Ok(match metric {
        TstrMetric::MacroF1 => macro_f1_from_confusion(&confusion),
        TstrMetric::GMean => gmean_from_confusion(&confusion),
    })
}

/// The confusion matrix behind [`tstr_evaluate`], rows = true class ids of
/// the test set, cols = predicted ids, both in training-class id space.
pub fn tstr_confusion(
    synthetic_train: &LabeledDataset,
    real_test: &LabeledDataset,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let k = synthetic_train.class_count();
    if k < 2 {
        return Err(EvalError::NotEnoughClasses {
            side: "training",
            classes: k,
        });
    }
    if real_test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let test_classes = distinct_labels(real_test.labels());
    if test_classes < 2 {
        return Err(EvalError::NotEnoughClasses {
            side: "test",
            classes: test_classes,
        });
    }
    for &label in real_test.labels() {
        if label >= k {
            return Err(EvalError::UnknownClass { label });
        }
    }

    // class centroids in feature space
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    for class in 0..k {
        let mut acc: Option<Vec<f64>> = None;
        let mut count = 0usize;
        for (sample, &label) in synthetic_train
            .samples()
            .iter()
            .zip(synthetic_train.labels())
        {
            if label != class {
                continue;
            }
            let feat = spectral_features(sample)?;
            match &mut acc {
                None => acc = Some(feat),
                Some(acc) => {
                    for (a, v) in acc.iter_mut().zip(&feat) {
                        *a += v;
                    }
                }
            }
            count += 1;
        }
        // datasets guarantee at least one sample per declared class
        let mut centroid = acc.expect("class without samples");
        for v in &mut centroid {
            *v /= count as f64;
        }
        centroids.push(centroid);
    }

    let mut confusion = alloc::vec![alloc::vec![0usize; k]; k];
    for (sample, &label) in real_test.samples().iter().zip(real_test.labels()) {
        let feat = spectral_features(sample)?;
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (class, centroid) in centroids.iter().enumerate() {
            let dist: f64 = centroid
                .iter()
                .zip(&feat)
                .map(|(&c, &v)| (c - v) * (c - v))
                .sum();
            if dist < best_dist {
                best_dist = dist;
                best = class;
            }
        }
        confusion[label][best] += 1;
    }
    Ok(confusion)
}

fn spectral_features(x: &TimeSeries) -> Result<Vec<f64>, EvalError> {
    let spectra = periodogram(x)?;
    let mut feat = Vec::with_capacity(spectra.len() * spectra[0].len());
    for channel in spectra {
        feat.extend(channel);
    }
    Ok(feat)
}

fn distinct_labels(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = Vec::new();
    for &l in labels {
        if !seen.contains(&l) {
            seen.push(l);
        }
    }
    seen.len()
}
