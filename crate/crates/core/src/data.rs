//! Seeded synthetic dataset generators.
//!
//! Three shapes of data cover what the pipeline needs: exactly-known
//! Gaussian draws for oracle verification, spectrally separable multiclass
//! cyclic signals, and an imbalanced two-class variant of the latter.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::predictor::GaussianDataSpec;
use crate::series::{SeriesError, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    Series(SeriesError),
    /// labels must parallel samples.
    LabelCountMismatch {
        samples: usize,
        labels: usize,
    },
    /// labels must index into class_names.
    LabelOutOfRange {
        label: usize,
        classes: usize,
    },
    /// Every declared class needs at least one sample.
    EmptyClass {
        class: usize,
    },
    /// Generators need at least one sample per class and at least one class.
    DegenerateRequest,
    /// The requested class frequencies do not fit below the Nyquist bin.
    DegenerateDimensions {
        needed_length: usize,
        length: usize,
    },
    /// minority_fraction must lie strictly between 0 and 0.5.
    InvalidFraction {
        fraction: f64,
    },
    /// Noise level must be finite and >= 0.
    InvalidNoise {
        noise_level: f64,
    },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Series(e) => write!(f, "{e}"),
            DataError::LabelCountMismatch { samples, labels } => {
                write!(f, "{samples} samples but {labels} labels")
            }
            DataError::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            DataError::EmptyClass { class } => {
                write!(f, "declared class {class} has no samples")
            }
            DataError::DegenerateRequest => {
                write!(
                    f,
                    "generator needs at least one class and one sample per class"
                )
            }
            DataError::DegenerateDimensions {
                needed_length,
                length,
            } => write!(
                f,
                "class frequencies need length >= {needed_length}, got {length}"
            ),
            DataError::InvalidFraction { fraction } => {
                write!(f, "minority fraction must be in (0, 0.5), got {fraction}")
            }
            DataError::InvalidNoise { noise_level } => {
                write!(f, "noise level must be finite and >= 0, got {noise_level}")
            }
        }
    }
}

impl core::error::Error for DataError {}

impl From<SeriesError> for DataError {
    fn from(e: SeriesError) -> Self {
        DataError::Series(e)
    }
}

/// Shape-equal samples with parallel class labels.
///
/// Class ids index into `class_names`; every declared class owns at least
/// one sample. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<TimeSeries>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        samples: Vec<TimeSeries>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if samples.len() != labels.len() {
            return Err(DataError::LabelCountMismatch {
                samples: samples.len(),
                labels: labels.len(),
            });
        }
        if let Some(first) = samples.first() {
            for s in &samples[1..] {
                first.shape_check(s)?;
            }
        }
        for &label in &labels {
            if label >= class_names.len() {
                return Err(DataError::LabelOutOfRange {
                    label,
                    classes: class_names.len(),
                });
            }
        }
        for class in 0..class_names.len() {
            if !labels.contains(&class) {
                return Err(DataError::EmptyClass { class });
            }
        }
        Ok(Self {
            samples,
            labels,
            class_names,
        })
    }

    pub fn samples(&self) -> &[TimeSeries] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Shape of the samples; `None` for an impossible empty dataset.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.samples.first().map(TimeSeries::shape)
    }

    /// Samples belonging to one class, in dataset order.
    pub fn class_samples(&self, class: usize) -> Vec<&TimeSeries> {
        self.samples
            .iter()
            .zip(&self.labels)
            .filter(|&(_, &l)| l == class)
            .map(|(s, _)| s)
            .collect()
    }

    /// Number of samples per class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// `n` i.i.d. draws from the Gaussian spec via its Cholesky factor.
pub fn gen_gaussian(
    spec: &GaussianDataSpec,
    n: usize,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if n == 0 {
        return Err(DataError::DegenerateRequest);
    }
    let (channels, length) = spec.mu().shape();
    let dim = spec.dim();
    let chol = spec.cov_cholesky();
    let mu = spec.mu().values();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let z = TimeSeries::standard_normal(channels, length, &mut rng)?;
        let mut correlated = vec![0.0; dim];
        linalg::lower_tri_vec(chol, dim, z.values(), &mut correlated);
        for (v, m) in correlated.iter_mut().zip(mu) {
            *v += m;
        }
        samples.push(TimeSeries::new(channels, length, correlated)?);
    }
    let labels = vec![0usize; n];
    LabeledDataset::new(samples, labels, vec![String::from("gaussian")])
}

/// Deterministic class waveform: a fixed mixture of sinusoids whose
/// frequency bins are disjoint across classes.
fn cyclic_waveform(
    class: usize,
    channels: usize,
    length: usize,
    harmonics: usize,
) -> Result<TimeSeries, SeriesError> {
    TimeSeries::from_fn(channels, length, |c, t| {
        let mut v = 0.0;
        for h in 0..harmonics {
            let bin = (class * harmonics + h + 1) as f64;
            let amp = 1.0 / (h as f64 + 1.0);
            // class- and channel-specific phase, fixed for all samples
            let phase = TAU * 0.618_033_988_749_894_9 * ((class + 1) * (c + 1) * (h + 1)) as f64;
            v += amp * (TAU * bin * t as f64 / length as f64 + phase).sin();
        }
        v
    })
}

const CYCLIC_HARMONICS: usize = 2;

/// Multiclass cyclic data: per class a fixed sinusoid mixture plus white
/// noise. Classes occupy disjoint frequency bins, so they are spectrally
/// separable at zero noise.
pub fn gen_cyclic_classes(
    n_classes: usize,
    channels: usize,
    length: usize,
    per_class: usize,
    noise_level: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if n_classes < 2 || per_class == 0 {
        return Err(DataError::DegenerateRequest);
    }
    if !noise_level.is_finite() || noise_level < 0.0 {
        return Err(DataError::InvalidNoise { noise_level });
    }
    if channels == 0 || length == 0 {
        return Err(DataError::Series(SeriesError::EmptyShape));
    }
    // the highest used bin must stay at or below Nyquist
    let highest_bin = n_classes * CYCLIC_HARMONICS;
    if highest_bin > length / 2 {
        return Err(DataError::DegenerateDimensions {
            needed_length: highest_bin * 2,
            length,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_classes * per_class);
    let mut labels = Vec::with_capacity(n_classes * per_class);
    let mut names = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        names.push(alloc::format!("cyclic{class}"));
        let waveform = cyclic_waveform(class, channels, length, CYCLIC_HARMONICS)?;
        for _ in 0..per_class {
            let sample = if noise_level > 0.0 {
                let noise = TimeSeries::standard_normal(channels, length, &mut rng)?;
                waveform.zip_map(&noise, |w, n| w + noise_level * n)?
            } else {
                waveform.clone()
            };
            samples.push(sample);
            labels.push(class);
        }
    }
    LabeledDataset::new(samples, labels, names)
}

/// Two cyclic classes with a minority/majority split: the minority class
/// receives `round(total * minority_fraction)` samples.
pub fn gen_imbalanced(
    minority_fraction: f64,
    total: usize,
    channels: usize,
    length: usize,
    noise_level: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if !(minority_fraction > 0.0 && minority_fraction < 0.5) || !minority_fraction.is_finite() {
        return Err(DataError::InvalidFraction {
            fraction: minority_fraction,
        });
    }
    if !noise_level.is_finite() || noise_level < 0.0 {
        return Err(DataError::InvalidNoise { noise_level });
    }
    let minority = (total as f64 * minority_fraction).round() as usize;
    if minority == 0 || minority >= total {
        return Err(DataError::DegenerateRequest);
    }
    let majority = total - minority;
    if channels == 0 || length == 0 {
        return Err(DataError::Series(SeriesError::EmptyShape));
    }
    let highest_bin = 2 * CYCLIC_HARMONICS;
    if highest_bin > length / 2 {
        return Err(DataError::DegenerateDimensions {
            needed_length: highest_bin * 2,
            length,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (class, count) in [(0usize, minority), (1usize, majority)] {
        let waveform = cyclic_waveform(class, channels, length, CYCLIC_HARMONICS)?;
        for _ in 0..count {
            let sample = if noise_level > 0.0 {
                let noise = TimeSeries::standard_normal(channels, length, &mut rng)?;
                waveform.zip_map(&noise, |w, n| w + noise_level * n)?
            } else {
                waveform.clone()
            };
            samples.push(sample);
            labels.push(class);
        }
    }
    LabeledDataset::new(
        samples,
        labels,
        vec![String::from("minority"), String::from("majority")],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::psd_similarity;
    use crate::predictor::CovarianceSpec;

    #[test]
    fn dataset_invariants_enforced() {
        let s = TimeSeries::zeros(1, 4).unwrap();
        assert!(matches!(
            LabeledDataset::new(vec![s.clone()], vec![0, 1], vec![String::from("a")]),
            Err(DataError::LabelCountMismatch { .. })
        ));
        assert!(matches!(
            LabeledDataset::new(vec![s.clone()], vec![1], vec![String::from("a")]),
            Err(DataError::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            LabeledDataset::new(
                vec![s.clone()],
                vec![0],
                vec![String::from("a"), String::from("b")]
            ),
            Err(DataError::EmptyClass { class: 1 })
        ));
        let other = TimeSeries::zeros(2, 4).unwrap();
        assert!(matches!(
            LabeledDataset::new(vec![s, other], vec![0, 0], vec![String::from("a")]),
            Err(DataError::Series(SeriesError::ShapeMismatch { .. }))
        ));
    }

    #[test]
    fn gaussian_draws_are_seeded_and_reasonable() {
        let mu = TimeSeries::zeros(1, 4).unwrap();
        let dim = 4;
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        let spec = GaussianDataSpec::new(mu, CovarianceSpec::Dense { matrix: eye }).unwrap();
        let a = gen_gaussian(&spec, 500, 3).unwrap();
        let b = gen_gaussian(&spec, 500, 3).unwrap();
        assert_eq!(a, b);

        // crude moment check: mean near 0, variance near 1
        let mut mean = 0.0;
        let mut var = 0.0;
        let n = (500 * dim) as f64;
        for s in a.samples() {
            for &v in s.values() {
                mean += v;
                var += v * v;
            }
        }
        mean /= n;
        var = var / n - mean * mean;
        assert!(mean.abs() < 3.0 / n.sqrt() * 1.5, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn ar1_autocorrelation_matches_rho() {
        let rho = 0.9;
        let mu = TimeSeries::zeros(1, 16).unwrap();
        let spec = GaussianDataSpec::ar1(mu, rho, 1.0).unwrap();
        let data = gen_gaussian(&spec, 3000, 5).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut pairs = 0usize;
        let mut terms = 0usize;
        for s in data.samples() {
            let v = s.values();
            for i in 0..v.len() - 1 {
                num += v[i] * v[i + 1];
            }
            pairs += v.len() - 1;
            for &x in v {
                den += x * x;
            }
            terms += v.len();
        }
        let lag1 = (num / pairs as f64) / (den / terms as f64);
        assert!((lag1 - rho).abs() < 0.03, "lag-1 autocorr {lag1} vs {rho}");
    }

    #[test]
    fn cyclic_classes_are_spectrally_separable() {
        let data = gen_cyclic_classes(4, 2, 32, 3, 0.0, 1).unwrap();
        assert_eq!(data.len(), 12);
        assert_eq!(data.class_count(), 4);
        // identical waveforms within a class, distinct spectra across
        let c0 = data.class_samples(0);
        let c1 = data.class_samples(1);
        assert_eq!(psd_similarity(c0[0], c0[1]).unwrap().value(), 1.0);
        assert!(psd_similarity(c0[0], c1[0]).unwrap().value() < 1.0);
    }

    #[test]
    fn cyclic_rejects_degenerate_requests() {
        assert!(matches!(
            gen_cyclic_classes(1, 1, 32, 3, 0.0, 1),
            Err(DataError::DegenerateRequest)
        ));
        assert!(matches!(
            gen_cyclic_classes(4, 1, 32, 0, 0.0, 1),
            Err(DataError::DegenerateRequest)
        ));
        // 4 classes * 2 harmonics = bin 8 needs length >= 16
        assert!(matches!(
            gen_cyclic_classes(4, 1, 8, 3, 0.0, 1),
            Err(DataError::DegenerateDimensions { .. })
        ));
        assert!(matches!(
            gen_cyclic_classes(4, 1, 32, 3, f64::NAN, 1),
            Err(DataError::InvalidNoise { .. })
        ));
    }

    #[test]
    fn imbalanced_split_counts() {
        let data = gen_imbalanced(0.1, 100, 1, 16, 0.05, 2).unwrap();
        assert_eq!(data.class_counts(), vec![10, 90]);
        assert_eq!(data.len(), 100);

        let near_balanced = gen_imbalanced(0.49, 100, 1, 16, 0.05, 2).unwrap();
        assert_eq!(near_balanced.class_counts(), vec![49, 51]);

        assert!(matches!(
            gen_imbalanced(0.5, 100, 1, 16, 0.0, 2),
            Err(DataError::InvalidFraction { .. })
        ));
        assert!(matches!(
            gen_imbalanced(0.0, 100, 1, 16, 0.0, 2),
            Err(DataError::InvalidFraction { .. })
        ));
        // rounds to zero minority samples
        assert!(matches!(
            gen_imbalanced(0.1, 3, 1, 16, 0.0, 2),
            Err(DataError::DegenerateRequest)
        ));
    }

    #[test]
    fn generators_emit_finite_values() {
        let data = gen_cyclic_classes(3, 2, 24, 5, 0.2, 9).unwrap();
        for s in data.samples() {
            assert!(s.values().iter().all(|v| v.is_finite()));
        }
    }
}
