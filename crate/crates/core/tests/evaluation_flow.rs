//! Evaluation pieces wired to real sampler runs and datasets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sawtooth_core::data::gen_cyclic_classes;
use sawtooth_core::evaluation::{EvalError, TstrMetric, per_step_curve, tstr_evaluate};
use sawtooth_core::forward::diffuse;
use sawtooth_core::predictor::GroundTruthPredictor;
use sawtooth_core::sampler::ddim_sample;
use sawtooth_core::schedule::build_sawtooth_plan;
use sawtooth_core::series::TimeSeries;

#[test]
fn ground_truth_curve_ends_at_full_similarity_against_x0() {
    let (schedule, plan) = build_sawtooth_plan(40, 1, 400, 1e-4, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x0 = TimeSeries::standard_normal(1, 16, &mut rng).unwrap();
    let eps = TimeSeries::standard_normal(1, 16, &mut rng).unwrap();
    let x_t = diffuse(&x0, 400, &eps, &schedule).unwrap();
    let predictor = GroundTruthPredictor::new(eps);
    let trajectory = ddim_sample(&x_t, &predictor, &schedule, &plan, 0.0, &mut rng, true).unwrap();

    let decoys: Vec<TimeSeries> = (0..3)
        .map(|_| TimeSeries::standard_normal(1, 16, &mut rng).unwrap())
        .collect();
    let mut real_set = decoys;
    real_set.push(x0);
    let curve = per_step_curve(&trajectory, &real_set).unwrap();
    let last = curve.points().last().unwrap();
    // exact recovery implies a spectral match against the stored original
    assert_eq!(last.match_id, 3);
    assert!(
        last.score.value() > 1.0 - 1e-12,
        "final score {}",
        last.score.value()
    );
}

#[test]
fn trtr_on_separable_cyclic_classes_is_perfect() {
    // train on one seeded draw of the generator, test on another
    let train = gen_cyclic_classes(4, 1, 32, 10, 0.05, 500).unwrap();
    let test = gen_cyclic_classes(4, 1, 32, 10, 0.05, 501).unwrap();
    let f1 = tstr_evaluate(&train, &test, TstrMetric::MacroF1).unwrap();
    let gmean = tstr_evaluate(&train, &test, TstrMetric::GMean).unwrap();
    assert_eq!(f1, 1.0);
    assert_eq!(gmean, 1.0);
}

#[test]
fn tstr_error_paths() {
    let two_class = gen_cyclic_classes(2, 1, 16, 3, 0.05, 1).unwrap();
    let four_class = gen_cyclic_classes(4, 1, 32, 3, 0.05, 1).unwrap();

    // labels outside the training id space
    let err = tstr_evaluate(&two_class, &four_class, TstrMetric::MacroF1).unwrap_err();
    assert!(matches!(err, EvalError::UnknownClass { .. }), "{err:?}");

    // single-class training set
    let single = sawtooth_core::data::LabeledDataset::new(
        two_class.samples()[..3].to_vec(),
        vec![0; 3],
        vec!["only".to_string()],
    )
    .unwrap();
    let err = tstr_evaluate(&single, &two_class, TstrMetric::MacroF1).unwrap_err();
    assert!(matches!(err, EvalError::NotEnoughClasses { .. }), "{err:?}");

    // single-class test set
    let err = tstr_evaluate(&two_class, &single, TstrMetric::MacroF1).unwrap_err();
    assert!(
        matches!(err, EvalError::NotEnoughClasses { side: "test", .. }),
        "{err:?}"
    );
}
