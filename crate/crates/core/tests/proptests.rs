//! Property tests for the schedule and similarity invariants.

use proptest::prelude::*;
use sawtooth_core::evaluation::{nearest_real_match, psd_similarity};
use sawtooth_core::predictor::{
    DenoiserConfig, DenoiserModel, EpsilonPredictor, GaussianDataSpec, GaussianOracle,
};
use sawtooth_core::schedule::{build_sawtooth_plan, build_schedule, select_subsequence};
use sawtooth_core::series::TimeSeries;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn schedule_invariants_hold(
        t_max in 1usize..600,
        beta_start in 1e-6f64..0.01,
        span in 0.0f64..0.4,
    ) {
        let beta_end = (beta_start + span).min(0.999);
        let s = build_schedule(t_max, beta_start, beta_end).unwrap();
        prop_assert!(s.betas().iter().all(|&b| b > 0.0 && b < 1.0));
        prop_assert!(s.alpha_bars().iter().all(|&a| a > 0.0 && a < 1.0));
        for w in s.alpha_bars().windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        // brute-force running product agrees to 1e-12 relative
        let mut product = 1.0f64;
        for (t, &alpha) in s.alphas().iter().enumerate() {
            product *= alpha;
            let stored = s.alpha_bars()[t];
            prop_assert!(((stored - product) / product).abs() < 1e-12);
        }
    }

    #[test]
    fn subsequence_is_strictly_increasing_and_anchored(
        t_max in 1usize..5000,
        s_frac in 0.0f64..1.0,
    ) {
        let s = 1 + ((t_max - 1) as f64 * s_frac) as usize;
        let taus = select_subsequence(t_max, s).unwrap();
        prop_assert_eq!(taus.len(), s);
        prop_assert_eq!(*taus.last().unwrap(), t_max);
        prop_assert!(taus[0] >= 1);
        for w in taus.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn sawtooth_budget_is_exact(iterations in prop::sample::select(vec![1usize, 2, 5, 10])) {
        let (_, plan) = build_sawtooth_plan(100, iterations, 1000, 1e-4, 0.02).unwrap();
        prop_assert_eq!(plan.iterations() * plan.steps_per_iteration(), 100);
        prop_assert_eq!(plan.total_steps(), 100);
        prop_assert_eq!(plan.taus().len(), plan.steps_per_iteration());
    }

    #[test]
    fn nearest_match_is_an_exhaustive_argmax_stable_under_rotation(
        seed in any::<u64>(),
        set_size in 2usize..8,
        rotate in 1usize..8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let query = TimeSeries::standard_normal(1, 12, &mut rng).unwrap();
        let set: Vec<TimeSeries> = (0..set_size)
            .map(|_| TimeSeries::standard_normal(1, 12, &mut rng).unwrap())
            .collect();
        let (idx, score) = nearest_real_match(&query, &set).unwrap();
        // no element scores higher, and earlier elements never tie
        for (i, candidate) in set.iter().enumerate() {
            let s = psd_similarity(&query, candidate).unwrap();
            prop_assert!(s.value() <= score.value());
            if i < idx {
                prop_assert!(s.value() < score.value());
            }
        }
        // rotating the set moves the winner's index accordingly
        let rotate = rotate % set_size;
        let mut rotated = set.clone();
        rotated.rotate_left(rotate);
        let (ridx, rscore) = nearest_real_match(&query, &rotated).unwrap();
        prop_assert_eq!(rscore.value(), score.value());
        prop_assert_eq!(
            psd_similarity(&query, &rotated[ridx]).unwrap().value(),
            score.value()
        );
    }

    #[test]
    fn similarity_is_bounded_symmetric_and_reflexive(
        seed in any::<u64>(),
        channels in 1usize..3,
        length in 2usize..24,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = TimeSeries::standard_normal(channels, length, &mut rng).unwrap();
        let b = TimeSeries::standard_normal(channels, length, &mut rng).unwrap();
        let ab = psd_similarity(&a, &b).unwrap().value();
        let ba = psd_similarity(&b, &a).unwrap().value();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(psd_similarity(&a, &a).unwrap().value(), 1.0);
        prop_assert_eq!(psd_similarity(&b, &b).unwrap().value(), 1.0);
    }

    #[test]
    fn predictors_stay_finite_on_fuzzed_input(
        seed in any::<u64>(),
        scale in 0.01f64..100.0,
        rho in -0.95f64..0.95,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = DenoiserConfig { channels: 2, length: 4, hidden1: 6, hidden2: 5, t_max: 9 };
        let model = DenoiserModel::random(config, &mut rng).unwrap();
        let schedule = build_schedule(9, 1e-3, 0.05).unwrap();
        let mu = TimeSeries::standard_normal(2, 4, &mut rng).unwrap();
        let oracle = GaussianOracle::new(GaussianDataSpec::ar1(mu, rho, scale.sqrt()).unwrap());
        let x = TimeSeries::standard_normal(2, 4, &mut rng).unwrap()
            .map(|v| v * scale).unwrap();
        for t in [1usize, 5, 9] {
            let out = model.predict(&x, t, &schedule).unwrap();
            prop_assert!(out.values().iter().all(|v| v.is_finite()));
            let out = oracle.predict(&x, t, &schedule).unwrap();
            prop_assert!(out.values().iter().all(|v| v.is_finite()));
        }
    }
}
