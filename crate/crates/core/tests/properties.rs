use overparam_mi::estimator::{
    build_histogram_pair, empirical_advantage, histogram_advantage, histogram_adversary,
    threshold_adversary,
};
use overparam_mi::rng::derive_stream;
use overparam_mi::theory::{
    advantage_point, generalization_error, generalization_error_from_variance, lrt_threshold,
    minnorm_advantage, sigma0_sq, stieltjes_mp, QueryAveraging, TheoryInputs,
};
use overparam_mi::{ConfigError, ExperimentConfig, ModelKind};
use proptest::prelude::*;

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn advantage_symmetric_and_bounded(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
        let ab = advantage_point(a, b).unwrap();
        let ba = advantage_point(b, a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn advantage_grows_with_variance_ratio(a in 1e-3f64..1e3, r in 1.001f64..1e3, k in 1.01f64..10.0) {
        let near = advantage_point(a, a * r).unwrap();
        let far = advantage_point(a, a * r * k).unwrap();
        prop_assert!(far >= near);
    }

    #[test]
    fn advantage_is_scale_free(a in 1e-3f64..1e3, b in 1e-3f64..1e3, c in 1e-3f64..1e3) {
        let base = advantage_point(a, b).unwrap();
        let scaled = advantage_point(a * c, b * c).unwrap();
        prop_assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn threshold_rule_attains_closed_form(a in 0.1f64..10.0, r in 1.5f64..20.0) {
        // densities cross at ±α
        let alpha = lrt_threshold(a, a * r).unwrap();
        let f = |x: f64, v: f64| (-x * x / (2.0 * v)).exp() / v.sqrt();
        prop_assert!(((f(alpha, a) - f(alpha, a * r)) / f(alpha, a)).abs() < 1e-9);
        prop_assert_eq!(threshold_adversary(a, a * r, 0.0).unwrap(), 0);
        prop_assert_eq!(threshold_adversary(a, a * r, 2.0 * alpha).unwrap(), 1);
    }

    #[test]
    fn histogram_advantage_in_unit_interval(s0 in samples(), s1 in samples(), bins in 2usize..300) {
        let adv = histogram_advantage(&build_histogram_pair(&s0, &s1, bins).unwrap());
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&adv));
    }

    #[test]
    fn histogram_advantage_ignores_order(s0 in samples(), s1 in samples(), seed in any::<u64>()) {
        let mut rng = derive_stream(seed, &[]);
        let mut p0 = s0.clone();
        let mut p1 = s1.clone();
        for v in [&mut p0, &mut p1] {
            for i in (1..v.len()).rev() {
                let j = rng.index(i + 1);
                v.swap(i, j);
            }
        }
        let a = histogram_advantage(&build_histogram_pair(&s0, &s1, 150).unwrap());
        let b = histogram_advantage(&build_histogram_pair(&p0, &p1, 150).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn histogram_advantage_symmetric_in_arms(s0 in samples(), s1 in samples()) {
        let a = histogram_advantage(&build_histogram_pair(&s0, &s1, 150).unwrap());
        let b = histogram_advantage(&build_histogram_pair(&s1, &s0, 150).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn histogram_advantage_equals_rule_advantage(s0 in samples(), s1 in samples(), bins in 2usize..200) {
        // sum of positive PMF differences = TPR − FPR of the bin-wise rule
        let pair = build_histogram_pair(&s0, &s1, bins).unwrap();
        let tv = histogram_advantage(&pair);
        let rule = empirical_advantage(&s0, &s1, |y| histogram_adversary(&pair, y));
        prop_assert!((tv - rule).abs() < 1e-9, "{} vs {}", tv, rule);
    }

    #[test]
    fn identical_samples_give_zero(s in samples()) {
        prop_assert_eq!(histogram_advantage(&build_histogram_pair(&s, &s, 150).unwrap()), 0.0);
    }

    #[test]
    fn disjoint_supports_give_one(s in samples(), shift in 101.0f64..1e4) {
        let s1: Vec<f64> = s.iter().map(|v| v + shift).collect();
        let adv = histogram_advantage(&build_histogram_pair(&s, &s1, 150).unwrap());
        prop_assert!((adv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalization_error_identity(n in 1usize..2000, extra in 2usize..20_000, slack in 0usize..100_000, sigma in 0.0f64..5.0) {
        let p = n + extra;
        let dim = p + slack;
        let a = generalization_error(n, p, dim, sigma).unwrap();
        let b = generalization_error_from_variance(n, p, dim, sigma).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn sigma0_pole_is_an_error(n in 1usize..1000, below in 0usize..3, sigma in 0.0f64..3.0) {
        let p = (n + 1).saturating_sub(below).max(1);
        let inp = TheoryInputs::concentration(n, p, 10 * n + 10, sigma);
        prop_assert!(sigma0_sq(&inp).is_err());
    }

    #[test]
    fn stieltjes_root_solves_quadratic(gamma in 0.01f64..1000.0, lambda in 1e-8f64..100.0) {
        let st = stieltjes_mp(gamma, lambda).unwrap();
        prop_assert!(st.g > 0.0 && st.g_prime > 0.0);
        let scale = 1.0 + (gamma * lambda * st.g * st.g).abs() + ((1.0 - gamma + lambda) * st.g).abs();
        prop_assert!(st.quadratic_residual().abs() <= 1e-14 * scale);
    }

    #[test]
    fn advantage_increases_past_zero_point(n in 200usize..2000, k in 0usize..5) {
        let gammas = [3.0, 5.0, 10.0, 20.0, 50.0, 100.0];
        let dim = 100_000_000;
        let at = |g: f64| {
            minnorm_advantage(n, (g * n as f64) as usize, dim, 1.0, QueryAveraging::Concentration)
                .unwrap()
                .mean
        };
        prop_assert!(at(gammas[k + 1]) > at(gammas[k]));
    }

    #[test]
    fn config_toml_round_trip(n in 1usize..500, gammas in prop::collection::vec(1.1f64..50.0, 1..6), sigma in 0.0f64..4.0, seed in any::<u64>()) {
        let cfg = ExperimentConfig {
            model: ModelKind::GaussianLinear,
            n,
            p_grid: None,
            gamma_grid: Some(gammas.clone()),
            dim: 1_000_000,
            latent_dim: 0,
            sigma,
            lambda: 0.0,
            lambda_grid: vec![],
            noise_bar: 0.0,
            trials_per_arm: 10,
            bins: 150,
            repeats: 1,
            seed,
        };
        prop_assert!(cfg.validate().is_ok());
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected(sigma in -10.0f64..-1e-9, lambda in -10.0f64..-1e-9, bins in 0usize..2) {
        let base = ExperimentConfig {
            model: ModelKind::GaussianLinear,
            n: 10,
            p_grid: Some(vec![20]),
            gamma_grid: None,
            dim: 100,
            latent_dim: 0,
            sigma: 1.0,
            lambda: 0.0,
            lambda_grid: vec![],
            noise_bar: 0.0,
            trials_per_arm: 10,
            bins: 150,
            repeats: 1,
            seed: 0,
        };
        let bad_sigma = matches!(ExperimentConfig { sigma, ..base.clone() }.validate(), Err(ConfigError::InvalidSigma(_)));
        let bad_lambda = matches!(ExperimentConfig { lambda, ..base.clone() }.validate(), Err(ConfigError::InvalidLambda(_)));
        let bad_bins = matches!(ExperimentConfig { bins, ..base.clone() }.validate(), Err(ConfigError::TooFewBins(_)));
        let bad_both = matches!(ExperimentConfig { gamma_grid: Some(vec![2.0]), ..base }.validate(), Err(ConfigError::GridConflict));
        prop_assert!(bad_sigma && bad_lambda && bad_bins && bad_both);
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let x = derive_stream(seed, &[a, b]).standard_normal(4);
        let y = derive_stream(seed, &[a, b]).standard_normal(4);
        let z = derive_stream(seed, &[a, b.wrapping_add(1)]).standard_normal(4);
        prop_assert_eq!(&x, &y);
        prop_assert_ne!(&x, &z);
    }
}
