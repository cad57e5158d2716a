mod common;

use proptest::prelude::*;
use rand::Rng;
use ssalt::fixtures::solar_lighting;
use ssalt::likelihood::log_lik_value;
use ssalt::model::{overall_cdf, standardise_stress, use_quantile};
use ssalt::prior::{from_phi, to_phi};
use ssalt::{Dataset, ModelParams, RngSeed, StressFrame};

fn params() -> impl Strategy<Value = ModelParams> {
    (1.0..5.0f64, 0.5..3.5f64, -5.0..-0.5f64, -3.0..-0.3f64, 0.5..3.0f64, 0.5..3.0f64)
        .prop_map(|(a1, a2, b1, b2, s1, s2)| ModelParams::new([a1, a2], [b1, b2], [s1, s2]).unwrap())
}

proptest! {
    #[test]
    fn standardisation_is_affine(t0 in 250.0..300.0f64, d1 in 5.0..40.0f64, d2 in 1.0..40.0f64, w in 0.0..1.0f64) {
        let (s0, s1, s2) = (1.0 / t0, 1.0 / (t0 + d1), 1.0 / (t0 + d1 + d2));
        let frame = StressFrame::new(s0, s1, s2).unwrap();
        prop_assert!(standardise_stress(s0, &frame).unwrap().abs() < 1e-12);
        prop_assert!((standardise_stress(s2, &frame).unwrap() - 1.0).abs() < 1e-12);
        let s = s0 + w * (s2 - s0);
        prop_assert!((standardise_stress(s, &frame).unwrap() - w).abs() < 1e-9);
    }

    #[test]
    fn overall_cdf_is_monotone_and_matches_oracle(p in params(), seed in 0u64..1000, t in 0.0..6.0f64, dt in 0.0..3.0f64) {
        let mut rng = RngSeed::new(seed).rng();
        let design = common::random_design(&mut rng, 10);
        let f1 = overall_cdf(&p, &design, t).unwrap();
        let f2 = overall_cdf(&p, &design, t + dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(f2 >= f1);
        prop_assert!((f1 - common::overall_cdf_oracle(&p, &design, t)).abs() < 1e-12);
    }

    #[test]
    fn quantile_is_monotone_in_p(p in params(), lo in 0.001..0.9f64, gap in 0.001..0.09f64) {
        let t1 = use_quantile(&p, lo).unwrap();
        let t2 = use_quantile(&p, lo + gap).unwrap();
        prop_assert!(t2 > t1);
    }

    #[test]
    fn quantile_matches_bisection(p in params(), prob in 0.0005..0.9995f64) {
        let t = use_quantile(&p, prob).unwrap();
        let oracle = common::quantile_bisection(&p, prob);
        prop_assert!(((t - oracle) / oracle).abs() < 1e-10, "{t} vs {oracle}");
    }

    #[test]
    fn likelihood_ignores_row_order(p in params(), seed in 0u64..u64::MAX) {
        let data = solar_lighting();
        let mut rows = data.observations().to_vec();
        let mut rng = RngSeed::new(seed).rng();
        for i in (1..rows.len()).rev() {
            rows.swap(i, rng.random_range(0..=i));
        }
        let shuffled = Dataset::new(*data.design(), rows).unwrap();
        let (l1, l2) = (log_lik_value(&p, &data), log_lik_value(&p, &shuffled));
        prop_assert!((l1 - l2).abs() <= 1e-9 * (1.0 + l1.abs()));
    }

    #[test]
    fn phi_round_trip(p in params(), q in 0.001..0.5f64) {
        let back = from_phi(&to_phi(&p, q).unwrap()).unwrap();
        for (x, y) in p.to_array().iter().zip(back.to_array()) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }
}
