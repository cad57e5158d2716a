use ssalt::fixtures::{
    reference_bootstrap_summary, reference_mle, solar_lighting, REFERENCE_MLE, REFERENCE_PRIOR_TABLE,
};
use ssalt::mle::{edf_statistics, fit_mle, gof_bootstrap};
use ssalt::prior::{build_prior, mom_gamma, GammaPrior, PriorFlavour};
use ssalt::simulate::simulate_dataset;
use ssalt::RngSeed;

#[test]
fn fixture_mle() {
    let fit = fit_mle(&solar_lighting(), None).unwrap();
    assert!(fit.converged);
    for (x, y) in fit.params.to_array().iter().zip(REFERENCE_MLE) {
        assert!((x - y).abs() < 1e-3, "{x} vs {y}");
    }
}

#[test]
fn mle_is_a_local_maximum() {
    let data = solar_lighting();
    let fit = fit_mle(&data, None).unwrap();
    let base = fit.params.to_array();
    for k in 0..6 {
        for d in [-1e-3, 1e-3] {
            let mut v = base;
            v[k] += d;
            let p = ssalt::ModelParams::from_array(v).unwrap();
            assert!(ssalt::mle::loglik_at(&p, &data) <= fit.loglik + 1e-9);
        }
    }
}

#[test]
fn single_bootstrap_replicate_gives_half_or_one() {
    let data = solar_lighting();
    let fit = fit_mle(&data, None).unwrap();
    let g = gof_bootstrap(&data, &fit, 1, RngSeed::new(2)).unwrap();
    for p in [g.ks_pvalue, g.cvm_pvalue] {
        assert!(p == 0.5 || p == 1.0, "{p}");
    }
}

#[test]
fn larger_samples_shrink_estimation_error() {
    let truth = reference_mle();
    let design = ssalt::fixtures::solar_lighting_design()
        .with_frame(ssalt::fixtures::midpoint_frame())
        .unwrap();
    let err = |n: usize| {
        let d = design.with_n(n).unwrap();
        let data = simulate_dataset(&truth, &d, RngSeed::new(n as u64));
        let fit = fit_mle(&data, Some(truth)).unwrap();
        fit.params
            .to_array()
            .iter()
            .zip(truth.to_array())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
    };
    assert!(err(20_000) < err(500));
}

#[test]
fn fitted_statistics_are_small_on_true_model() {
    let truth = reference_mle();
    let design = ssalt::fixtures::solar_lighting_design()
        .with_frame(ssalt::fixtures::midpoint_frame())
        .unwrap()
        .with_n(4000)
        .unwrap();
    let data = simulate_dataset(&truth, &design, RngSeed::new(3));
    let (ks, _) = edf_statistics(&data, &truth);
    assert!(ks < 1.63 / 4000f64.sqrt(), "{ks}");
}

#[test]
fn reference_prior_table_from_reference_moments() {
    let summary = reference_bootstrap_summary(0.01);
    for (f, flavour) in PriorFlavour::ALL.iter().enumerate() {
        let prior = build_prior(&summary, *flavour).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                let (a, l) = REFERENCE_PRIOR_TABLE[f][j][i];
                assert!((prior.rate[j][i] - l).abs() < 5e-3, "rate {f} {j} {i}");
                if (f, j, i) == (0, 1, 2) {
                    // printed as 13.606; the moments give 13.6165
                    assert!((prior.shape[j][i] - 13.6165).abs() < 1e-4);
                } else {
                    assert!((prior.shape[j][i] - a).abs() < 5e-3, "shape {f} {j} {i}");
                }
            }
        }
    }
}

#[test]
fn moment_matching_is_exact() {
    for (m, s) in [(0.1634, 0.3705), (4.2805, 1.2737), (1.6989, 0.4604)] {
        let (a, l) = mom_gamma(m, s).unwrap();
        assert!((a / l - m).abs() < 1e-12);
        assert!((a.sqrt() / l - s).abs() < 1e-12);
    }
}

#[test]
fn gamma_prior_draws_have_matched_moments() {
    let mut shape = [[0.0; 3]; 2];
    let mut rate = [[0.0; 3]; 2];
    let targets = [[(0.5, 0.2), (4.0, 1.3), (1.2, 0.4)], [(0.15, 0.15), (1.4, 0.5), (1.7, 0.46)]];
    for j in 0..2 {
        for i in 0..3 {
            let (a, l) = mom_gamma(targets[j][i].0, targets[j][i].1).unwrap();
            shape[j][i] = a;
            rate[j][i] = l;
        }
    }
    let prior = GammaPrior::new(0.01, shape, rate).unwrap();
    let mut rng = RngSeed::new(4).rng();
    let n = 200_000;
    let draws: Vec<[f64; 6]> = (0..n).map(|_| prior.sample(&mut rng).flat()).collect();
    for j in 0..2 {
        for i in 0..3 {
            let k = 3 * j + i;
            let (mu, sigma) = targets[j][i];
            let mean = draws.iter().map(|d| d[k]).sum::<f64>() / n as f64;
            assert!((mean - mu).abs() < 4.0 * sigma / (n as f64).sqrt(), "{k}: {mean} vs {mu}");
        }
    }
}
