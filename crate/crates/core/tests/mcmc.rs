use rand_distr::{Distribution, StandardNormal};
use ssalt::fixtures::{midpoint_frame, reference_prior, solar_lighting, solar_lighting_design};
use ssalt::mcmc::diagnostics::{ess_basic, rhat_basic};
use ssalt::mcmc::{
    ess_bulk, ess_tail, rhat, run_chain, sample_posterior, sample_with_refit, FitStatus, LogDensity, NutsSettings,
    SamplerConfig,
};
use ssalt::prior::{PriorFlavour, PHI_NAMES};
use ssalt::{Dataset, RngSeed};

/// Correlated bivariate normal with unit variances.
struct Bivariate {
    rho: f64,
}

impl LogDensity for Bivariate {
    fn dim(&self) -> usize {
        2
    }

    fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = 1.0 / (1.0 - self.rho * self.rho);
        grad[0] = -k * (x[0] - self.rho * x[1]);
        grad[1] = -k * (x[1] - self.rho * x[0]);
        -0.5 * k * (x[0] * x[0] - 2.0 * self.rho * x[0] * x[1] + x[1] * x[1])
    }
}

#[test]
fn nuts_recovers_correlated_normal() {
    let target = Bivariate { rho: 0.9 };
    let settings = NutsSettings::default();
    let mut rng = RngSeed::new(10).rng();
    let out = run_chain(&target, vec![0.5, -0.5], &settings, &mut rng).unwrap();
    let n = out.draws.len() as f64;
    let m0 = out.draws.iter().map(|d| d[0]).sum::<f64>() / n;
    let v0 = out.draws.iter().map(|d| (d[0] - m0).powi(2)).sum::<f64>() / n;
    let c01 = out.draws.iter().map(|d| d[0] * d[1]).sum::<f64>() / n;
    assert!(m0.abs() < 0.15, "{m0}");
    assert!((v0 - 1.0).abs() < 0.2, "{v0}");
    assert!((c01 - 0.9).abs() < 0.15, "{c01}");
    assert!(out.stats.iter().all(|s| !s.divergent));
}

#[test]
fn iid_chains_look_converged() {
    let mut rng = RngSeed::new(12).rng();
    let chains: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
    let r = rhat(&refs);
    assert!((0.999..=1.005).contains(&r), "{r}");
    let e = ess_bulk(&refs);
    assert!((3200.0..=4800.0).contains(&e), "{e}");
    assert!(ess_tail(&refs) > 2500.0);
    assert!((rhat_basic(&chains) - 1.0).abs() < 0.01);
    assert!(ess_basic(&chains) > 3200.0);
}

#[test]
fn ar1_chains_have_reduced_ess() {
    let mut rng = RngSeed::new(13).rng();
    let phi: f64 = 0.8;
    let chains: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let mut x = 0.0;
            (0..2000)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x = phi * x + (1.0 - phi * phi).sqrt() * e;
                    x
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
    // asymptotic ESS of AR(1) is N (1 - phi) / (1 + phi)
    let expected = 8000.0 * (1.0 - phi) / (1.0 + phi);
    let e = ess_bulk(&refs);
    assert!((e / expected - 1.0).abs() < 0.25, "{e} vs {expected}");
}

#[test]
fn empty_data_recovers_the_prior() {
    let prior = reference_prior(PriorFlavour::Tight, 0.01).unwrap();
    let design = solar_lighting_design();
    let config = SamplerConfig {
        seed: RngSeed::new(31),
        ..Default::default()
    };
    let (draws, diag) = sample_posterior(&design, None, &prior, 0.1, &config).unwrap();
    for (j, names) in PHI_NAMES.iter().enumerate() {
        for (i, name) in names.iter().enumerate() {
            let col = draws.column(name).unwrap();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let ess = diag.quantity(name).unwrap().ess_bulk;
            let se = prior.sd(j, i) / ess.sqrt();
            assert!((mean - prior.mean(j, i)).abs() < 4.0 * se, "{name}: {mean}");
        }
    }
}

#[test]
fn chains_are_reproducible() {
    let data = solar_lighting();
    let prior = reference_prior(PriorFlavour::Tight, 0.01).unwrap();
    let config = SamplerConfig {
        iter_warmup: 200,
        iter_sampling: 200,
        ..Default::default()
    };
    let (a, _) = sample_posterior(data.design(), Some(&data), &prior, 0.1, &config).unwrap();
    let (b, _) = sample_posterior(data.design(), Some(&data), &prior, 0.1, &config).unwrap();
    assert_eq!(a.columns, b.columns);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (c, _) = pool.install(|| sample_posterior(data.design(), Some(&data), &prior, 0.1, &config).unwrap());
    assert_eq!(a.columns, c.columns);
}

#[test]
fn derived_columns_are_consistent() {
    let fixture = solar_lighting();
    let design = fixture.design().with_frame(midpoint_frame()).unwrap();
    let data = fixture.with_design(design).unwrap();
    let prior = reference_prior(PriorFlavour::Tight, 0.01).unwrap();
    let config = SamplerConfig {
        iter_warmup: 200,
        iter_sampling: 100,
        ..Default::default()
    };
    let (draws, _) = sample_posterior(&design, Some(&data), &prior, 0.1, &config).unwrap();
    let col = |n: &str| draws.column(n).unwrap();
    for k in 0..draws.n_draws * draws.n_chains {
        assert!((col("b1")[k] + col("phi21")[k]).abs() < 1e-12);
        assert!((col("log_tp")[k] - col("tp")[k].ln()).abs() < 1e-12);
        let lt = col("a1")[k] + col("b1")[k] * design.x1();
        assert!((col("log_theta1_x1")[k] - lt).abs() < 1e-9);
    }
}

#[test]
fn hopeless_data_is_refitted_or_discarded() {
    // two units, both censored, under the wide prior
    let design = solar_lighting_design().with_n(2).unwrap();
    let data = Dataset::new(
        design,
        vec![ssalt::Observation::censored(6.0), ssalt::Observation::censored(6.0)],
    )
    .unwrap();
    let prior = reference_prior(PriorFlavour::Wide, 0.01).unwrap();
    let config = SamplerConfig {
        iter_warmup: 150,
        iter_sampling: 150,
        ..Default::default()
    };
    let (_, _, status) = sample_with_refit(&design, Some(&data), &prior, 0.1, &config).unwrap();
    assert_ne!(status, FitStatus::Ok);
}
