mod common;

use ssalt::fixtures::{midpoint_frame, reference_mle, solar_lighting_design};
use ssalt::model::overall_cdf;
use ssalt::simulate::{censor_latent, simulate_dataset, simulate_latent};
use ssalt::RngSeed;

#[test]
fn latent_minima_follow_overall_cdf() {
    let design = solar_lighting_design().with_frame(midpoint_frame()).unwrap().with_n(20_000).unwrap();
    let truth = reference_mle();
    let mut minima: Vec<f64> = simulate_latent(&truth, &design, RngSeed::new(8))
        .iter()
        .map(|t| t[0].min(t[1]))
        .collect();
    minima.sort_by(f64::total_cmp);
    let n = minima.len() as f64;
    let sup = minima
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = overall_cdf(&truth, &design, t).unwrap();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // 1.63 / sqrt(n) is the 1% KS critical value
    assert!(sup < 1.63 / n.sqrt(), "sup distance {sup}");
}

#[test]
fn cause_fractions_match_integrated_probabilities() {
    let design = solar_lighting_design().with_frame(midpoint_frame()).unwrap().with_n(20_000).unwrap();
    let truth = reference_mle();
    let data = simulate_dataset(&truth, &design, RngSeed::new(9));
    let counts = data.cell_counts();
    let n = design.n() as f64;
    for j in 0..2 {
        let p = common::cause_probability(&truth, &design, j);
        let observed = (counts[j][0] + counts[j][1]) as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((observed - p).abs() < 3.0 * se, "cause {j}: {observed} vs {p}");
    }
}

#[test]
fn integrated_probabilities_add_up() {
    let design = solar_lighting_design().with_frame(midpoint_frame()).unwrap();
    let truth = reference_mle();
    let total = common::cause_probability(&truth, &design, 0) + common::cause_probability(&truth, &design, 1);
    let f = overall_cdf(&truth, &design, design.tc()).unwrap();
    assert!((total - f).abs() < 1e-8, "{total} vs {f}");
}

#[test]
fn censoring_keeps_unit_count() {
    let design = solar_lighting_design().with_tau(2.0).unwrap();
    let latent = simulate_latent(&reference_mle(), &design, RngSeed::new(1));
    let data = censor_latent(&design, &latent).unwrap();
    assert_eq!(data.observations().len(), design.n());
    assert!(data.observations().iter().all(|o| o.time <= design.tc()));
}
