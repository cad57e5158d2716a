//! One-variable planning: the stress-change time that minimises the
//! preposterior variance of `t_p(x0)` at a fixed lower stress.
//!
//! Desk scale only; the full study uses B = 1000 and 25 grid points.
//!
//! ```bash
//! cargo run --release --example plan_change_time
//! ```

use ssalt::design::{optimise_1d, Criterion, MonteCarlo};
use ssalt::fixtures::{midpoint_frame, reference_mle, reference_prior, solar_lighting_design};
use ssalt::mcmc::SamplerConfig;
use ssalt::prior::PriorFlavour;
use ssalt::RngSeed;

fn main() -> ssalt::Result<()> {
    let base = solar_lighting_design().with_frame(midpoint_frame())?;
    let prior = reference_prior(PriorFlavour::Tight, 0.01)?;
    let truth = reference_mle();
    let sampler = SamplerConfig {
        iter_warmup: 500,
        iter_sampling: 500,
        ..Default::default()
    };
    let mc = MonteCarlo {
        prior: &prior,
        truth: &truth,
        p: 0.1,
        b: 4,
        sampler: &sampler,
    };

    let surface = optimise_1d(&base, (0.05, 5.95), 5, &mc, RngSeed::new(1))?;
    for p in &surface.points {
        println!(
            "tau {:5.3}: C1 {:.4} C2 {:.4} ({} used, {} refitted)",
            p.tau, p.c1_raw, p.c2_raw, p.n_used, p.n_refitted
        );
    }
    for c in Criterion::ALL {
        let o = surface.optimum(c);
        println!("{} optimum: tau = {:.3}, smoothed value {:.4}", c.label(), o.tau, o.value);
    }
    Ok(())
}
