//! One posterior run on the bundled data with the lower stress read as the
//! midpoint, followed by rank-normalised diagnostics and the refit gate.
//!
//! ```bash
//! cargo run --release --example diagnose_posterior
//! ```

use ssalt::fixtures::{midpoint_frame, reference_prior, solar_lighting};
use ssalt::mcmc::{autocorrelation, refit_reasons, sample_posterior, SamplerConfig};
use ssalt::prior::PriorFlavour;

fn main() -> ssalt::Result<()> {
    let fixture = solar_lighting();
    let design = fixture.design().with_frame(midpoint_frame())?;
    let data = fixture.with_design(design)?;
    let prior = reference_prior(PriorFlavour::Tight, 0.01)?;

    let (draws, diag) = sample_posterior(&design, Some(&data), &prior, 0.1, &SamplerConfig::default())?;
    for row in draws.summary(&diag) {
        println!(
            "{:>14} mean {:9.4} sd {:8.4} rhat {:.4} ess_bulk {:6.0} ess_tail {:6.0}",
            row.name, row.mean, row.sd, row.rhat, row.ess_bulk, row.ess_tail
        );
    }
    println!("divergent transitions: {}", diag.n_divergent);

    let k = draws.names().iter().position(|n| *n == "tp").expect("tp column");
    for (c, chain) in draws.chains(k).iter().enumerate() {
        let acf = autocorrelation(chain, 5);
        println!("chain {c} acf of tp at lags 1..5: {:.3?}", &acf[1..]);
    }

    let reasons = refit_reasons(&draws, &diag);
    if reasons.is_empty() {
        println!("passes the convergence gate");
    } else {
        println!("would be refitted: {reasons:?}");
    }
    Ok(())
}
