//! Gamma priors on the `(t^q_0j, -b_j, beta_j)` scale from a bootstrap of
//! the MLE.
//!
//! ```bash
//! cargo run --release --example elicit_prior
//! ```

use ssalt::fixtures::solar_lighting;
use ssalt::mle::fit_mle;
use ssalt::prior::{build_prior, elicit_bootstrap, to_phi, PriorFlavour, PHI_NAMES};
use ssalt::RngSeed;

fn main() -> ssalt::Result<()> {
    let data = solar_lighting();
    let fit = fit_mle(&data, None)?;
    let q = 0.01;
    println!("phi at the MLE: {:?}", to_phi(&fit.params, q)?.flat());

    let summary = elicit_bootstrap(&data, &fit, 300, q, RngSeed::new(5))?;
    for flavour in PriorFlavour::ALL {
        let prior = build_prior(&summary, flavour)?;
        println!("Prior {}", flavour.label());
        for (j, names) in PHI_NAMES.iter().enumerate() {
            for (i, name) in names.iter().enumerate() {
                println!(
                    "  {name}: shape {:8.3} rate {:8.3} (mean {:.3}, sd {:.3})",
                    prior.shape[j][i],
                    prior.rate[j][i],
                    prior.mean(j, i),
                    prior.sd(j, i)
                );
            }
        }
    }
    Ok(())
}
