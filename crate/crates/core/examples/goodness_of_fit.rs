//! EDF goodness of fit with parametric-bootstrap p-values.
//!
//! ```bash
//! cargo run --release --example goodness_of_fit
//! ```

use ssalt::fixtures::solar_lighting;
use ssalt::mle::{edf_curve, fit_mle, gof_bootstrap};
use ssalt::RngSeed;

fn main() -> ssalt::Result<()> {
    let data = solar_lighting();
    let fit = fit_mle(&data, None)?;

    for pt in edf_curve(&data, &fit.params).iter().step_by(5) {
        println!("t = {:6.3}  F_n = {:.3}  F = {:.3}", pt.time, pt.empirical, pt.fitted);
    }

    let gof = gof_bootstrap(&data, &fit, 200, RngSeed::new(11))?;
    println!("KS  {:.4}  p = {:.3}", gof.ks_stat, gof.ks_pvalue);
    println!("CvM {:.4}  p = {:.3}", gof.cvm_stat, gof.cvm_pvalue);
    Ok(())
}
