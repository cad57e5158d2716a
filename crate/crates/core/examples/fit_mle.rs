//! Maximum likelihood fit of the bundled solar-lighting test.
//!
//! ```bash
//! cargo run --release --example fit_mle
//! ```

use ssalt::fixtures::solar_lighting;
use ssalt::mle::fit_mle;
use ssalt::model::use_quantile;

fn main() -> ssalt::Result<()> {
    let data = solar_lighting();
    println!(
        "{} units, {} failures, change at tau = {} (hundred hours)",
        data.design().n(),
        data.n_failures(),
        data.design().tau()
    );

    let fit = fit_mle(&data, None)?;
    let names = ["a1", "b1", "beta1", "a2", "b2", "beta2"];
    for (name, v) in names.iter().zip(fit.params.to_array()) {
        println!("{name:>6} = {v:9.4}");
    }
    println!("loglik = {:.4} after {} iterations", fit.loglik, fit.iterations);

    // lifetime quantiles at the use stress
    for p in [0.01, 0.1, 0.5] {
        println!("t_{p}(x0) = {:.4}", use_quantile(&fit.params, p)?);
    }
    Ok(())
}
