//! The use-stress lifetime quantile of the two-risk Weibull model, checked
//! against the overall CDF.
//!
//! ```bash
//! cargo run --release --example use_quantile
//! ```

use ssalt::fixtures::reference_mle;
use ssalt::model::{use_quantile, ModelParams};

fn main() -> ssalt::Result<()> {
    let params = reference_mle();
    for p in [0.001, 0.01, 0.1, 0.5, 0.9] {
        let t = use_quantile(&params, p)?;
        // at x = 0 the cumulative hazard is sum_j (t / e^{a_j})^{beta_j}
        let h: f64 = (0..2).map(|j| (t / params.a[j].exp()).powf(params.beta[j])).sum();
        println!("p = {p:5}: t_p(x0) = {t:10.5}, 1 - exp(-H) = {:.6}", 1.0 - (-h).exp());
    }

    // one dominant risk reduces to a Weibull quantile
    let single = ModelParams::new([1.0, 40.0], [-1.0, -1.0], [2.0, 1.0])?;
    let t = use_quantile(&single, 0.5)?;
    println!("near single-risk median {t:.6} vs {:.6}", 1f64.exp() * 2f64.ln().sqrt());
    Ok(())
}
