//! Maximum likelihood estimation and EDF goodness of fit.
//!
//! The log-likelihood separates into one block per risk, so each block of
//! three parameters is optimised on its own. Positivity of `-b_j` and
//! `beta_j` is enforced by optimising their logarithms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{log_lik, log_lik_value, risk_block};
use crate::model::{overall_cdf_unchecked, Dataset, ModelParams, N_RISKS};
use crate::optim::{bfgs, nelder_mead, BfgsOptions};
use crate::rng::RngSeed;
use crate::simulate::simulate_dataset;

/// Gradient norm below which a fit counts as converged.
pub const MLE_GRAD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub params: ModelParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Errors with [`Error::NonIdentifiable`] if some cause has no failures in
/// some stress phase.
pub fn check_identifiable(data: &Dataset) -> Result<()> {
    let counts = data.cell_counts();
    for (j, row) in counts.iter().enumerate() {
        for (l, &c) in row.iter().enumerate() {
            if c == 0 {
                return Err(Error::NonIdentifiable(format!(
                    "no failures from cause {} during stress phase {}",
                    j + 1,
                    l + 1
                )));
            }
        }
    }
    Ok(())
}

/// Starting values from exponential exposure estimates in each cause/phase
/// cell, with unit shapes.
pub fn default_init(data: &Dataset) -> ModelParams {
    let design = data.design();
    let tau = design.tau();
    let x1 = design.x1();
    let exposure1: f64 = data.observations().iter().map(|o| o.time.min(tau)).sum();
    let exposure2: f64 = data
        .observations()
        .iter()
        .map(|o| (o.time - tau).max(0.0))
        .sum();
    let counts = data.cell_counts();
    let mut a = [0.0; 2];
    let mut b = [0.0; 2];
    for j in 0..N_RISKS {
        let theta1 = exposure1 / counts[j][0].max(1) as f64;
        let theta2 = exposure2.max(1e-3) / counts[j][1].max(1) as f64;
        let slope = ((theta2.ln() - theta1.ln()) / (1.0 - x1)).min(-0.05);
        b[j] = slope;
        a[j] = theta1.ln() - slope * x1;
    }
    ModelParams {
        a,
        b,
        beta: [1.0, 1.0],
    }
}

/// Maximum likelihood fit. `init` defaults to [`default_init`].
pub fn fit_mle(data: &Dataset, init: Option<ModelParams>) -> Result<MleFit> {
    check_identifiable(data)?;
    let start = match init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => default_init(data),
    };

    let mut params = start;
    let mut iterations = 0;
    for j in 0..N_RISKS {
        let (z, iters) = fit_block(data, &start, j);
        params.a[j] = z[0];
        params.b[j] = -z[1].exp();
        params.beta[j] = z[2].exp();
        iterations += iters;
    }
    let value = log_lik(&params, data);
    let grad = value.gradient.expect("gradient requested");
    let converged = value.value.is_finite() && grad.iter().all(|g| g.abs() < MLE_GRAD_TOL);
    Ok(MleFit {
        params,
        loglik: value.value,
        converged,
        iterations,
    })
}

fn fit_block(data: &Dataset, start: &ModelParams, j: usize) -> ([f64; 3], usize) {
    let design = data.design();
    let obs = data.observations();
    let unpack = |z: &[f64]| -> ModelParams {
        let mut p = *start;
        p.a[j] = z[0];
        p.b[j] = -z[1].exp();
        p.beta[j] = z[2].exp();
        p
    };
    let objective = |z: &[f64], g: &mut [f64]| -> f64 {
        let p = unpack(z);
        let (v, dv) = risk_block(&p, design, obs, j);
        g[0] = -dv[0];
        g[1] = -dv[1] * p.b[j];
        g[2] = -dv[2] * p.beta[j];
        -v
    };
    let z0 = [start.a[j], (-start.b[j]).ln(), start.beta[j].ln()];
    let opts = BfgsOptions {
        max_iter: 1000,
        grad_tol: 1e-8,
    };
    let first = bfgs(objective, &z0, opts);
    if first.converged {
        return ([first.x[0], first.x[1], first.x[2]], first.iterations);
    }
    let value_only = |z: &[f64]| {
        let p = unpack(z);
        -risk_block(&p, design, obs, j).0
    };
    let simplex = nelder_mead(value_only, &first.x, 0.5, 5000);
    let second = bfgs(objective, &simplex.x, opts);
    let best = if second.value <= first.value {
        second.x.clone()
    } else {
        first.x.clone()
    };
    (
        [best[0], best[1], best[2]],
        first.iterations + simplex.iterations + second.iterations,
    )
}

/// Simulates from `fit` under the design of `data`, refits, and maps each
/// refit through `map`. Replicates without a finite MLE are redrawn, up to
/// `10 * n_reps` attempts per replicate.
pub fn parametric_bootstrap<T, F>(
    data: &Dataset,
    fit: &MleFit,
    n_reps: usize,
    seed: RngSeed,
    map: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Dataset, &MleFit) -> T + Sync,
{
    let design = *data.design();
    let truth = fit.params;
    let max_attempts = 10 * n_reps.max(1);
    (0..n_reps)
        .into_par_iter()
        .map(|b| {
            for attempt in 0..max_attempts {
                let sim = simulate_dataset(&truth, &design, seed.derive(&[b as u64, attempt as u64]));
                match fit_mle(&sim, Some(truth)) {
                    Ok(refit) => return Ok(map(&sim, &refit)),
                    Err(Error::NonIdentifiable(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::NonIdentifiable(format!(
                "bootstrap replicate {b}: {max_attempts} consecutive simulated datasets had an empty cause/phase cell"
            )))
        })
        .collect()
}

/// One point of the empirical versus fitted CDF comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdfPoint {
    pub time: f64,
    pub empirical: f64,
    pub fitted: f64,
}

/// `F_n(t_i) = i / n` and the fitted CDF at each ordered failure time.
pub fn edf_curve(data: &Dataset, params: &ModelParams) -> Vec<EdfPoint> {
    let n = data.design().n() as f64;
    data.failures()
        .enumerate()
        .map(|(i, o)| EdfPoint {
            time: o.time,
            empirical: (i + 1) as f64 / n,
            fitted: overall_cdf_unchecked(params, data.design(), o.time),
        })
        .collect()
}

/// Kolmogorov-Smirnov and Cramer-von Mises statistics over the observed
/// failure times. KS takes both one-sided gaps at each jump; CvM averages the
/// squared gaps `(F_n(t_i) - F(t_i))^2` over the failures.
pub fn edf_statistics(data: &Dataset, params: &ModelParams) -> (f64, f64) {
    let n = data.design().n() as f64;
    let curve = edf_curve(data, params);
    if curve.is_empty() {
        return (0.0, 0.0);
    }
    let mut ks: f64 = 0.0;
    let mut cvm = 0.0;
    for (i, pt) in curve.iter().enumerate() {
        let before = i as f64 / n;
        ks = ks.max(pt.empirical - pt.fitted).max(pt.fitted - before);
        cvm += (pt.empirical - pt.fitted).powi(2);
    }
    (ks, cvm / curve.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub ks_stat: f64,
    pub cvm_stat: f64,
    pub ks_pvalue: f64,
    pub cvm_pvalue: f64,
    pub n_boot: usize,
}

/// Parametric-bootstrap p-values for the EDF statistics.
pub fn gof_bootstrap(data: &Dataset, fit: &MleFit, n_boot: usize, seed: RngSeed) -> Result<GofResult> {
    if n_boot == 0 {
        return Err(Error::domain("n_boot must be at least 1"));
    }
    if !fit.converged {
        return Err(Error::domain("goodness of fit needs a converged MLE"));
    }
    let (ks, cvm) = edf_statistics(data, &fit.params);
    let stats = parametric_bootstrap(data, fit, n_boot, seed, |sim, refit| {
        edf_statistics(sim, &refit.params)
    })?;
    let exceed_ks = stats.iter().filter(|s| s.0 >= ks).count();
    let exceed_cvm = stats.iter().filter(|s| s.1 >= cvm).count();
    let denom = (n_boot + 1) as f64;
    Ok(GofResult {
        ks_stat: ks,
        cvm_stat: cvm,
        ks_pvalue: (1 + exceed_ks) as f64 / denom,
        cvm_pvalue: (1 + exceed_cvm) as f64 / denom,
        n_boot,
    })
}

/// Log-likelihood at `params`, for reporting.
pub fn loglik_at(params: &ModelParams, data: &Dataset) -> f64 {
    log_lik_value(params, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DesignSpec, Observation, StressFrame};

    fn design(n: usize) -> DesignSpec {
        let frame = StressFrame::from_kelvin(293.0, 320.2136, 353.0).unwrap();
        DesignSpec::new(frame, 3.0, 6.0, n).unwrap()
    }

    #[test]
    fn empty_cell_is_not_identifiable() {
        let d = design(3);
        let data = Dataset::new(
            d,
            vec![
                Observation::failure(1.0, 0),
                Observation::failure(4.0, 1),
                Observation::censored(6.0),
            ],
        )
        .unwrap();
        assert!(matches!(fit_mle(&data, None), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn init_at_truth_ascends() {
        let truth = ModelParams::from_array([2.5, -2.0, 1.2, 2.2, -1.5, 1.4]).unwrap();
        let data = simulate_dataset(&truth, &design(400), RngSeed::new(9));
        let fit = fit_mle(&data, Some(truth)).unwrap();
        assert!(fit.converged);
        assert!(fit.loglik >= log_lik_value(&truth, &data));
    }

    #[test]
    fn edf_statistics_nonnegative() {
        let truth = ModelParams::from_array([2.5, -2.0, 1.2, 2.2, -1.5, 1.4]).unwrap();
        let data = simulate_dataset(&truth, &design(50), RngSeed::new(2));
        let (ks, cvm) = edf_statistics(&data, &truth);
        assert!(ks >= 0.0 && cvm >= 0.0 && ks <= 1.0);
    }
}
