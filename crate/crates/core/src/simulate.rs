//! Simulation of step-stress competing-risks data under the cumulative
//! exposure model with Type-I censoring.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Dataset, DesignSpec, ModelParams, Observation, N_RISKS};
use crate::rng::RngSeed;

/// Inverse of the cause-specific CDF `G_{l,j}`: the latent lifetime from risk
/// `j` whose CDF value is `u`.
pub fn sample_cause_lifetime(
    params: &ModelParams,
    j: usize,
    design: &DesignSpec,
    u: f64,
) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("uniform draw must lie in (0, 1), got {u}")));
    }
    Ok(invert_sub_cdf(params, j, design, u))
}

fn invert_sub_cdf(params: &ModelParams, j: usize, design: &DesignSpec, u: f64) -> f64 {
    // Exposure reached at failure.
    let psi = (-(-u).ln_1p()).powf(1.0 / params.beta[j]);
    let theta1 = params.theta(j, design.x1());
    let psi_tau = design.tau() / theta1;
    if psi < psi_tau {
        theta1 * psi
    } else {
        design.tau() + params.theta(j, 1.0) * (psi - psi_tau)
    }
}

/// Latent lifetimes of every unit before censoring, indexed `[unit][risk]`.
pub fn simulate_latent(params: &ModelParams, design: &DesignSpec, seed: RngSeed) -> Vec<[f64; N_RISKS]> {
    let mut rng = seed.rng();
    (0..design.n())
        .map(|_| {
            let mut times = [0.0; N_RISKS];
            for (j, slot) in times.iter_mut().enumerate() {
                let u = open_unit(&mut rng);
                *slot = invert_sub_cdf(params, j, design, u);
            }
            times
        })
        .collect()
}

/// Records the first failure of each unit, censoring at `tc`. Ties go to risk 1.
pub fn censor_latent(design: &DesignSpec, latent: &[[f64; N_RISKS]]) -> Result<Dataset> {
    let observations = latent
        .iter()
        .map(|times| {
            let (j, t) = if times[1] < times[0] {
                (1, times[1])
            } else {
                (0, times[0])
            };
            if t > design.tc() {
                Observation::censored(design.tc())
            } else {
                Observation::failure(t, j)
            }
        })
        .collect();
    Dataset::new(*design, observations)
}

/// Draws a dataset of `design.n()` units; deterministic given `seed`.
pub fn simulate_dataset(params: &ModelParams, design: &DesignSpec, seed: RngSeed) -> Dataset {
    let latent = simulate_latent(params, design, seed);
    censor_latent(design, &latent).expect("simulated observations satisfy the design")
}

/// Uniform draw on the open interval (0, 1).
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
