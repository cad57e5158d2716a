//! Bayesian planning of simple step-stress accelerated life tests (SSALT)
//! for items that fail from one of two independent Weibull competing risks.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: stress standardisation, the cumulative exposure model and the
//!   competing-risks lifetime distribution, including the use-stress quantile.
//! - [`likelihood`]: Type-I censored log-likelihood with analytic gradient.
//! - [`simulate`]: dataset generation under the cumulative exposure model.
//! - [`mle`]: maximum likelihood fitting and EDF goodness of fit with a
//!   parametric bootstrap.
//! - [`prior`]: the `(t^q_0j, -b_j, beta_j)` reparametrisation, gamma prior
//!   elicitation and prior densities.
//! - [`mcmc`]: a NUTS-style sampler, rank-normalised diagnostics and the
//!   posterior over the SSALT parameters.
//! - [`design`]: preposterior criteria, kernel smoothing and the one- and
//!   two-variable optimal design searches.
//! - [`cli`]: the commands behind the `ssalt` binary.
//! - [`config`], [`io`], [`fixtures`]: run configuration, CSV formats and
//!   the bundled solar-lighting dataset.
//!
//! Times are measured in hundreds of hours throughout.

pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod likelihood;
pub mod mcmc;
pub mod mle;
pub mod model;
pub mod optim;
pub mod prior;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{Cause, Dataset, DesignSpec, ModelParams, Observation, Phase, StressFrame};
pub use rng::RngSeed;
