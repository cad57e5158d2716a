//! Prior specification on the interpretable scale.
//!
//! For each risk `j` the vector `phi_j = (t^q_{0,j}, -b_j, beta_j)` collects the
//! `q`-quantile of the risk-`j` lifetime at use stress, the magnitude of the
//! acceleration slope and the Weibull shape. Each component gets an
//! independent gamma prior, elicited from a parametric bootstrap of the MLE by
//! matching mean and standard error.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mle::{parametric_bootstrap, MleFit};
use crate::model::{use_quantile, Dataset, ModelParams, N_RISKS};
use crate::rng::RngSeed;

/// Default probability level of the use-stress quantile `t^q_{0,j}`.
pub const DEFAULT_Q: f64 = 0.01;

/// Standard-error inflation used by Priors II and III.
pub const SE_INFLATION: f64 = 1.5;

/// Component names in `[risk][component]` order.
pub const PHI_NAMES: [[&str; 3]; N_RISKS] = [["phi11", "phi21", "phi31"], ["phi12", "phi22", "phi32"]];

/// Reparametrised model parameters, indexed `[risk][component]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiParams {
    pub q: f64,
    pub phi: [[f64; 3]; N_RISKS],
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q must lie in (0, 1), got {q}")))
    }
}

/// `log(-log(1 - q))`.
fn log_cumhaz(q: f64) -> f64 {
    (-(-q).ln_1p()).ln()
}

/// Maps natural parameters to `phi`.
pub fn to_phi(params: &ModelParams, q: f64) -> Result<PhiParams> {
    check_q(q)?;
    let lq = log_cumhaz(q);
    let mut phi = [[0.0; 3]; N_RISKS];
    for j in 0..N_RISKS {
        phi[j] = [
            (params.a[j] + lq / params.beta[j]).exp(),
            -params.b[j],
            params.beta[j],
        ];
    }
    Ok(PhiParams { q, phi })
}

impl PhiParams {
    pub fn new(q: f64, phi: [[f64; 3]; N_RISKS]) -> Result<Self> {
        check_q(q)?;
        if phi.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("all phi components must be positive and finite"));
        }
        Ok(Self { q, phi })
    }

    /// Inverse of [`to_phi`].
    pub fn to_natural(&self) -> ModelParams {
        let lq = log_cumhaz(self.q);
        let mut p = ModelParams {
            a: [0.0; 2],
            b: [0.0; 2],
            beta: [0.0; 2],
        };
        for j in 0..N_RISKS {
            let [t_q, slope, shape] = self.phi[j];
            p.a[j] = t_q.ln() - lq / shape;
            p.b[j] = -slope;
            p.beta[j] = shape;
        }
        p
    }

    pub fn flat(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for j in 0..N_RISKS {
            out[3 * j..3 * j + 3].copy_from_slice(&self.phi[j]);
        }
        out
    }

    pub fn from_flat(q: f64, v: &[f64]) -> Self {
        Self {
            q,
            phi: [[v[0], v[1], v[2]], [v[3], v[4], v[5]]],
        }
    }
}

/// Inverse of [`to_phi`].
pub fn from_phi(phi: &PhiParams) -> Result<ModelParams> {
    check_q(phi.q)?;
    let p = phi.to_natural();
    p.validate()?;
    Ok(p)
}

/// Gamma shape and rate with the given mean and standard deviation.
pub fn mom_gamma(mean: f64, se: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && se > 0.0 && mean.is_finite() && se.is_finite()) {
        return Err(Error::domain(format!(
            "method of moments needs positive mean and sd, got ({mean}, {se})"
        )));
    }
    let var = se * se;
    Ok((mean * mean / var, mean / var))
}

/// The three prior constructions from a bootstrap summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorFlavour {
    /// Bootstrap means and standard errors as given.
    #[serde(rename = "I")]
    Tight,
    /// Standard errors inflated by 1.5.
    #[serde(rename = "II")]
    Wide,
    /// As II, with the slope means shifted up by 1.5 bootstrap standard errors.
    #[serde(rename = "III")]
    Shifted,
}

impl std::str::FromStr for PriorFlavour {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" => Ok(PriorFlavour::Tight),
            "II" | "2" => Ok(PriorFlavour::Wide),
            "III" | "3" => Ok(PriorFlavour::Shifted),
            other => Err(Error::config("prior-elicit", format!("unknown prior flavour {other:?}"))),
        }
    }
}

impl PriorFlavour {
    pub fn label(self) -> &'static str {
        match self {
            PriorFlavour::Tight => "I",
            PriorFlavour::Wide => "II",
            PriorFlavour::Shifted => "III",
        }
    }

    pub const ALL: [PriorFlavour; 3] = [PriorFlavour::Tight, PriorFlavour::Wide, PriorFlavour::Shifted];
}

/// Independent gamma priors on the six `phi` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaPriorBlock", into = "GammaPriorBlock")]
pub struct GammaPrior {
    pub q: f64,
    pub flavour: Option<PriorFlavour>,
    pub shape: [[f64; 3]; N_RISKS],
    pub rate: [[f64; 3]; N_RISKS],
}

impl GammaPrior {
    pub fn new(q: f64, shape: [[f64; 3]; N_RISKS], rate: [[f64; 3]; N_RISKS]) -> Result<Self> {
        check_q(q)?;
        for j in 0..N_RISKS {
            for i in 0..3 {
                let (a, l) = (shape[j][i], rate[j][i]);
                if !(a > 0.0 && l > 0.0 && a.is_finite() && l.is_finite()) {
                    return Err(Error::config(
                        "prior-elicit",
                        format!("{} needs positive finite shape and rate, got ({a}, {l})", PHI_NAMES[j][i]),
                    ));
                }
            }
        }
        Ok(Self {
            q,
            flavour: None,
            shape,
            rate,
        })
    }

    pub fn mean(&self, j: usize, i: usize) -> f64 {
        self.shape[j][i] / self.rate[j][i]
    }

    pub fn sd(&self, j: usize, i: usize) -> f64 {
        self.shape[j][i].sqrt() / self.rate[j][i]
    }

    /// Same prior with every standard deviation multiplied by `factor`.
    pub fn with_scaled_sd(&self, factor: f64) -> Result<Self> {
        let mut shape = self.shape;
        let mut rate = self.rate;
        for j in 0..N_RISKS {
            for i in 0..3 {
                let (a, l) = mom_gamma(self.mean(j, i), factor * self.sd(j, i))?;
                shape[j][i] = a;
                rate[j][i] = l;
            }
        }
        let mut out = Self::new(self.q, shape, rate)?;
        out.flavour = None;
        Ok(out)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        check_q(q)?;
        self.q = q;
        Ok(self)
    }

    /// Draws `phi` from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PhiParams {
        let mut phi = [[0.0; 3]; N_RISKS];
        for j in 0..N_RISKS {
            for i in 0..3 {
                let g = Gamma::new(self.shape[j][i], 1.0 / self.rate[j][i])
                    .expect("validated gamma parameters");
                phi[j][i] = g.sample(rng);
            }
        }
        PhiParams { q: self.q, phi }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GammaPair {
    shape: f64,
    rate: f64,
}

/// Flat configuration form: `q`, optional flavour and six `(shape, rate)` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GammaPriorBlock {
    q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flavour: Option<PriorFlavour>,
    phi11: GammaPair,
    phi21: GammaPair,
    phi31: GammaPair,
    phi12: GammaPair,
    phi22: GammaPair,
    phi32: GammaPair,
}

impl TryFrom<GammaPriorBlock> for GammaPrior {
    type Error = Error;

    fn try_from(b: GammaPriorBlock) -> Result<Self> {
        let pairs = [[b.phi11, b.phi21, b.phi31], [b.phi12, b.phi22, b.phi32]];
        let shape = pairs.map(|r| r.map(|p| p.shape));
        let rate = pairs.map(|r| r.map(|p| p.rate));
        let mut prior = GammaPrior::new(b.q, shape, rate)?;
        prior.flavour = b.flavour;
        Ok(prior)
    }
}

impl From<GammaPrior> for GammaPriorBlock {
    fn from(p: GammaPrior) -> Self {
        let pair = |j: usize, i: usize| GammaPair {
            shape: p.shape[j][i],
            rate: p.rate[j][i],
        };
        GammaPriorBlock {
            q: p.q,
            flavour: p.flavour,
            phi11: pair(0, 0),
            phi21: pair(0, 1),
            phi31: pair(0, 2),
            phi12: pair(1, 0),
            phi22: pair(1, 1),
            phi32: pair(1, 2),
        }
    }
}

/// Bootstrap mean and standard error of a use-stress quantile `t_p(x0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub p: f64,
    pub mean: f64,
    pub se: f64,
}

/// Componentwise bootstrap mean and standard error of `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub q: f64,
    pub mean: [[f64; 3]; N_RISKS],
    pub se: [[f64; 3]; N_RISKS],
    pub n_valid: usize,
    #[serde(default)]
    pub quantiles: Vec<QuantileSummary>,
}

/// Quantile levels summarised alongside `phi` during elicitation.
pub const SUMMARY_QUANTILES: [f64; 3] = [0.01, 0.10, 0.50];

/// Parametric bootstrap of the MLE on the `phi` scale.
pub fn elicit_bootstrap(
    data: &Dataset,
    fit: &MleFit,
    n_reps: usize,
    q: f64,
    seed: RngSeed,
) -> Result<BootstrapSummary> {
    check_q(q)?;
    if n_reps < 2 {
        return Err(Error::domain("elicitation needs at least two bootstrap replicates"));
    }
    if !fit.converged {
        return Err(Error::domain("elicitation needs a converged MLE"));
    }
    let reps = parametric_bootstrap(data, fit, n_reps, seed, |_, refit| {
        let phi = to_phi(&refit.params, q).map(|p| p.flat());
        let tq: Vec<f64> = SUMMARY_QUANTILES
            .iter()
            .map(|&p| use_quantile(&refit.params, p).unwrap_or(f64::NAN))
            .collect();
        (phi, tq)
    })?;
    let mut rows = Vec::with_capacity(n_reps);
    for (phi, tq) in reps {
        rows.push((phi?, tq));
    }

    let mut mean = [[0.0; 3]; N_RISKS];
    let mut se = [[0.0; 3]; N_RISKS];
    for j in 0..N_RISKS {
        for i in 0..3 {
            let col: Vec<f64> = rows.iter().map(|(phi, _)| phi[3 * j + i]).collect();
            let (m, s) = mean_sd(&col);
            mean[j][i] = m;
            se[j][i] = s;
        }
    }
    let quantiles = SUMMARY_QUANTILES
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let col: Vec<f64> = rows.iter().map(|(_, tq)| tq[k]).collect();
            let (m, s) = mean_sd(&col);
            QuantileSummary { p, mean: m, se: s }
        })
        .collect();
    Ok(BootstrapSummary {
        q,
        mean,
        se,
        n_valid: n_reps,
        quantiles,
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Builds Prior I, II or III from a bootstrap summary.
pub fn build_prior(summary: &BootstrapSummary, flavour: PriorFlavour) -> Result<GammaPrior> {
    let mut shape = [[0.0; 3]; N_RISKS];
    let mut rate = [[0.0; 3]; N_RISKS];
    for j in 0..N_RISKS {
        for i in 0..3 {
            let mu = summary.mean[j][i];
            let sigma = summary.se[j][i];
            let (m, s) = match flavour {
                PriorFlavour::Tight => (mu, sigma),
                PriorFlavour::Wide => (mu, SE_INFLATION * sigma),
                PriorFlavour::Shifted if i == 1 => (mu + SE_INFLATION * sigma, SE_INFLATION * sigma),
                PriorFlavour::Shifted => (mu, SE_INFLATION * sigma),
            };
            let (a, l) = mom_gamma(m, s)?;
            shape[j][i] = a;
            rate[j][i] = l;
        }
    }
    let mut prior = GammaPrior::new(summary.q, shape, rate)?;
    prior.flavour = Some(flavour);
    Ok(prior)
}

/// Gamma log-density with shape `alpha` and rate `lambda`.
pub fn log_gamma_pdf(x: f64, alpha: f64, lambda: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    alpha * lambda.ln() - ln_gamma(alpha) + (alpha - 1.0) * x.ln() - lambda * x
}

/// Sum of the six independent gamma log-densities.
pub fn log_prior_phi(phi: &PhiParams, prior: &GammaPrior) -> f64 {
    let mut total = 0.0;
    for j in 0..N_RISKS {
        for i in 0..3 {
            total += log_gamma_pdf(phi.phi[j][i], prior.shape[j][i], prior.rate[j][i]);
        }
    }
    total
}

/// Induced log-density on `(a_j, b_j, beta_j)`: the `phi` density plus the
/// log-Jacobian `sum_j log(e^{a_j} (-log(1-q))^{1/beta_j})`.
pub fn log_prior_natural(params: &ModelParams, prior: &GammaPrior) -> f64 {
    if params.b.iter().any(|&b| !(b < 0.0)) || params.beta.iter().any(|&s| !(s > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let phi = match to_phi(params, prior.q) {
        Ok(p) => p,
        Err(_) => return f64::NEG_INFINITY,
    };
    let log_jacobian: f64 = (0..N_RISKS).map(|j| phi.phi[j][0].ln()).sum();
    log_prior_phi(&phi, prior) + log_jacobian
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior_one() -> GammaPrior {
        crate::fixtures::reference_prior(PriorFlavour::Tight, DEFAULT_Q).unwrap()
    }

    #[test]
    fn unit_cumulative_hazard_gives_unit_quantile() {
        let p = ModelParams::new([0.0, 0.0], [-1.0, -2.0], [1.0, 3.0]).unwrap();
        let q = 1.0 - (-1.0f64).exp();
        let phi = to_phi(&p, q).unwrap();
        assert!((phi.phi[0][0] - 1.0).abs() < 1e-14);
        assert!((phi.phi[1][0] - 1.0).abs() < 1e-14);
        assert!(to_phi(&p, 1.0).is_err());
    }

    #[test]
    fn mom_examples() {
        let (a, l) = mom_gamma(4.2805, 1.2737).unwrap();
        assert!((a - 11.290).abs() < 5e-3 && (l - 2.637).abs() < 5e-3);
        let (a, l) = mom_gamma(1.4025, 0.5039).unwrap();
        assert!((a - 7.748).abs() < 5e-3 && (l - 5.526).abs() < 5e-3);
        let (a, l) = mom_gamma(2.5, 2.5).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (l - 0.4).abs() < 1e-15);
        assert!(mom_gamma(0.0, 1.0).is_err());
    }

    #[test]
    fn natural_support() {
        let prior = prior_one();
        let p = ModelParams {
            a: [4.5, 2.0],
            b: [0.1, -1.2],
            beta: [0.8, 1.5],
        };
        assert_eq!(log_prior_natural(&p, &prior), f64::NEG_INFINITY);
    }

    #[test]
    fn unit_shape_jacobian() {
        let prior = prior_one();
        let p = ModelParams::new([0.3, -0.2], [-2.0, -1.0], [1.0, 1.0]).unwrap();
        let diff = log_prior_natural(&p, &prior) - log_prior_phi(&to_phi(&p, prior.q).unwrap(), &prior);
        let cumhaz = -(-prior.q).ln_1p();
        let expected: f64 = (0..2).map(|j| (p.a[j].exp() * cumhaz).ln()).sum();
        assert!((diff - expected).abs() < 1e-12);
    }

    #[test]
    fn separable_terms() {
        let prior = prior_one();
        let base = PhiParams::new(prior.q, [[0.2, 4.0, 1.1], [0.15, 1.4, 1.7]]).unwrap();
        let mut moved = base;
        moved.phi[1][2] = 2.3;
        let delta = log_prior_phi(&moved, &prior) - log_prior_phi(&base, &prior);
        let expected = log_gamma_pdf(2.3, prior.shape[1][2], prior.rate[1][2])
            - log_gamma_pdf(1.7, prior.shape[1][2], prior.rate[1][2]);
        assert!((delta - expected).abs() < 1e-12);
    }

    #[test]
    fn prior_block_round_trip() {
        let prior = crate::fixtures::reference_prior(PriorFlavour::Shifted, 0.05).unwrap();
        let text = toml::to_string(&prior).unwrap();
        let back: GammaPrior = toml::from_str(&text).unwrap();
        assert_eq!(prior, back);
        assert!(text.contains("phi22"));
    }

    #[test]
    fn wide_prior_scales_variance() {
        let summary = crate::fixtures::reference_bootstrap_summary(DEFAULT_Q);
        let one = build_prior(&summary, PriorFlavour::Tight).unwrap();
        let two = build_prior(&summary, PriorFlavour::Wide).unwrap();
        for j in 0..2 {
            for i in 0..3 {
                assert!((two.mean(j, i) - one.mean(j, i)).abs() < 1e-12 * one.mean(j, i));
                let ratio = two.sd(j, i).powi(2) / one.sd(j, i).powi(2);
                assert!((ratio - 2.25).abs() < 1e-12);
            }
        }
    }
}
