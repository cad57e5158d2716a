//! Run configuration in TOML.
//!
//! Every block is optional; missing fields take the defaults below, which
//! describe the bundled solar-lighting test. A minimal planning file:
//!
//! ```toml
//! seed = 7
//!
//! [planning]
//! b = 50
//! m1 = 9
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{self, HIGH_KELVIN, MID_KELVIN, USE_KELVIN};
use crate::mcmc::SamplerConfig;
use crate::model::{DesignSpec, ModelParams, StressFrame};
use crate::prior::{GammaPrior, PriorFlavour, DEFAULT_Q};
use crate::rng::RngSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub frame: FrameConfig,
    pub design: DesignConfig,
    pub prior: PriorConfig,
    pub sampler: SamplerSection,
    pub planning: PlanningConfig,
    pub gof: GofConfig,
    pub elicit: ElicitConfig,
    pub diagnose: DiagnoseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            frame: FrameConfig::default(),
            design: DesignConfig::default(),
            prior: PriorConfig::default(),
            sampler: SamplerSection::default(),
            planning: PlanningConfig::default(),
            gof: GofConfig::default(),
            elicit: ElicitConfig::default(),
            diagnose: DiagnoseConfig::default(),
        }
    }
}

/// Temperatures in Kelvin: use, lower test and higher test stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            t0: USE_KELVIN,
            t1: USE_KELVIN,
            t2: HIGH_KELVIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub tau: f64,
    pub tc: f64,
    pub n: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            tau: 5.0,
            tc: 6.0,
            n: 35,
        }
    }
}

/// Either a named prior built from the bundled bootstrap summary, or an
/// explicit set of gamma hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub flavour: PriorFlavour,
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaPrior>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            flavour: PriorFlavour::Tight,
            q: DEFAULT_Q,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub n_chains: usize,
    pub iter_warmup: usize,
    pub iter_sampling: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub adapt_metric: bool,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let d = SamplerConfig::default();
        Self {
            n_chains: d.n_chains,
            iter_warmup: d.iter_warmup,
            iter_sampling: d.iter_sampling,
            target_accept: d.target_accept,
            max_depth: d.max_depth,
            adapt_metric: d.adapt_metric,
        }
    }
}

/// One scenario of a planning sweep. Unset fields keep the base values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub p: Option<f64>,
    pub x1: Option<f64>,
    pub flavour: Option<PriorFlavour>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanningConfig {
    pub p: f64,
    /// Monte Carlo replicates per grid point.
    pub b: usize,
    pub m1: usize,
    pub tau_range: [f64; 2],
    /// Lower stress of one-variable searches, standardised.
    pub x1: f64,
    /// Lower-stress grid of two-variable searches, standardised.
    pub x1_grid: Vec<f64>,
    pub x1_range: [f64; 2],
    /// Generating parameters `(a1, b1, beta1, a2, b2, beta2)`; defaults to
    /// the MLE on the bundled data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<[f64; 6]>,
    /// Sweep of one-variable searches; empty means a single run.
    pub scenarios: Vec<Scenario>,
}

impl Default for PlanningConfig {
    fn default() -> Self {
        Self {
            p: 0.10,
            b: 1000,
            m1: 25,
            tau_range: [0.05, 5.95],
            x1: 0.5,
            x1_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            x1_range: [0.1, 0.9],
            truth: None,
            scenarios: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GofConfig {
    pub n_boot: usize,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self { n_boot: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElicitConfig {
    pub n_reps: usize,
}

impl Default for ElicitConfig {
    fn default() -> Self {
        Self { n_reps: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub p: f64,
    /// Sample the prior alone, ignoring any data.
    pub empty_data: bool,
    pub max_lag: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            p: 0.10,
            empty_data: false,
            max_lag: 30,
        }
    }
}

/// Named configurations for the planning scenarios of the sensitivity study.
pub const PRESETS: [&str; 6] = ["baseline", "sa1", "sa2", "sa3", "sa4", "two-variable"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("cli", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// A bundled planning scenario; see [`PRESETS`].
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.frame.t1 = MID_KELVIN;
        let sweep = |label: &str, f: &dyn Fn(&mut Scenario)| {
            let mut s = Scenario {
                label: label.to_string(),
                ..Default::default()
            };
            f(&mut s);
            s
        };
        cfg.planning.scenarios = match name {
            "baseline" | "two-variable" => Vec::new(),
            "sa1" => [0.01, 0.10, 0.50]
                .iter()
                .map(|&p| sweep(&format!("p={p}"), &|s| s.p = Some(p)))
                .collect(),
            "sa2" => (1..=9)
                .map(|i| {
                    let x1 = i as f64 / 10.0;
                    sweep(&format!("x1={x1}"), &|s| s.x1 = Some(x1))
                })
                .collect(),
            "sa3" => PriorFlavour::ALL
                .iter()
                .map(|&f| sweep(&format!("prior={}", f.label()), &|s| s.flavour = Some(f)))
                .collect(),
            "sa4" => [20usize, 35, 50]
                .iter()
                .map(|&n| sweep(&format!("n={n}"), &|s| s.n = Some(n)))
                .collect(),
            other => {
                return Err(Error::config(
                    "cli",
                    format!("unknown preset `{other}`, expected one of {}", PRESETS.join(", ")),
                ))
            }
        };
        Ok(cfg)
    }

    /// Checks every block against the preconditions of the module that uses it.
    pub fn validate(&self) -> Result<()> {
        self.frame()?;
        self.design()?;
        self.prior()?;
        self.sampler().validate()?;
        let pl = &self.planning;
        let err = |m: String| Err(Error::config("design-criteria", m));
        if !(pl.p > 0.0 && pl.p < 1.0) {
            return err(format!("planning.p must lie in (0, 1), got {}", pl.p));
        }
        if pl.b < 1 || pl.m1 < 1 {
            return err(format!("planning.b and planning.m1 must be at least 1, got {} and {}", pl.b, pl.m1));
        }
        let [lo, hi] = pl.tau_range;
        if !(lo > 0.0 && lo <= hi && hi < self.design.tc) {
            return err(format!(
                "planning.tau_range must satisfy 0 < lo <= hi < tc = {}, got [{lo}, {hi}]",
                self.design.tc
            ));
        }
        let x1_ok = |x: f64| (0.0..1.0).contains(&x);
        if !x1_ok(pl.x1) || pl.x1_grid.iter().any(|&x| !x1_ok(x)) {
            return err("x1 values must lie in [0, 1)".into());
        }
        if pl.x1_grid.is_empty() || pl.x1_grid.windows(2).any(|w| w[0] >= w[1]) {
            return err("planning.x1_grid must be non-empty and strictly increasing".into());
        }
        if !(pl.x1_range[0] <= pl.x1_range[1]) {
            return err("planning.x1_range must be ordered".into());
        }
        self.truth()?;
        for s in &pl.scenarios {
            if let Some(p) = s.p {
                if !(p > 0.0 && p < 1.0) {
                    return err(format!("scenario `{}`: p must lie in (0, 1)", s.label));
                }
            }
            if s.x1.is_some_and(|x| !x1_ok(x)) {
                return err(format!("scenario `{}`: x1 must lie in [0, 1)", s.label));
            }
            if s.n == Some(0) {
                return err(format!("scenario `{}`: n must be at least 1", s.label));
            }
        }
        if self.gof.n_boot < 1 {
            return Err(Error::config("inference-mle", "gof.n_boot must be at least 1"));
        }
        if self.elicit.n_reps < 2 {
            return Err(Error::config("prior-elicit", "elicit.n_reps must be at least 2"));
        }
        if !(self.diagnose.p > 0.0 && self.diagnose.p < 1.0) {
            return Err(Error::config("mcmc", "diagnose.p must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn frame(&self) -> Result<StressFrame> {
        let f = self.frame;
        StressFrame::from_kelvin(f.t0, f.t1, f.t2).map_err(|e| Error::config("model-core", format!("frame: {e}")))
    }

    pub fn design(&self) -> Result<DesignSpec> {
        let d = self.design;
        DesignSpec::new(self.frame()?, d.tau, d.tc, d.n).map_err(|e| Error::config("model-core", format!("design: {e}")))
    }

    pub fn root_seed(&self) -> RngSeed {
        RngSeed::new(self.seed)
    }

    pub fn prior(&self) -> Result<GammaPrior> {
        self.prior_with(self.prior.flavour)
    }

    /// Prior of the given flavour, unless explicit hyperparameters are set.
    pub fn prior_with(&self, flavour: PriorFlavour) -> Result<GammaPrior> {
        match self.prior.gamma {
            Some(g) => Ok(g),
            None => fixtures::reference_prior(flavour, self.prior.q)
                .map_err(|e| Error::config("prior-elicit", format!("prior: {e}"))),
        }
    }

    pub fn sampler(&self) -> SamplerConfig {
        let s = self.sampler;
        SamplerConfig {
            n_chains: s.n_chains,
            iter_warmup: s.iter_warmup,
            iter_sampling: s.iter_sampling,
            target_accept: s.target_accept,
            max_depth: s.max_depth,
            seed: self.root_seed().derive(&[0x3c3c]),
            adapt_metric: s.adapt_metric,
        }
    }

    pub fn truth(&self) -> Result<ModelParams> {
        match self.planning.truth {
            Some(v) => ModelParams::from_array(v).map_err(|e| Error::config("design-criteria", format!("planning.truth: {e}"))),
            None => Ok(fixtures::reference_mle()),
        }
    }

    /// Base design of planning runs: the configured design with the lower
    /// stress moved to `planning.x1`.
    pub fn planning_design(&self) -> Result<DesignSpec> {
        let design = self.design()?;
        let frame = design.frame().with_x1(self.planning.x1)?;
        design.with_frame(frame)
    }
}
