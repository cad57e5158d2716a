//! Domain types and the step-stress competing-risks lifetime model.
//!
//! Stress enters through the inverse absolute temperature `s = 1/T`, standardised
//! so that the use stress maps to `x = 0` and the high test stress to `x = 1`.
//! Each risk `j` has a Weibull lifetime with shape `beta_j` and scale
//! `theta_j(x) = exp(a_j + b_j x)`. When the stress steps up at `tau`, the
//! cumulative exposure model carries the accumulated damage across the change
//! point, which keeps every CDF continuous at `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of competing risks handled by the model.
pub const N_RISKS: usize = 2;

/// Stress levels on the inverse-Kelvin scale.
///
/// Temperatures must satisfy `T0 <= T1 < T2`, i.e. `s0 >= s1 > s2 > 0`. The
/// first test stress may coincide with the use stress, as it does in the
/// bundled solar-lighting dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressFrame {
    s0: f64,
    s1: f64,
    s2: f64,
}

impl StressFrame {
    pub fn new(s0: f64, s1: f64, s2: f64) -> Result<Self> {
        if !(s0.is_finite() && s1.is_finite() && s2.is_finite()) {
            return Err(Error::domain("stress levels must be finite"));
        }
        if !(s0 >= s1 && s1 > s2 && s2 > 0.0) {
            return Err(Error::domain(format!(
                "stress levels must satisfy s0 >= s1 > s2 > 0, got ({s0}, {s1}, {s2})"
            )));
        }
        Ok(Self { s0, s1, s2 })
    }

    /// Builds the frame from absolute temperatures in Kelvin.
    pub fn from_kelvin(t0: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(t0 > 0.0 && t1 > 0.0 && t2 > 0.0) {
            return Err(Error::domain("temperatures must be positive"));
        }
        Self::new(1.0 / t0, 1.0 / t1, 1.0 / t2)
    }

    /// Same use and high stress, with the lower test stress placed at the
    /// standardised level `x1`.
    pub fn with_x1(&self, x1: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x1) {
            return Err(Error::domain(format!("x1 must lie in [0, 1), got {x1}")));
        }
        Self::new(self.s0, self.s0 + x1 * (self.s2 - self.s0), self.s2)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// `x = (s - s0) / (s2 - s0)`.
    pub fn standardise(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::domain(format!("stress must be finite, got {s}")));
        }
        Ok(self.standardise_unchecked(s))
    }

    fn standardise_unchecked(&self, s: f64) -> f64 {
        if s == self.s0 {
            return 0.0;
        }
        if s == self.s2 {
            return 1.0;
        }
        (s - self.s0) / (self.s2 - self.s0)
    }

    /// Standardised lower test stress.
    pub fn x1(&self) -> f64 {
        self.standardise_unchecked(self.s1)
    }
}

/// Experiment geometry: stresses, change time, censoring time and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    frame: StressFrame,
    tau: f64,
    tc: f64,
    n: usize,
}

impl DesignSpec {
    pub fn new(frame: StressFrame, tau: f64, tc: f64, n: usize) -> Result<Self> {
        if !(tau.is_finite() && tc.is_finite()) {
            return Err(Error::domain("tau and tc must be finite"));
        }
        if !(tau > 0.0 && tau < tc) {
            return Err(Error::domain(format!(
                "require 0 < tau < tc, got tau = {tau}, tc = {tc}"
            )));
        }
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        Ok(Self { frame, tau, tc, n })
    }

    pub fn frame(&self) -> &StressFrame {
        &self.frame
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tc(&self) -> f64 {
        self.tc
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x1(&self) -> f64 {
        self.frame.x1()
    }

    /// Standardised stress in force during `phase`.
    pub fn x(&self, phase: Phase) -> f64 {
        match phase {
            Phase::First => self.frame.x1(),
            Phase::Second => 1.0,
        }
    }

    /// Stress phase at time `t`; the second phase starts at `t = tau` inclusive.
    pub fn phase_at(&self, t: f64) -> Phase {
        if t < self.tau {
            Phase::First
        } else {
            Phase::Second
        }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.frame, tau, self.tc, self.n)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.frame, self.tau, self.tc, n)
    }

    pub fn with_frame(&self, frame: StressFrame) -> Result<Self> {
        Self::new(frame, self.tau, self.tc, self.n)
    }

    pub fn with_tc(&self, tc: f64) -> Result<Self> {
        Self::new(self.frame, self.tau, tc, self.n)
    }
}

/// Stress phase of a step-stress test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    First,
    Second,
}

/// The six natural parameters `(a_j, b_j, beta_j)`, `j = 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: [f64; N_RISKS],
    pub b: [f64; N_RISKS],
    pub beta: [f64; N_RISKS],
}

impl ModelParams {
    pub fn new(a: [f64; 2], b: [f64; 2], beta: [f64; 2]) -> Result<Self> {
        let p = Self { a, b, beta };
        p.validate()?;
        Ok(p)
    }

    /// From the flat layout `(a1, b1, beta1, a2, b2, beta2)`.
    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Self::new([v[0], v[3]], [v[1], v[4]], [v[2], v[5]])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.a[0], self.b[0], self.beta[0], self.a[1], self.b[1], self.beta[1],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..N_RISKS {
            if !(self.a[j].is_finite() && self.b[j].is_finite() && self.beta[j].is_finite()) {
                return Err(Error::domain(format!("parameters of risk {} not finite", j + 1)));
            }
            if self.b[j] >= 0.0 {
                return Err(Error::domain(format!(
                    "slope b{} must be negative, got {}",
                    j + 1,
                    self.b[j]
                )));
            }
            if self.beta[j] <= 0.0 {
                return Err(Error::domain(format!(
                    "shape beta{} must be positive, got {}",
                    j + 1,
                    self.beta[j]
                )));
            }
        }
        Ok(())
    }

    /// Weibull scale `theta_j(x) = exp(a_j + b_j x)`.
    pub fn theta(&self, j: usize, x: f64) -> f64 {
        (self.a[j] + self.b[j] * x).exp()
    }

    /// Swaps the labels of the two risks.
    pub fn swapped(&self) -> Self {
        Self {
            a: [self.a[1], self.a[0]],
            b: [self.b[1], self.b[0]],
            beta: [self.beta[1], self.beta[0]],
        }
    }
}

/// Failure cause, or censoring at the end of the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cause {
    Censored,
    Risk1,
    Risk2,
}

impl Cause {
    /// Parses the numeric label used in data files.
    pub fn from_label(label: i64) -> Result<Self> {
        match label {
            0 => Ok(Cause::Censored),
            1 => Ok(Cause::Risk1),
            2 => Ok(Cause::Risk2),
            other => Err(Error::data(format!("cause must be 0, 1 or 2, got {other}"))),
        }
    }

    pub fn label(self) -> u8 {
        match self {
            Cause::Censored => 0,
            Cause::Risk1 => 1,
            Cause::Risk2 => 2,
        }
    }

    /// Zero-based risk index for failures, `None` when censored.
    pub fn risk(self) -> Option<usize> {
        match self {
            Cause::Censored => None,
            Cause::Risk1 => Some(0),
            Cause::Risk2 => Some(1),
        }
    }

    pub fn from_risk(j: usize) -> Self {
        if j == 0 {
            Cause::Risk1
        } else {
            Cause::Risk2
        }
    }
}

/// One unit's outcome: a failure time with its cause, or censoring at `tc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub cause: Cause,
}

impl Observation {
    pub fn failure(time: f64, j: usize) -> Self {
        Self {
            time,
            cause: Cause::from_risk(j),
        }
    }

    pub fn censored(tc: f64) -> Self {
        Self {
            time: tc,
            cause: Cause::Censored,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.cause != Cause::Censored
    }
}

/// Observations from one step-stress test, kept in order-statistic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    design: DesignSpec,
    observations: Vec<Observation>,
}

impl Dataset {
    /// Validates the observations against `design` and sorts them by time
    /// (censored units last).
    pub fn new(design: DesignSpec, mut observations: Vec<Observation>) -> Result<Self> {
        if observations.len() != design.n() {
            return Err(Error::data(format!(
                "design has n = {} units but {} observations were given",
                design.n(),
                observations.len()
            )));
        }
        for (i, obs) in observations.iter().enumerate() {
            check_observation(&design, obs).map_err(|e| match e {
                Error::Data(msg) => Error::data(format!("observation {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        observations.sort_by(|x, y| {
            x.is_failure()
                .cmp(&y.is_failure())
                .reverse()
                .then(x.time.total_cmp(&y.time))
        });
        Ok(Self {
            design,
            observations,
        })
    }

    pub fn design(&self) -> &DesignSpec {
        &self.design
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn failures(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter().filter(|o| o.is_failure())
    }

    /// Number of failures before `tc`.
    pub fn n_failures(&self) -> usize {
        self.failures().count()
    }

    pub fn n_censored(&self) -> usize {
        self.observations.len() - self.n_failures()
    }

    /// Failure counts indexed by `[risk][phase]`.
    pub fn cell_counts(&self) -> [[usize; 2]; N_RISKS] {
        let mut counts = [[0; 2]; N_RISKS];
        for obs in self.failures() {
            let j = obs.cause.risk().expect("failure has a risk");
            let l = match self.design.phase_at(obs.time) {
                Phase::First => 0,
                Phase::Second => 1,
            };
            counts[j][l] += 1;
        }
        counts
    }

    /// Same observations reinterpreted under another design with the same
    /// `tc` and `n` (for instance a different lower stress).
    pub fn with_design(&self, design: DesignSpec) -> Result<Self> {
        Self::new(design, self.observations.clone())
    }

    /// Swaps the cause labels 1 and 2.
    pub fn relabelled(&self) -> Self {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                time: o.time,
                cause: match o.cause {
                    Cause::Risk1 => Cause::Risk2,
                    Cause::Risk2 => Cause::Risk1,
                    Cause::Censored => Cause::Censored,
                },
            })
            .collect();
        Self {
            design: self.design,
            observations,
        }
    }
}

fn check_observation(design: &DesignSpec, obs: &Observation) -> Result<()> {
    if !obs.time.is_finite() {
        return Err(Error::data("time is not finite"));
    }
    match obs.cause {
        Cause::Censored => {
            if (obs.time - design.tc()).abs() > 1e-9 * design.tc().max(1.0) {
                return Err(Error::data(format!(
                    "censored unit must carry time tc = {}, got {}",
                    design.tc(),
                    obs.time
                )));
            }
        }
        _ => {
            if obs.time <= 0.0 {
                return Err(Error::data(format!(
                    "failure time must be positive, got {}",
                    obs.time
                )));
            }
            if obs.time > design.tc() {
                return Err(Error::data(format!(
                    "failure time {} exceeds tc = {}",
                    obs.time,
                    design.tc()
                )));
            }
        }
    }
    Ok(())
}

/// Standardised stress of `s` within `frame`.
pub fn standardise_stress(s: f64, frame: &StressFrame) -> Result<f64> {
    frame.standardise(s)
}

/// Transformed time `t~_{l,j}(t)`: the time that would have produced the
/// same accumulated damage had the current stress been applied from the start.
pub fn cem_transformed_time(
    params: &ModelParams,
    j: usize,
    design: &DesignSpec,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok(transformed_time(params, j, design, t))
}

pub(crate) fn transformed_time(params: &ModelParams, j: usize, design: &DesignSpec, t: f64) -> f64 {
    let tau = design.tau();
    if t < tau {
        t
    } else {
        let ratio = params.theta(j, 1.0) / params.theta(j, design.x1());
        t - tau + ratio * tau
    }
}

/// Cumulative exposure `psi_{l,j}(t) = t~_{l,j}(t) / theta_j(x_l)`.
pub fn exposure(params: &ModelParams, j: usize, design: &DesignSpec, t: f64) -> f64 {
    let tau = design.tau();
    let theta1 = params.theta(j, design.x1());
    if t < tau {
        t / theta1
    } else {
        tau / theta1 + (t - tau) / params.theta(j, 1.0)
    }
}

/// Cause-specific CDF `G_{l,j}(t)`.
pub fn sub_cdf(params: &ModelParams, j: usize, design: &DesignSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    let psi = exposure(params, j, design, t);
    Ok(-(-psi.powf(params.beta[j])).exp_m1())
}

/// Cause-specific density `g_{l,j}(t)`.
pub fn sub_density(params: &ModelParams, j: usize, design: &DesignSpec, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let beta = params.beta[j];
    let theta = params.theta(j, design.x(design.phase_at(t)));
    let psi = exposure(params, j, design, t);
    beta / theta * psi.powf(beta - 1.0) * (-psi.powf(beta)).exp()
}

/// Overall lifetime CDF `F(t) = 1 - prod_j (1 - G_{l,j}(t))`.
pub fn overall_cdf(params: &ModelParams, design: &DesignSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok(overall_cdf_unchecked(params, design, t))
}

pub(crate) fn overall_cdf_unchecked(params: &ModelParams, design: &DesignSpec, t: f64) -> f64 {
    let h: f64 = (0..N_RISKS)
        .map(|j| exposure(params, j, design, t).powf(params.beta[j]))
        .sum();
    -(-h).exp_m1()
}

const QUANTILE_MAX_NEWTON: usize = 100;
const QUANTILE_STALL_LIMIT: usize = 5;

/// The `p`-th quantile of the lifetime at use stress: the root `t > 0` of
/// `(t e^{-a1})^{beta1} + (t e^{-a2})^{beta2} = -log(1 - p)`.
///
/// Newton-Raphson on `log t` (where the left-hand side is convex and
/// increasing), with bracketed bisection as the fallback.
pub fn use_quantile(params: &ModelParams, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0, 1), got {p}")));
    }
    let target = -(-p).ln_1p();
    // g(u) = sum_j exp(beta_j (u - a_j)), u = log t.
    let g = |u: f64| -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for j in 0..N_RISKS {
            let term = (params.beta[j] * (u - params.a[j])).exp();
            v += term;
            dv += params.beta[j] * term;
        }
        (v, dv)
    };

    let beta_max = params.beta[0].max(params.beta[1]);
    let a_min = params.a[0].min(params.a[1]);
    let mut u = a_min + target.ln() / beta_max;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..QUANTILE_MAX_NEWTON {
        let (v, dv) = g(u);
        let resid = v - target;
        let scaled = resid.abs() / target;
        if scaled <= 1e-14 {
            return Ok(u.exp());
        }
        if !(v.is_finite() && dv.is_finite() && dv > 0.0) {
            break;
        }
        if scaled < best {
            best = scaled;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= QUANTILE_STALL_LIMIT {
                break;
            }
        }
        let step = resid / dv;
        u -= step;
        if step.abs() <= 4.0 * f64::EPSILON * u.abs().max(1.0) {
            let (v, _) = g(u);
            if (v - target).abs() / target <= 1e-12 {
                return Ok(u.exp());
            }
            break;
        }
    }
    quantile_bisection(&g, target)
}

fn quantile_bisection(g: &impl Fn(f64) -> (f64, f64), target: f64) -> Result<f64> {
    let mut lo = (1e-12f64).ln();
    let mut hi = 0.0f64;
    let mut guard = 0;
    while g(lo).0 >= target {
        lo -= std::f64::consts::LN_2 * 8.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::Solver("could not bracket the quantile from below".into()));
        }
    }
    guard = 0;
    while g(hi).0 < target {
        hi += std::f64::consts::LN_2;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Solver("could not bracket the quantile from above".into()));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    if u.is_finite() {
        Ok(u.exp())
    } else {
        Err(Error::Solver("bisection produced a non-finite quantile".into()))
    }
}

/// Residual of the use-stress quantile equation at `t`, relative to its
/// right-hand side.
pub fn quantile_residual(params: &ModelParams, p: f64, t: f64) -> f64 {
    let target = -(-p).ln_1p();
    let lhs: f64 = (0..N_RISKS)
        .map(|j| (t * (-params.a[j]).exp()).powf(params.beta[j]))
        .sum();
    lhs - target
}
