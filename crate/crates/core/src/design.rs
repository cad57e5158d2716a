//! Preposterior design criteria and grid search over step-stress designs.
//!
//! For a design `D`, `C1(D)` is the expected posterior variance of the
//! use-stress quantile `t_p(x0)` and `C2(D)` the expected posterior variance
//! of `log t_p(x0)`, the expectation being over data simulated from fixed
//! parameter values. Both are estimated by Monte Carlo on a grid of designs,
//! smoothed with a Gaussian Nadaraya-Watson kernel whose bandwidth equals the
//! grid spacing, and minimised on a fine grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::diagnostics::sd;
use crate::mcmc::posterior::{sample_with_refit, FitStatus, SamplerConfig};
use crate::model::{DesignSpec, ModelParams};
use crate::prior::GammaPrior;
use crate::rng::RngSeed;
use crate::simulate::simulate_dataset;

/// Fine-grid size for one-variable searches.
pub const FINE_1D: usize = 500;
/// Fine-grid size `(tau, x1)` for two-variable searches.
pub const FINE_2D: (usize, usize) = (100, 50);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    C1,
    C2,
}

impl Criterion {
    pub const ALL: [Criterion; 2] = [Criterion::C1, Criterion::C2];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::C1 => "C1",
            Criterion::C2 => "C2",
        }
    }
}

/// Monte Carlo criterion estimate at one design. Missing points carry `NaN`
/// criterion values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionPoint {
    pub x1: f64,
    pub tau: f64,
    pub c1_raw: f64,
    pub c2_raw: f64,
    /// Monte Carlo standard errors of the two estimates.
    pub c1_se: f64,
    pub c2_se: f64,
    pub n_used: usize,
    pub n_refitted: usize,
    pub n_discarded: usize,
}

impl CriterionPoint {
    pub fn from_values(x1: f64, tau: f64, c1: f64, c2: f64) -> Self {
        Self {
            x1,
            tau,
            c1_raw: c1,
            c2_raw: c2,
            c1_se: f64::NAN,
            c2_se: f64::NAN,
            n_used: 0,
            n_refitted: 0,
            n_discarded: 0,
        }
    }

    pub fn value(&self, c: Criterion) -> f64 {
        match c {
            Criterion::C1 => self.c1_raw,
            Criterion::C2 => self.c2_raw,
        }
    }

    pub fn is_missing(&self) -> bool {
        !(self.c1_raw.is_finite() && self.c2_raw.is_finite())
    }
}

/// Outcome of one replicate: posterior variances of `t_p` and `log t_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Replicate {
    status: FitStatus,
    var_tp: f64,
    var_log_tp: f64,
}

/// Simulation and sampling settings shared by all grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo<'a> {
    pub prior: &'a GammaPrior,
    pub truth: &'a ModelParams,
    pub p: f64,
    pub b: usize,
    pub sampler: &'a SamplerConfig,
}

fn replicate(design: &DesignSpec, mc: &MonteCarlo, seed: RngSeed) -> Replicate {
    let data = simulate_dataset(mc.truth, design, seed.derive(&[0]));
    let sampler = mc.sampler.with_seed(seed.derive(&[1]));
    match sample_with_refit(design, Some(&data), mc.prior, mc.p, &sampler) {
        Ok((draws, _, status)) => {
            let tp = draws.column("tp").expect("tp column");
            let log_tp = draws.column("log_tp").expect("log_tp column");
            Replicate {
                status,
                var_tp: sd(tp).powi(2),
                var_log_tp: sd(log_tp).powi(2),
            }
        }
        Err(_) => Replicate {
            status: FitStatus::Discarded,
            var_tp: f64::NAN,
            var_log_tp: f64::NAN,
        },
    }
}

fn aggregate(design: &DesignSpec, reps: &[Replicate]) -> CriterionPoint {
    let kept: Vec<&Replicate> = reps.iter().filter(|r| r.status != FitStatus::Discarded).collect();
    let n = kept.len();
    let stats = |f: &dyn Fn(&Replicate) -> f64| -> (f64, f64) {
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let v: Vec<f64> = kept.iter().map(|r| f(r)).collect();
        let m = pairwise_sum(&v) / n as f64;
        let se = if n > 1 { sd(&v) / (n as f64).sqrt() } else { f64::NAN };
        (m, se)
    };
    let (c1, c1_se) = stats(&|r| r.var_tp);
    let (c2, c2_se) = stats(&|r| r.var_log_tp);
    CriterionPoint {
        x1: design.x1(),
        tau: design.tau(),
        c1_raw: c1,
        c2_raw: c2,
        c1_se,
        c2_se,
        n_used: n,
        n_refitted: kept.iter().filter(|r| r.status == FitStatus::Refitted).count(),
        n_discarded: reps.len() - n,
    }
}

/// Estimates `C1` and `C2` at `design` from `mc.b` simulated datasets.
/// Replicate `b` uses the stream `seed.derive(&[b])`. Errors with
/// [`Error::Criterion`] when every replicate is discarded.
pub fn criterion_at(design: &DesignSpec, mc: &MonteCarlo, seed: RngSeed) -> Result<CriterionPoint> {
    check_mc(mc)?;
    let reps: Vec<Replicate> = (0..mc.b)
        .into_par_iter()
        .map(|b| replicate(design, mc, seed.derive(&[b as u64])))
        .collect();
    let point = aggregate(design, &reps);
    if point.n_used == 0 {
        return Err(Error::Criterion(format!(
            "x1 = {}, tau = {}: all {} replicates discarded",
            design.x1(),
            design.tau(),
            mc.b
        )));
    }
    Ok(point)
}

fn check_mc(mc: &MonteCarlo) -> Result<()> {
    if mc.b < 1 {
        return Err(Error::config("design-criteria", "B must be at least 1"));
    }
    if !(mc.p > 0.0 && mc.p < 1.0) {
        return Err(Error::config("design-criteria", format!("p must lie in (0, 1), got {}", mc.p)));
    }
    mc.truth.validate()?;
    mc.sampler.validate()
}

/// Evaluates every design with all replicates flattened into one parallel
/// pool. Design `k` uses seeds `seed.derive(&[k]).derive(&[b])`.
fn evaluate_grid(designs: &[DesignSpec], mc: &MonteCarlo, seed: RngSeed) -> Result<Vec<CriterionPoint>> {
    check_mc(mc)?;
    let jobs: Vec<(usize, usize)> = (0..designs.len())
        .flat_map(|k| (0..mc.b).map(move |b| (k, b)))
        .collect();
    let reps: Vec<Replicate> = jobs
        .par_iter()
        .map(|&(k, b)| replicate(&designs[k], mc, seed.derive(&[k as u64]).derive(&[b as u64])))
        .collect();
    Ok(designs
        .iter()
        .enumerate()
        .map(|(k, d)| aggregate(d, &reps[k * mc.b..(k + 1) * mc.b]))
        .collect())
}

/// `m` equally spaced points over `[lo, hi]`; a single point sits at the
/// midpoint.
pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..m)
            .map(|i| {
                if i == m - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (m - 1) as f64
                }
            })
            .collect(),
    }
}

/// Kernel bandwidth equal to the grid spacing.
pub fn bandwidth(lo: f64, hi: f64, m: usize) -> f64 {
    if m > 1 {
        (hi - lo) / (m - 1) as f64
    } else {
        1.0
    }
}

fn kernel(z: f64) -> f64 {
    (-0.5 * z * z).exp()
}

/// Gaussian Nadaraya-Watson smoother. Non-finite values are skipped.
pub fn smooth_1d(grid: &[f64], values: &[f64], h: f64, query: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &v) in grid.iter().zip(values) {
        if !v.is_finite() {
            continue;
        }
        let w = kernel((query - t) / h);
        num += w * v;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Product-kernel smoother on an `(x1, tau)` grid; `values[i][k]` sits at
/// `(x1_grid[i], tau_grid[k])`.
pub fn smooth_2d(
    x1_grid: &[f64],
    tau_grid: &[f64],
    values: &[Vec<f64>],
    h_x1: f64,
    h_tau: f64,
    query: (f64, f64),
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in x1_grid.iter().enumerate() {
        let wx = kernel((query.0 - x) / h_x1);
        for (k, &t) in tau_grid.iter().enumerate() {
            let v = values[i][k];
            if !v.is_finite() {
                continue;
            }
            let w = wx * kernel((query.1 - t) / h_tau);
            num += w * v;
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub criterion: Criterion,
    pub x1: f64,
    pub tau: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPoint {
    pub x1: f64,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Raw grid, smoothed fine grid and located optima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSurface {
    pub x1_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    /// Raw points, `x1` major.
    pub points: Vec<CriterionPoint>,
    pub h_x1: f64,
    pub h_tau: f64,
    pub fine: Vec<SmoothedPoint>,
    pub optima: Vec<Optimum>,
}

impl CriterionSurface {
    /// Assembles a surface from raw values laid out `x1` major over the two
    /// grids, smooths it and locates the optimum of each criterion on the fine
    /// grid. Ties go to the smaller `x1`, then the smaller `tau`.
    pub fn from_points(
        x1_grid: Vec<f64>,
        tau_grid: Vec<f64>,
        points: Vec<CriterionPoint>,
        x1_range: (f64, f64),
        tau_range: (f64, f64),
    ) -> Result<Self> {
        let (m2, m1) = (x1_grid.len(), tau_grid.len());
        if m1 == 0 || m2 == 0 || points.len() != m1 * m2 {
            return Err(Error::config(
                "design-criteria",
                format!("raw grid has {} points, expected {m2} x {m1}", points.len()),
            ));
        }
        if points.iter().all(|p| p.is_missing()) {
            return Err(Error::Criterion("every grid point: all replicates discarded".into()));
        }
        let h_tau = bandwidth(tau_range.0, tau_range.1, m1);
        let h_x1 = bandwidth(x1_range.0, x1_range.1, m2);
        let grid_of = |c: Criterion| -> Vec<Vec<f64>> {
            (0..m2)
                .map(|i| (0..m1).map(|k| points[i * m1 + k].value(c)).collect())
                .collect()
        };
        let raw1 = grid_of(Criterion::C1);
        let raw2 = grid_of(Criterion::C2);

        let (fine_tau, fine_x1) = if m2 == 1 {
            (fine_axis(&tau_grid, tau_range, FINE_1D), x1_grid.clone())
        } else {
            (
                fine_axis(&tau_grid, tau_range, FINE_2D.0),
                fine_axis(&x1_grid, x1_range, FINE_2D.1),
            )
        };
        let smooth = |raw: &[Vec<f64>], q: (f64, f64)| {
            if m2 == 1 {
                smooth_1d(&tau_grid, &raw[0], h_tau, q.1)
            } else {
                smooth_2d(&x1_grid, &tau_grid, raw, h_x1, h_tau, q)
            }
        };
        let mut fine = Vec::with_capacity(fine_tau.len() * fine_x1.len());
        for &x in &fine_x1 {
            for &t in &fine_tau {
                fine.push(SmoothedPoint {
                    x1: x,
                    tau: t,
                    c1: smooth(&raw1, (x, t)),
                    c2: smooth(&raw2, (x, t)),
                });
            }
        }
        let optima = Criterion::ALL
            .iter()
            .map(|&c| {
                let mut best: Option<Optimum> = None;
                for s in &fine {
                    let v = if c == Criterion::C1 { s.c1 } else { s.c2 };
                    if v.is_finite() && best.is_none_or(|b| v < b.value) {
                        best = Some(Optimum {
                            criterion: c,
                            x1: s.x1,
                            tau: s.tau,
                            value: v,
                        });
                    }
                }
                best.expect("at least one finite point")
            })
            .collect();
        Ok(Self {
            x1_grid,
            tau_grid,
            points,
            h_x1,
            h_tau,
            fine,
            optima,
        })
    }

    pub fn optimum(&self, c: Criterion) -> &Optimum {
        self.optima.iter().find(|o| o.criterion == c).expect("both criteria located")
    }
}

fn fine_axis(grid: &[f64], range: (f64, f64), m: usize) -> Vec<f64> {
    if grid.len() == 1 {
        grid.to_vec()
    } else {
        linspace(range.0, range.1, m)
    }
}

/// One-variable search over `tau` for the lower stress of `base`.
pub fn optimise_1d(
    base: &DesignSpec,
    tau_range: (f64, f64),
    m1: usize,
    mc: &MonteCarlo,
    seed: RngSeed,
) -> Result<CriterionSurface> {
    optimise_2d(base, &[base.x1()], (base.x1(), base.x1()), tau_range, m1, mc, seed)
}

/// Two-variable search over `(x1, tau)`.
pub fn optimise_2d(
    base: &DesignSpec,
    x1_grid: &[f64],
    x1_range: (f64, f64),
    tau_range: (f64, f64),
    m1: usize,
    mc: &MonteCarlo,
    seed: RngSeed,
) -> Result<CriterionSurface> {
    if m1 < 1 || x1_grid.is_empty() {
        return Err(Error::config("design-criteria", "grids must have at least one point"));
    }
    let tau_grid = linspace(tau_range.0, tau_range.1, m1);
    let mut designs = Vec::with_capacity(x1_grid.len() * m1);
    for &x1 in x1_grid {
        let frame = base.frame().with_x1(x1)?;
        for &tau in &tau_grid {
            designs.push(base.with_frame(frame)?.with_tau(tau)?);
        }
    }
    let points = evaluate_grid(&designs, mc, seed)?;
    CriterionSurface::from_points(x1_grid.to_vec(), tau_grid, points, x1_range, tau_range)
}

/// Sum by recursive halving, so the result depends only on the order of `v`.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.05, 5.95, 25);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[24], 5.95);
        assert_eq!(linspace(1.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn constant_values_smooth_to_constant() {
        let g = linspace(0.0, 1.0, 7);
        let v = vec![2.5; 7];
        for q in [0.0, 0.33, 1.0, 4.0] {
            assert!((smooth_1d(&g, &v, 1.0 / 6.0, q) - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn single_point_grid_is_optimum() {
        let p = CriterionPoint::from_values(0.5, 3.0, 1.0, 2.0);
        let s = CriterionSurface::from_points(vec![0.5], vec![3.0], vec![p], (0.5, 0.5), (0.05, 5.95)).unwrap();
        assert_eq!(s.optimum(Criterion::C1).tau, 3.0);
        assert_eq!(s.optimum(Criterion::C2).x1, 0.5);
    }

    #[test]
    fn missing_points_are_skipped() {
        let g = [0.0, 1.0, 2.0];
        let v = [1.0, f64::NAN, 3.0];
        let direct = (kernel(0.5) * 1.0 + kernel(1.5) * 3.0) / (kernel(0.5) + kernel(1.5));
        assert!((smooth_1d(&g, &v, 1.0, 0.5) - direct).abs() < 1e-15);
    }
}
