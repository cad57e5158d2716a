//! Command implementations behind the `ssalt` binary.
//!
//! Each command takes a validated [`RunConfig`], returns a serialisable
//! report and, given an output directory, writes its CSV artefacts plus a
//! `summary.json` record. Reports render as 6-significant-digit tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{RunConfig, Scenario};
use crate::design::{optimise_1d, optimise_2d, Criterion, CriterionPoint, CriterionSurface, MonteCarlo};
use crate::error::{Error, Result};
use crate::fixtures::SOLAR_LIGHTING_CSV;
use crate::io::{full, parse_dataset_csv, read_dataset_csv, read_numeric_columns, sig6, write_dataset_csv, write_json, write_table};
use crate::mcmc::{autocorrelation, refit_reasons, sample_posterior, SummaryRow, COLUMN_NAMES};
use crate::mle::{edf_curve, fit_mle, gof_bootstrap, EdfPoint, GofResult, MleFit};
use crate::model::{use_quantile, Dataset};
use crate::prior::{build_prior, elicit_bootstrap, BootstrapSummary, GammaPrior, PriorFlavour};
use crate::simulate::simulate_dataset;

/// Reads `path` under the configured design, or the bundled solar-lighting
/// data when no path is given.
pub fn load_data(cfg: &RunConfig, path: Option<&Path>) -> Result<Dataset> {
    let design = cfg.design()?;
    match path {
        Some(p) => read_dataset_csv(p, design),
        None => parse_dataset_csv(SOLAR_LIGHTING_CSV.as_bytes(), design),
    }
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    let line = |cells: Vec<&str>, s: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  "));
    };
    line(header.to_vec(), &mut s);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut s);
    }
    s
}

const PARAM_NAMES: [&str; 6] = ["a1", "b1", "beta1", "a2", "b2", "beta2"];

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fit: MleFit,
    pub n: usize,
    pub n_failures: usize,
    /// `(p, t_p(x0))` at the MLE.
    pub use_quantiles: Vec<(f64, f64)>,
}

impl FitReport {
    pub fn render(&self) -> String {
        let v = self.fit.params.to_array();
        let rows: Vec<Vec<String>> = PARAM_NAMES.iter().zip(v).map(|(n, x)| vec![n.to_string(), sig6(x)]).collect();
        let mut s = table(&["parameter", "mle"], &rows);
        let _ = writeln!(
            s,
            "loglik {}  converged {}  iterations {}",
            sig6(self.fit.loglik),
            self.fit.converged,
            self.fit.iterations
        );
        for (p, t) in &self.use_quantiles {
            let _ = writeln!(s, "t_p(x0) at p = {p}: {}", sig6(*t));
        }
        s
    }
}

pub fn cmd_fit(data: &Dataset, out: Option<&Path>) -> Result<FitReport> {
    let fit = fit_mle(data, None)?;
    let use_quantiles = [0.01, 0.10, 0.50]
        .iter()
        .map(|&p| Ok((p, use_quantile(&fit.params, p)?)))
        .collect::<Result<_>>()?;
    let report = FitReport {
        fit,
        n: data.design().n(),
        n_failures: data.n_failures(),
        use_quantiles,
    };
    if let Some(out) = out {
        ensure_dir(out)?;
        let rows: Vec<Vec<String>> = PARAM_NAMES
            .iter()
            .zip(fit.params.to_array())
            .map(|(n, x)| vec![n.to_string(), full(x)])
            .collect();
        write_table(&out.join("mle.csv"), &["parameter", "value"], &rows)?;
        write_json(&out.join("summary.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub fit: MleFit,
    pub gof: GofResult,
    pub curve: Vec<EdfPoint>,
}

impl GofReport {
    pub fn render(&self) -> String {
        let g = &self.gof;
        let rows = vec![
            vec!["KS".to_string(), sig6(g.ks_stat), sig6(g.ks_pvalue)],
            vec!["CvM".to_string(), sig6(g.cvm_stat), sig6(g.cvm_pvalue)],
        ];
        let mut s = table(&["test", "statistic", "p_value"], &rows);
        let _ = writeln!(s, "bootstrap replicates {}", g.n_boot);
        s
    }
}

pub fn cmd_gof(cfg: &RunConfig, data: &Dataset, out: Option<&Path>) -> Result<GofReport> {
    let fit = fit_mle(data, None)?;
    let gof = gof_bootstrap(data, &fit, cfg.gof.n_boot, cfg.root_seed().derive(&[0x60f]))?;
    let report = GofReport {
        fit,
        gof,
        curve: edf_curve(data, &fit.params),
    };
    if let Some(out) = out {
        ensure_dir(out)?;
        let rows: Vec<Vec<String>> = report
            .curve
            .iter()
            .map(|p| vec![full(p.time), full(p.empirical), full(p.fitted)])
            .collect();
        write_table(&out.join("edf.csv"), &["time", "empirical", "fitted"], &rows)?;
        write_json(&out.join("summary.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ElicitReport {
    pub fit: MleFit,
    pub summary: BootstrapSummary,
    pub priors: Vec<GammaPrior>,
}

impl ElicitReport {
    pub fn render(&self) -> String {
        let names = ["phi1", "phi2", "phi3"];
        let mut rows = Vec::new();
        for j in 0..2 {
            for (i, n) in names.iter().enumerate() {
                let mut r = vec![
                    format!("{n}{}", j + 1),
                    sig6(self.summary.mean[j][i]),
                    sig6(self.summary.se[j][i]),
                ];
                for pr in &self.priors {
                    r.push(sig6(pr.shape[j][i]));
                    r.push(sig6(pr.rate[j][i]));
                }
                rows.push(r);
            }
        }
        let mut s = table(
            &["quantity", "mean", "se", "alpha_I", "lambda_I", "alpha_II", "lambda_II", "alpha_III", "lambda_III"],
            &rows,
        );
        for qs in &self.summary.quantiles {
            let _ = writeln!(s, "t_p(x0) at p = {}: mean {} se {}", qs.p, sig6(qs.mean), sig6(qs.se));
        }
        s
    }
}

/// A config fragment that selects `prior` explicitly.
fn prior_block(prior: &GammaPrior) -> String {
    #[derive(Serialize)]
    struct Block<'a> {
        prior: Inner<'a>,
    }
    #[derive(Serialize)]
    struct Inner<'a> {
        q: f64,
        gamma: &'a GammaPrior,
    }
    toml::to_string(&Block {
        prior: Inner { q: prior.q, gamma: prior },
    })
    .expect("prior serialises")
}

pub fn cmd_elicit(cfg: &RunConfig, data: &Dataset, out: Option<&Path>) -> Result<ElicitReport> {
    let fit = fit_mle(data, None)?;
    let summary = elicit_bootstrap(data, &fit, cfg.elicit.n_reps, cfg.prior.q, cfg.root_seed().derive(&[0xe11]))?;
    let priors = PriorFlavour::ALL
        .iter()
        .map(|&f| build_prior(&summary, f))
        .collect::<Result<Vec<_>>>()?;
    let report = ElicitReport { fit, summary, priors };
    if let Some(out) = out {
        ensure_dir(out)?;
        for p in &report.priors {
            let label = p.flavour.map_or("custom", PriorFlavour::label);
            fs::write(out.join(format!("prior_{label}.toml")), prior_block(p))?;
        }
        write_json(&out.join("summary.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub x1: f64,
    pub tau: f64,
    pub p: f64,
    pub empty_data: bool,
    pub prior: GammaPrior,
    pub rows: Vec<SummaryRow>,
    pub n_divergent: usize,
    pub n_depth_saturated: usize,
    pub max_rhat: f64,
    /// Reasons the run would fail the convergence gate; empty when it passes.
    pub gate: Vec<String>,
}

impl DiagnoseReport {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![r.name.clone()];
                v.extend([r.mean, r.median, r.sd, r.mad, r.q5, r.q95, r.rhat, r.ess_bulk, r.ess_tail].map(sig6));
                v
            })
            .collect();
        let mut s = table(
            &["quantity", "mean", "median", "sd", "mad", "q5", "q95", "rhat", "ess_bulk", "ess_tail"],
            &rows,
        );
        let _ = writeln!(
            s,
            "divergent {}  max treedepth hits {}  max rhat {}",
            self.n_divergent,
            self.n_depth_saturated,
            sig6(self.max_rhat)
        );
        s
    }
}

fn summary_rows(rows: &[SummaryRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![r.name.clone()];
            v.extend([r.mean, r.median, r.sd, r.mad, r.q5, r.q95, r.rhat, r.ess_bulk, r.ess_tail].map(full));
            v
        })
        .collect()
}

pub fn cmd_diagnose(cfg: &RunConfig, data: &Dataset, out: Option<&Path>) -> Result<DiagnoseReport> {
    let design = cfg.design()?;
    let prior = cfg.prior()?;
    let d = &cfg.diagnose;
    let data = (!d.empty_data).then_some(data);
    let (draws, diag) = sample_posterior(&design, data, &prior, d.p, &cfg.sampler())?;
    let report = DiagnoseReport {
        x1: design.x1(),
        tau: design.tau(),
        p: d.p,
        empty_data: d.empty_data,
        prior,
        rows: draws.summary(&diag),
        n_divergent: diag.n_divergent,
        n_depth_saturated: diag.n_depth_saturated,
        max_rhat: diag
            .quantities
            .iter()
            .filter(|q| q.name != "lp__")
            .map(|q| q.rhat)
            .fold(f64::NEG_INFINITY, f64::max),
        gate: refit_reasons(&draws, &diag),
    };
    if let Some(out) = out {
        ensure_dir(out)?;
        let mut header = vec!["chain", "draw"];
        header.extend(COLUMN_NAMES);
        let rows: Vec<Vec<String>> = (0..draws.n_chains * draws.n_draws)
            .map(|i| {
                let mut r = vec![(i / draws.n_draws).to_string(), (i % draws.n_draws).to_string()];
                r.extend(draws.columns.iter().map(|c| full(c[i])));
                r
            })
            .collect();
        write_table(&out.join("draws.csv"), &header, &rows)?;

        let mut acf = Vec::new();
        for (k, name) in COLUMN_NAMES.iter().enumerate() {
            for (c, chain) in draws.chains(k).iter().enumerate() {
                for (lag, r) in autocorrelation(chain, d.max_lag).iter().enumerate().skip(1) {
                    acf.push(vec![name.to_string(), c.to_string(), lag.to_string(), full(*r)]);
                }
            }
        }
        write_table(&out.join("acf.csv"), &["quantity", "chain", "lag", "acf"], &acf)?;
        write_table(
            &out.join("posterior_summary.csv"),
            &["quantity", "mean", "median", "sd", "mad", "q5", "q95", "rhat", "ess_bulk", "ess_tail"],
            &summary_rows(&report.rows),
        )?;
        write_json(&out.join("summary.json"), &report)?;
    }
    Ok(report)
}

/// One planning search and its surface.
#[derive(Debug, Clone, Serialize)]
pub struct PlanRun {
    pub label: String,
    pub p: f64,
    pub n: usize,
    pub flavour: Option<PriorFlavour>,
    pub surface: CriterionSurface,
}

impl PlanRun {
    /// Smoothed optimum value of `c`.
    pub fn optimal_value(&self, c: Criterion) -> f64 {
        self.surface.optimum(c).value
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub b: usize,
    pub m1: usize,
    pub runs: Vec<PlanRun>,
}

impl PlanReport {
    pub fn render(&self) -> String {
        let mut rows = Vec::new();
        for run in &self.runs {
            for o in &run.surface.optima {
                rows.push(vec![
                    run.label.clone(),
                    o.criterion.label().to_string(),
                    sig6(o.x1),
                    sig6(o.tau),
                    sig6(o.value),
                ]);
            }
        }
        table(&["scenario", "criterion", "x1", "tau", "value"], &rows)
    }
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn write_plan(out: &Path, report: &PlanReport) -> Result<()> {
    ensure_dir(out)?;
    let mut optima = Vec::new();
    for run in &report.runs {
        let tag = file_label(&run.label);
        let raw: Vec<Vec<String>> = run
            .surface
            .points
            .iter()
            .map(|p| {
                let mut r: Vec<String> = [p.x1, p.tau, p.c1_raw, p.c2_raw, p.c1_se, p.c2_se].map(full).to_vec();
                r.extend([p.n_used, p.n_refitted, p.n_discarded].map(|n| n.to_string()));
                r
            })
            .collect();
        write_table(
            &out.join(format!("raw_{tag}.csv")),
            &["x1", "tau", "c1_raw", "c2_raw", "c1_se", "c2_se", "n_used", "n_refitted", "n_discarded"],
            &raw,
        )?;
        let fine: Vec<Vec<String>> = run
            .surface
            .fine
            .iter()
            .map(|s| [s.x1, s.tau, s.c1, s.c2].map(full).to_vec())
            .collect();
        write_table(&out.join(format!("smoothed_{tag}.csv")), &["x1", "tau", "c1", "c2"], &fine)?;
        for o in &run.surface.optima {
            optima.push(vec![
                run.label.clone(),
                o.criterion.label().to_string(),
                full(o.x1),
                full(o.tau),
                full(o.value),
            ]);
        }
    }
    write_table(&out.join("optima.csv"), &["scenario", "criterion", "x1", "tau", "value"], &optima)?;
    write_json(&out.join("summary.json"), report)
}

/// Scenarios of a one-variable run; an empty sweep is a single baseline run.
fn scenarios(cfg: &RunConfig) -> Vec<Scenario> {
    if cfg.planning.scenarios.is_empty() {
        vec![Scenario {
            label: "baseline".into(),
            ..Default::default()
        }]
    } else {
        cfg.planning.scenarios.clone()
    }
}

/// Stream of scenario `s` in a planning run.
fn plan_stream(cfg: &RunConfig, s: usize) -> crate::RngSeed {
    cfg.root_seed().derive(&[0x91a, s as u64])
}

/// One-variable searches over `tau`, one per configured scenario.
pub fn cmd_plan1d(cfg: &RunConfig, out: Option<&Path>) -> Result<PlanReport> {
    let pl = &cfg.planning;
    let truth = cfg.truth()?;
    let sampler = cfg.sampler();
    let mut runs = Vec::new();
    for (s, sc) in scenarios(cfg).into_iter().enumerate() {
        let flavour = sc.flavour.unwrap_or(cfg.prior.flavour);
        let prior = cfg.prior_with(flavour)?;
        let p = sc.p.unwrap_or(pl.p);
        let mut base = cfg.planning_design()?;
        if let Some(x1) = sc.x1 {
            base = base.with_frame(base.frame().with_x1(x1)?)?;
        }
        if let Some(n) = sc.n {
            base = base.with_n(n)?;
        }
        let mc = MonteCarlo {
            prior: &prior,
            truth: &truth,
            p,
            b: pl.b,
            sampler: &sampler,
        };
        let surface = optimise_1d(&base, (pl.tau_range[0], pl.tau_range[1]), pl.m1, &mc, plan_stream(cfg, s))?;
        runs.push(PlanRun {
            label: sc.label,
            p,
            n: base.n(),
            flavour: cfg.prior.gamma.is_none().then_some(flavour),
            surface,
        });
    }
    let report = PlanReport { b: pl.b, m1: pl.m1, runs };
    if let Some(out) = out {
        write_plan(out, &report)?;
    }
    Ok(report)
}

/// Two-variable search over `(x1, tau)`.
pub fn cmd_plan2d(cfg: &RunConfig, out: Option<&Path>) -> Result<PlanReport> {
    let pl = &cfg.planning;
    let truth = cfg.truth()?;
    let sampler = cfg.sampler();
    let prior = cfg.prior()?;
    let base = cfg.planning_design()?;
    let mc = MonteCarlo {
        prior: &prior,
        truth: &truth,
        p: pl.p,
        b: pl.b,
        sampler: &sampler,
    };
    let surface = optimise_2d(
        &base,
        &pl.x1_grid,
        (pl.x1_range[0], pl.x1_range[1]),
        (pl.tau_range[0], pl.tau_range[1]),
        pl.m1,
        &mc,
        plan_stream(cfg, 0),
    )?;
    let report = PlanReport {
        b: pl.b,
        m1: pl.m1,
        runs: vec![PlanRun {
            label: "two-variable".into(),
            p: pl.p,
            n: base.n(),
            flavour: cfg.prior.gamma.is_none().then_some(cfg.prior.flavour),
            surface,
        }],
    };
    if let Some(out) = out {
        write_plan(out, &report)?;
    }
    Ok(report)
}

/// Smooths a precomputed raw grid instead of simulating it. The CSV needs
/// columns `x1,tau,c1_raw,c2_raw`; empty criterion cells mark missing points.
/// Rows must cover the grid `x1` major.
pub fn cmd_plan_raw(cfg: &RunConfig, raw: &Path, out: Option<&Path>) -> Result<PlanReport> {
    let cols = read_numeric_columns(raw, &["x1", "tau", "c1_raw", "c2_raw"])?;
    let need = |c: &[Option<f64>], what: &str| -> Result<Vec<f64>> {
        c.iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::data(format!("line {}: missing {what}", i + 2))))
            .collect()
    };
    let x1 = need(&cols[0], "x1")?;
    let tau = need(&cols[1], "tau")?;
    let mut x1_grid: Vec<f64> = Vec::new();
    let mut tau_grid: Vec<f64> = Vec::new();
    for (&x, &t) in x1.iter().zip(&tau) {
        if !x1_grid.contains(&x) {
            x1_grid.push(x);
        }
        if !tau_grid.contains(&t) {
            tau_grid.push(t);
        }
    }
    let points: Vec<CriterionPoint> = (0..x1.len())
        .map(|i| {
            CriterionPoint::from_values(x1[i], tau[i], cols[2][i].unwrap_or(f64::NAN), cols[3][i].unwrap_or(f64::NAN))
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        let (xi, ti) = (i / tau_grid.len(), i % tau_grid.len());
        if x1_grid.get(xi) != Some(&p.x1) || tau_grid.get(ti) != Some(&p.tau) {
            return Err(Error::data(format!("line {}: raw grid rows must run x1 major over a full grid", i + 2)));
        }
    }
    let pl = &cfg.planning;
    let range = |g: &[f64], cfg_range: [f64; 2]| {
        if g.len() == 1 {
            (g[0], g[0])
        } else {
            (cfg_range[0], cfg_range[1])
        }
    };
    let x1_range = range(&x1_grid, pl.x1_range);
    let tau_range = range(&tau_grid, pl.tau_range);
    let m1 = tau_grid.len();
    let surface = CriterionSurface::from_points(x1_grid, tau_grid, points, x1_range, tau_range)?;
    let report = PlanReport {
        b: 0,
        m1,
        runs: vec![PlanRun {
            label: "raw".into(),
            p: pl.p,
            n: cfg.design.n,
            flavour: None,
            surface,
        }],
    };
    if let Some(out) = out {
        write_plan(out, &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub x1: f64,
    pub tau: f64,
    pub n: usize,
    /// Failures by cause (rows) and phase (columns).
    pub cell_counts: [[usize; 2]; 2],
    pub n_censored: usize,
    pub path: Option<PathBuf>,
}

impl SimulateReport {
    pub fn render(&self) -> String {
        let c = self.cell_counts;
        let rows = vec![
            vec!["1".to_string(), c[0][0].to_string(), c[0][1].to_string()],
            vec!["2".to_string(), c[1][0].to_string(), c[1][1].to_string()],
        ];
        let mut s = table(&["cause", "phase1", "phase2"], &rows);
        let _ = writeln!(s, "censored {} of {}", self.n_censored, self.n);
        if let Some(p) = &self.path {
            let _ = writeln!(s, "written to {}", p.display());
        }
        s
    }
}

/// Simulates one dataset from `planning.truth` under the configured design.
pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<(Dataset, SimulateReport)> {
    let design = cfg.design()?;
    let data = simulate_dataset(&cfg.truth()?, &design, cfg.root_seed().derive(&[0x517]));
    let mut report = SimulateReport {
        x1: design.x1(),
        tau: design.tau(),
        n: design.n(),
        cell_counts: data.cell_counts(),
        n_censored: data.n_censored(),
        path: None,
    };
    if let Some(out) = out {
        ensure_dir(out)?;
        let path = out.join("data.csv");
        write_dataset_csv(fs::File::create(&path)?, &data)?;
        report.path = Some(path);
        write_json(&out.join("summary.json"), &report)?;
    }
    Ok((data, report))
}
