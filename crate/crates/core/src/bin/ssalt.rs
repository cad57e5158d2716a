use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssalt::cli;
use ssalt::config::RunConfig;

/// Bayesian planning of simple step-stress accelerated life tests with two
/// Weibull competing risks. Times are in hundreds of hours.
#[derive(Parser)]
#[command(name = "ssalt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled planning scenario (baseline, sa1..sa4, two-variable); ignored with --config
    #[arg(long, global = true)]
    preset: Option<String>,
    /// `time,cause` CSV; defaults to the bundled solar-lighting data
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Directory for CSV artefacts and summary.json
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum likelihood fit
    Fit,
    /// EDF goodness of fit with bootstrap p-values
    Gof,
    /// Bootstrap prior elicitation (Priors I, II and III)
    Elicit,
    /// One posterior run with convergence diagnostics
    Diagnose,
    /// Optimal change time at a fixed lower stress
    Plan1d {
        /// Smooth a precomputed raw grid instead of simulating one
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Joint optimum over lower stress and change time
    Plan2d {
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Simulate a dataset from the planning truth
    Simulate,
}

fn run(args: Cli) -> ssalt::Result<String> {
    let c = args.common;
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .expect("thread pool is configured once");
    }
    let out = c.out.as_deref();
    let data = || cli::load_data(&cfg, c.data.as_deref());
    Ok(match args.command {
        Command::Fit => cli::cmd_fit(&data()?, out)?.render(),
        Command::Gof => cli::cmd_gof(&cfg, &data()?, out)?.render(),
        Command::Elicit => cli::cmd_elicit(&cfg, &data()?, out)?.render(),
        Command::Diagnose => cli::cmd_diagnose(&cfg, &data()?, out)?.render(),
        Command::Plan1d { raw: Some(raw) } | Command::Plan2d { raw: Some(raw) } => {
            cli::cmd_plan_raw(&cfg, &raw, out)?.render()
        }
        Command::Plan1d { raw: None } => cli::cmd_plan1d(&cfg, out)?.render(),
        Command::Plan2d { raw: None } => cli::cmd_plan2d(&cfg, out)?.render(),
        Command::Simulate => cli::cmd_simulate(&cfg, out)?.1.render(),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
