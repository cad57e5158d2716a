//! Gradient-based posterior sampling and convergence diagnostics.

pub mod diagnostics;
pub mod nuts;
pub mod posterior;

pub use diagnostics::{autocorrelation, ess_bulk, ess_tail, rhat};
pub use nuts::{run_chain, ChainOutput, DrawStats, LogDensity, NutsSettings};
pub use posterior::{
    diagnose, refit_reasons, sample_posterior, sample_with_refit, Diagnostics, FitStatus, PosteriorDraws,
    PosteriorTarget, QuantityDiagnostics, SamplerConfig, SummaryRow, COLUMN_NAMES,
};
