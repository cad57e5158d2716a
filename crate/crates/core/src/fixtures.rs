//! The bundled solar-lighting step-stress dataset and the reference values
//! derived from it.
//!
//! 35 units start at 293 K (the use temperature), move to 353 K at
//! `tau = 5` and are censored at `tc = 6` (hundreds of hours). Cause 1 is a
//! capacitor failure and cause 2 a controller failure.

use crate::error::Result;
use crate::io::parse_dataset_csv;
use crate::model::{Dataset, DesignSpec, ModelParams, StressFrame};
use crate::prior::{build_prior, BootstrapSummary, GammaPrior, PriorFlavour, QuantileSummary};

/// The dataset in the `time,cause` CSV schema.
pub const SOLAR_LIGHTING_CSV: &str = include_str!("../data/solar_lighting.csv");

pub const USE_KELVIN: f64 = 293.0;
pub const HIGH_KELVIN: f64 = 353.0;
/// Lower test temperature at `x1 = 0.5`.
pub const MID_KELVIN: f64 = 320.2136;

/// Lower test temperatures at `x1 = 0.1, 0.2, ..., 0.9`.
pub const LOWER_STRESS_GRID_KELVIN: [f64; 9] = [
    298.0663, 303.3109, 308.7433, 314.3739, 320.2136, 326.2744, 332.5691, 339.1115, 345.9164,
];

/// Maximum likelihood estimates `(a1, b1, beta1, a2, b2, beta2)` on the bundled data.
pub const REFERENCE_MLE: [f64; 6] = [4.5064, -4.7131, 0.7692, 2.0410, -1.2277, 1.5321];

/// Bootstrap means and standard errors of `phi`, indexed `[risk][component]`.
pub const REFERENCE_PHI_MEAN: [[f64; 3]; 2] = [[0.1634, 4.2805, 1.2006], [0.1527, 1.4025, 1.6989]];
pub const REFERENCE_PHI_SE: [[f64; 3]; 2] = [[0.3705, 1.2737, 1.2724], [0.1550, 0.5039, 0.4604]];

/// Bootstrap `(p, mean, se)` of the use-stress quantiles.
pub const REFERENCE_QUANTILES: [(f64, f64, f64); 3] =
    [(0.01, 0.2662, 0.1914), (0.10, 1.5195, 0.4804), (0.50, 5.3893, 0.9250)];

/// Reference gamma hyperparameters `(shape, rate)` for Priors I, II and III,
/// indexed `[flavour][risk][component]`.
pub const REFERENCE_PRIOR_TABLE: [[[(f64, f64); 3]; 2]; 3] = [
    [
        [(0.195, 1.192), (11.290, 2.637), (0.889, 0.741)],
        [(0.970, 6.354), (7.748, 5.526), (13.606, 8.012)],
    ],
    [
        [(0.086, 0.530), (5.018, 1.172), (0.395, 0.329)],
        [(0.431, 2.824), (3.444, 2.456), (6.047, 3.561)],
    ],
    [
        [(0.086, 0.530), (10.501, 1.696), (0.395, 0.329)],
        [(0.431, 2.824), (8.153, 3.778), (6.047, 3.561)],
    ],
];

/// Stress frame of the original test: first phase at the use temperature.
pub fn solar_lighting_frame() -> StressFrame {
    StressFrame::from_kelvin(USE_KELVIN, USE_KELVIN, HIGH_KELVIN).expect("valid frame")
}

pub fn solar_lighting_design() -> DesignSpec {
    DesignSpec::new(solar_lighting_frame(), 5.0, 6.0, 35).expect("valid design")
}

/// The bundled dataset under its original design.
pub fn solar_lighting() -> Dataset {
    parse_dataset_csv(SOLAR_LIGHTING_CSV.as_bytes(), solar_lighting_design())
        .expect("bundled dataset parses")
}

/// Frame with the lower stress at `x1 = 0.5` (320.2136 K).
pub fn midpoint_frame() -> StressFrame {
    StressFrame::from_kelvin(USE_KELVIN, MID_KELVIN, HIGH_KELVIN).expect("valid frame")
}

pub fn reference_mle() -> ModelParams {
    ModelParams::from_array(REFERENCE_MLE).expect("valid parameters")
}

/// The reference bootstrap summary, tagged with the `q` it is to be read at.
pub fn reference_bootstrap_summary(q: f64) -> BootstrapSummary {
    BootstrapSummary {
        q,
        mean: REFERENCE_PHI_MEAN,
        se: REFERENCE_PHI_SE,
        n_valid: 1000,
        quantiles: REFERENCE_QUANTILES
            .iter()
            .map(|&(p, mean, se)| QuantileSummary { p, mean, se })
            .collect(),
    }
}

/// Prior I, II or III built from the reference bootstrap summary.
pub fn reference_prior(flavour: PriorFlavour, q: f64) -> Result<GammaPrior> {
    build_prior(&reference_bootstrap_summary(q), flavour)
}
