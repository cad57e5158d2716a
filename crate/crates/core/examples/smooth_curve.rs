//! Nadaraya-Watson smoothing of a noisy criterion curve with a Gaussian
//! kernel whose bandwidth is the grid spacing.
//!
//! ```bash
//! cargo run --release --example smooth_curve
//! ```

use rand::Rng;
use ssalt::design::{bandwidth, linspace, smooth_1d, FINE_1D};
use ssalt::RngSeed;

fn main() {
    let (lo, hi, m) = (0.05, 5.95, 25);
    let grid = linspace(lo, hi, m);
    let h = bandwidth(lo, hi, m);
    let mut rng = RngSeed::new(3).rng();
    let noisy: Vec<f64> = grid
        .iter()
        .map(|t| 0.3 + 0.02 * (t - 3.5).powi(2) + 0.003 * rng.random::<f64>())
        .collect();

    let fine = linspace(lo, hi, FINE_1D);
    let (best, value) = fine
        .iter()
        .map(|&t| (t, smooth_1d(&grid, &noisy, h, t)))
        .fold((f64::NAN, f64::INFINITY), |acc, (t, v)| if v < acc.1 { (t, v) } else { acc });
    println!("h = {h:.4}; smoothed minimum at tau = {best:.3} ({value:.4}), true minimiser 3.5");
}
