//! Reference computations written directly from the model formulas, kept
//! apart from the library code they check.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ssalt::mcmc::{LogDensity, PosteriorTarget};
use ssalt::{DesignSpec, ModelParams, StressFrame};

/// Use-stress quantile by bisection on `log t` of
/// `1 - exp(-sum_j (t e^{-a_j})^{beta_j}) = p`.
pub fn quantile_bisection(params: &ModelParams, p: f64) -> f64 {
    let target = -(1.0 - p).ln();
    let h = |t: f64| -> f64 {
        (0..2)
            .map(|j| (t * (-params.a[j]).exp()).powf(params.beta[j]))
            .sum()
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while h(lo.exp()) > target {
        lo *= 2.0;
    }
    while h(hi.exp()) < target {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Cumulative hazard of risk `j` at `t` under the cumulative exposure model.
pub fn cum_hazard(params: &ModelParams, design: &DesignSpec, j: usize, t: f64) -> f64 {
    let th = |x: f64| (params.a[j] + params.b[j] * x).exp();
    let (x1, tau) = (design.x1(), design.tau());
    let psi = if t < tau { t / th(x1) } else { tau / th(x1) + (t - tau) / th(1.0) };
    psi.powf(params.beta[j])
}

/// Hazard rate of risk `j` at `t`.
pub fn hazard(params: &ModelParams, design: &DesignSpec, j: usize, t: f64) -> f64 {
    let th = |x: f64| (params.a[j] + params.b[j] * x).exp();
    let (x1, tau) = (design.x1(), design.tau());
    let (psi, theta) = if t < tau {
        (t / th(x1), th(x1))
    } else {
        (tau / th(x1) + (t - tau) / th(1.0), th(1.0))
    };
    params.beta[j] / theta * psi.powf(params.beta[j] - 1.0)
}

pub fn overall_cdf_oracle(params: &ModelParams, design: &DesignSpec, t: f64) -> f64 {
    1.0 - (-(cum_hazard(params, design, 0, t) + cum_hazard(params, design, 1, t))).exp()
}

/// `P(failure from risk j before tc)`: the integral of
/// `h_j(t) exp(-H_1(t) - H_2(t))` over `(0, tc)`, by composite Gauss-Legendre
/// on each stress phase.
pub fn cause_probability(params: &ModelParams, design: &DesignSpec, j: usize) -> f64 {
    let f = |t: f64| {
        hazard(params, design, j, t) * (-(cum_hazard(params, design, 0, t) + cum_hazard(params, design, 1, t))).exp()
    };
    // substitute t = lo + (hi - lo) s^2 near zero to tame the t^{beta-1} singularity
    let phase = |lo: f64, hi: f64, squash: bool| -> f64 {
        let g = |s: f64| {
            if squash {
                2.0 * s * (hi - lo) * f(lo + (hi - lo) * s * s)
            } else {
                (hi - lo) * f(lo + (hi - lo) * s)
            }
        };
        gauss_legendre(&g, 0.0, 1.0, 4000)
    };
    phase(0.0, design.tau(), true) + phase(design.tau(), design.tc(), false)
}

fn gauss_legendre(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [0.0, -0.5384693101056831, 0.5384693101056831, -0.906179845938664, 0.906179845938664];
    const WEIGHTS: [f64; 5] = [
        0.5688888888888889,
        0.47862867049936647,
        0.47862867049936647,
        0.23692688505618908,
        0.23692688505618908,
    ];
    let w = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = lo + (k as f64 + 0.5) * w;
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(x, wt)| wt * f(mid + 0.5 * w * x))
                .sum::<f64>()
                * 0.5
                * w
        })
        .sum()
}

/// Direct weighted average with Gaussian weights.
pub fn brute_1d(grid: &[f64], values: &[f64], h: f64, q: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, v) in grid.iter().zip(values) {
        if v.is_nan() {
            continue;
        }
        let w = (-0.5 * ((q - x) / h).powi(2)).exp();
        num += w * v;
        den += w;
    }
    num / den
}

pub fn brute_2d(x1: &[f64], tau: &[f64], values: &[Vec<f64>], h1: f64, ht: f64, q: (f64, f64)) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, x) in x1.iter().enumerate() {
        for (k, t) in tau.iter().enumerate() {
            let v = values[i][k];
            if v.is_nan() {
                continue;
            }
            let w = (-0.5 * ((q.0 - x) / h1).powi(2) - 0.5 * ((q.1 - t) / ht).powi(2)).exp();
            num += w * v;
            den += w;
        }
    }
    num / den
}

/// Central differences of the log target with step `h (1 + |u_i|)`.
pub fn fd_gradient(target: &PosteriorTarget, u: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; u.len()];
    let mut scratch = vec![0.0; u.len()];
    for i in 0..u.len() {
        let step = h * (1.0 + u[i].abs());
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[i] += step;
        dn[i] -= step;
        g[i] = (target.log_density_grad(&up, &mut scratch) - target.log_density_grad(&dn, &mut scratch)) / (2.0 * step);
    }
    g
}

/// Parameters drawn from a box that keeps both risks active on `(0, 6)`.
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let a = [rng.random_range(1.0..5.0), rng.random_range(0.5..3.5)];
    let b = [rng.random_range(-5.0..-0.5), rng.random_range(-3.0..-0.3)];
    let beta = [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)];
    ModelParams::new(a, b, beta).unwrap()
}

pub fn random_design(rng: &mut ChaCha8Rng, n: usize) -> DesignSpec {
    let frame = StressFrame::from_kelvin(293.0, 320.0, 353.0)
        .unwrap()
        .with_x1(rng.random_range(0.05..0.95))
        .unwrap();
    DesignSpec::new(frame, rng.random_range(0.3..5.7), 6.0, n).unwrap()
}
