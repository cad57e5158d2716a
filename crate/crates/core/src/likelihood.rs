//! Type-I censored log-likelihood of the step-stress competing-risks model.
//!
//! The log-likelihood (additive constant dropped) splits into one block per
//! risk, each depending only on `(a_j, b_j, beta_j)`:
//!
//! ```text
//! l_j = - sum_{all units} psi_j(t_i)^{beta_j}
//!       + sum_{failures from j} [ log beta_j - log theta_j(x_l) + (beta_j - 1) log psi_j(t_i) ]
//! ```
//!
//! where censored units contribute through `psi_j(t_c)`.

use crate::model::{Dataset, DesignSpec, ModelParams, Observation, N_RISKS};

/// Floor applied to exposures before taking logarithms.
pub const PSI_FLOOR: f64 = 1e-300;

/// Log-likelihood with optional gradient over `(a1, b1, beta1, a2, b2, beta2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikValue {
    pub value: f64,
    pub gradient: Option<[f64; 6]>,
}

/// Log-likelihood and analytic gradient.
pub fn log_lik(params: &ModelParams, data: &Dataset) -> LogLikValue {
    let mut value = 0.0;
    let mut gradient = [0.0; 6];
    for j in 0..N_RISKS {
        let (v, g) = risk_block(params, data.design(), data.observations(), j);
        value += v;
        gradient[3 * j..3 * j + 3].copy_from_slice(&g);
    }
    LogLikValue {
        value,
        gradient: Some(gradient),
    }
}

/// Log-likelihood value only.
pub fn log_lik_value(params: &ModelParams, data: &Dataset) -> f64 {
    (0..N_RISKS)
        .map(|j| risk_block_value(params, data.design(), data.observations(), j))
        .sum()
}

/// Block of the log-likelihood that involves risk `j` only, with its gradient
/// over `(a_j, b_j, beta_j)`.
pub fn risk_block(
    params: &ModelParams,
    design: &DesignSpec,
    observations: &[Observation],
    j: usize,
) -> (f64, [f64; 3]) {
    let beta = params.beta[j];
    let x1 = design.x1();
    let tau = design.tau();
    let theta1 = params.theta(j, x1);
    let theta2 = params.theta(j, 1.0);
    let log_beta = beta.ln();

    let mut value = 0.0;
    let (mut ga, mut gb, mut gbeta) = (0.0, 0.0, 0.0);
    for obs in observations {
        let t = obs.time;
        let (psi, dpsi_db, x_l) = if t < tau {
            let psi = t / theta1;
            (psi, -x1 * psi, x1)
        } else {
            let p1 = tau / theta1;
            let p2 = (t - tau) / theta2;
            (p1 + p2, -x1 * p1 - p2, 1.0)
        };
        let psi_safe = psi.max(PSI_FLOOR);
        let log_psi = psi_safe.ln();
        let psib = if psi > 0.0 { (beta * log_psi).exp() } else { 0.0 };
        value -= psib;
        ga += beta * psib;
        gb -= beta * psib / psi_safe * dpsi_db;
        gbeta -= psib * log_psi;

        if obs.cause.risk() == Some(j) {
            value += log_beta - (params.a[j] + params.b[j] * x_l) + (beta - 1.0) * log_psi;
            ga -= beta;
            gb += -x_l + (beta - 1.0) * dpsi_db / psi_safe;
            gbeta += 1.0 / beta + log_psi;
        }
    }
    (value, [ga, gb, gbeta])
}

fn risk_block_value(
    params: &ModelParams,
    design: &DesignSpec,
    observations: &[Observation],
    j: usize,
) -> f64 {
    let beta = params.beta[j];
    let x1 = design.x1();
    let tau = design.tau();
    let theta1 = params.theta(j, x1);
    let theta2 = params.theta(j, 1.0);
    let log_beta = beta.ln();
    let mut value = 0.0;
    for obs in observations {
        let t = obs.time;
        let (psi, x_l) = if t < tau {
            (t / theta1, x1)
        } else {
            (tau / theta1 + (t - tau) / theta2, 1.0)
        };
        value -= psi.powf(beta);
        if obs.cause.risk() == Some(j) {
            value += log_beta - (params.a[j] + params.b[j] * x_l)
                + (beta - 1.0) * psi.max(PSI_FLOOR).ln();
        }
    }
    value
}

/// Central finite-difference gradient with per-coordinate step
/// `h * (1 + |v_i|)`. Validation aid for the analytic gradient.
pub fn log_lik_grad_fd(params: &ModelParams, data: &Dataset, h: f64) -> [f64; 6] {
    let base = params.to_array();
    let mut out = [0.0; 6];
    for i in 0..6 {
        let step = h * (1.0 + base[i].abs());
        let mut up = base;
        let mut down = base;
        up[i] += step;
        down[i] -= step;
        let f = |v: [f64; 6]| {
            let p = ModelParams {
                a: [v[0], v[3]],
                b: [v[1], v[4]],
                beta: [v[2], v[5]],
            };
            log_lik_value(&p, data)
        };
        out[i] = (f(up) - f(down)) / (2.0 * step);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{overall_cdf, sub_cdf, sub_density, StressFrame};
    use crate::model::Observation;

    fn design(n: usize) -> DesignSpec {
        let frame = StressFrame::from_kelvin(293.0, 320.2136, 353.0).unwrap();
        DesignSpec::new(frame, 3.0, 6.0, n).unwrap()
    }

    fn params() -> ModelParams {
        ModelParams::from_array([2.3, -1.7, 0.8, 1.9, -1.1, 1.6]).unwrap()
    }

    #[test]
    fn all_censored_closed_form() {
        let d = design(4);
        let data = Dataset::new(d, vec![Observation::censored(6.0); 4]).unwrap();
        let p = params();
        let expected: f64 = -4.0
            * (0..2)
                .map(|j| crate::model::exposure(&p, j, &d, 6.0).powf(p.beta[j]))
                .sum::<f64>();
        let got = log_lik(&p, &data).value;
        assert!((got - expected).abs() < 1e-12);
        // survival of all units is exp(l)
        let s = 1.0 - overall_cdf(&p, &d, 6.0).unwrap();
        assert!((got - 4.0 * s.ln()).abs() < 1e-10);
    }

    #[test]
    fn single_failure_matches_joint_density() {
        let d = design(1);
        let p = params();
        for &(t, j) in &[(1.2, 0usize), (4.4, 1usize), (3.0, 0usize)] {
            let data = Dataset::new(d, vec![Observation::failure(t, j)]).unwrap();
            let other = 1 - j;
            let oracle = sub_density(&p, j, &d, t).ln()
                + (1.0 - sub_cdf(&p, other, &d, t).unwrap()).ln();
            assert!((log_lik(&p, &data).value - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_at_unit_shape() {
        let d = design(3);
        let p = ModelParams::from_array([2.0, -1.0, 1.0, 1.5, -0.5, 1.0]).unwrap();
        let data = Dataset::new(
            d,
            vec![
                Observation::failure(1.0, 0),
                Observation::failure(4.0, 1),
                Observation::censored(6.0),
            ],
        )
        .unwrap();
        let g = log_lik(&p, &data).gradient.unwrap();
        let fd = log_lik_grad_fd(&p, &data, 1e-6);
        for i in 0..6 {
            assert!((g[i] - fd[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{i}: {} vs {}", g[i], fd[i]);
        }
    }

    #[test]
    fn censored_only_gradient_in_a() {
        let n = 5;
        let d = design(n);
        let data = Dataset::new(d, vec![Observation::censored(6.0); n]).unwrap();
        let p = params();
        let g = log_lik(&p, &data).gradient.unwrap();
        for j in 0..2 {
            let psi = crate::model::exposure(&p, j, &d, 6.0);
            let expected = n as f64 * p.beta[j] * psi.powf(p.beta[j]);
            assert!((g[3 * j] - expected).abs() < 1e-10 * expected.max(1.0));
            assert!(g[3 * j] > 0.0);
        }
    }

    #[test]
    fn value_only_agrees_with_block() {
        let d = design(3);
        let data = Dataset::new(
            d,
            vec![
                Observation::failure(0.5, 1),
                Observation::failure(3.5, 0),
                Observation::censored(6.0),
            ],
        )
        .unwrap();
        let p = params();
        assert!((log_lik(&p, &data).value - log_lik_value(&p, &data)).abs() < 1e-12);
    }
}
