//! Rank-normalised split-chain convergence diagnostics.
//!
//! All functions take a slice of chains of equal length. Constant inputs give
//! `NaN`, which callers treat as a failed diagnostic.

use statrs::distribution::{ContinuousCDF, Normal};

/// Split R-hat: maximum of the bulk (rank-normalised) and tail (folded)
/// variants.
pub fn rhat(chains: &[&[f64]]) -> f64 {
    let split = split_chains(chains);
    if is_constant(&split) {
        return f64::NAN;
    }
    let bulk = rhat_basic(&rank_normalise(&split));
    let med = median(&split.concat());
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|v| (v - med).abs()).collect())
        .collect();
    let tail = rhat_basic(&rank_normalise(&folded));
    bulk.max(tail)
}

/// Bulk effective sample size on rank-normalised split chains.
pub fn ess_bulk(chains: &[&[f64]]) -> f64 {
    let split = split_chains(chains);
    if is_constant(&split) {
        return f64::NAN;
    }
    ess_basic(&rank_normalise(&split))
}

/// Tail effective sample size: the smaller of the ESS of the indicators
/// `x <= q05` and `x <= q95`.
pub fn ess_tail(chains: &[&[f64]]) -> f64 {
    let split = split_chains(chains);
    if is_constant(&split) {
        return f64::NAN;
    }
    let pooled = split.concat();
    let lo = quantile(&pooled, 0.05);
    let hi = quantile(&pooled, 0.95);
    let ind = |cut: f64| -> Vec<Vec<f64>> {
        split
            .iter()
            .map(|c| c.iter().map(|&v| if v <= cut { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    let a = ess_basic(&ind(lo));
    let b = ess_basic(&ind(hi));
    if a.is_nan() || b.is_nan() {
        return f64::NAN;
    }
    a.min(b)
}

/// Classic (non-rank-normalised) split R-hat.
pub fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let vars: Vec<f64> = chains.iter().zip(&means).map(|(c, &mu)| sample_var(c, mu)).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let w = vars.iter().sum::<f64>() / m;
    if w <= 0.0 {
        return f64::NAN;
    }
    let var_hat = (n - 1.0) / n * w + b / n;
    (var_hat / w).sqrt()
}

/// Effective sample size with Geyer's initial monotone sequence estimator.
pub fn ess_basic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    if n < 4 || is_constant(chains) {
        return f64::NAN;
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov_at = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| {
                (0..n - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / nf
            })
            .sum::<f64>()
            / m as f64
    };
    let mean_var = acov_at(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        let grand = means.iter().sum::<f64>() / m as f64;
        var_plus += means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    }
    if var_plus <= 0.0 {
        return f64::NAN;
    }

    let mut rho = vec![0.0; n];
    let mut t = 0;
    let mut rho_even = 1.0;
    let mut rho_odd = 1.0 - (mean_var - acov_at(1)) / var_plus;
    while t + 5 < n && rho_even + rho_odd > 0.0 {
        rho[t] = rho_even;
        rho[t + 1] = rho_odd;
        t += 2;
        rho_even = 1.0 - (mean_var - acov_at(t)) / var_plus;
        rho_odd = 1.0 - (mean_var - acov_at(t + 1)) / var_plus;
    }
    let max_s = t;
    if rho_even > 0.0 {
        rho[max_s] = rho_even;
    }
    // Make the sequence of paired sums monotone.
    let mut t = 1;
    while max_s >= 3 && t <= max_s - 3 {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let mut tau = -1.0 + 2.0 * rho[..max_s].iter().sum::<f64>() + rho.get(max_s + 1).copied().unwrap_or(0.0);
    tau = tau.max(1.0 / total.log10());
    total / tau
}

/// Autocorrelations of a single chain at lags `0..=max_lag`.
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Vec<f64> {
    let n = chain.len();
    let mu = mean(chain);
    let c0: f64 = chain.iter().map(|v| (v - mu).powi(2)).sum();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|lag| {
            if c0 == 0.0 {
                return f64::NAN;
            }
            (0..n - lag).map(|i| (chain[i] - mu) * (chain[i + lag] - mu)).sum::<f64>() / c0
        })
        .collect()
}

/// Splits each chain into two halves; the middle draw of odd-length chains is
/// dropped.
pub fn split_chains(chains: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Pooled ranks (average for ties) mapped through the normal quantile
/// function with a 3/8 offset.
pub fn rank_normalise(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = chains.concat();
    let s = pooled.len();
    let mut idx: Vec<usize> = (0..s).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut k = i;
        while k + 1 < s && pooled[idx[k + 1]] == pooled[idx[i]] {
            k += 1;
        }
        let avg = (i + k) as f64 / 2.0 + 1.0;
        for &j in &idx[i..=k] {
            ranks[j] = avg;
        }
        i = k + 1;
    }
    let normal = Normal::standard();
    let z: Vec<f64> = ranks
        .iter()
        .map(|r| normal.inverse_cdf((r - 0.375) / (s as f64 + 0.25)))
        .collect();
    let mut out = Vec::with_capacity(chains.len());
    let mut offset = 0;
    for c in chains {
        out.push(z[offset..offset + c.len()].to_vec());
        offset += c.len();
    }
    out
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64], mu: f64) -> f64 {
    x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn sd(x: &[f64]) -> f64 {
    sample_var(x, mean(x)).sqrt()
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Median absolute deviation scaled to the normal sd.
pub fn mad(x: &[f64]) -> f64 {
    let med = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&dev)
}

fn is_constant(chains: &[Vec<f64>]) -> bool {
    let first = chains.iter().flat_map(|c| c.first()).next();
    match first {
        None => true,
        Some(&f) => chains.iter().all(|c| c.iter().all(|&v| v == f)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_chain_is_nan() {
        let c = vec![1.0; 100];
        let chains = [c.as_slice(), c.as_slice()];
        assert!(rhat(&chains).is_nan());
        assert!(ess_bulk(&chains).is_nan());
        assert!(ess_tail(&chains).is_nan());
    }

    #[test]
    fn offset_chains_have_large_rhat() {
        let base: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 / 101.0 - 0.5).collect();
        let shifted: Vec<f64> = base.iter().map(|v| v + 5.0 * 0.29).collect();
        assert!(rhat(&[&base, &shifted]) > 1.5);
    }

    #[test]
    fn quantile_interpolates() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
    }

    #[test]
    fn autocorrelation_lag_zero_is_one() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        assert!((autocorrelation(&x, 5)[0] - 1.0).abs() < 1e-15);
    }
}
