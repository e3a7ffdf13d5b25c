//! Kolmogorov–Smirnov tests and small summary statistics.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p: f64,
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`, the Kolmogorov survival
/// function.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form, which converges fast for small λ.
        let y = libm::exp(-core::f64::consts::PI * core::f64::consts::PI / (8.0 * lambda * lambda));
        let mut cdf = 0.0;
        let mut j = 1;
        loop {
            let term = libm::pow(y, ((2 * j - 1) * (2 * j - 1)) as f64);
            cdf += term;
            if term < 1e-17 * cdf.max(1e-300) || j > 50 {
                break;
            }
            j += 1;
        }
        let cdf = libm::sqrt(2.0 * core::f64::consts::PI) / lambda * cdf;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = libm::exp(-2.0 * jf * jf * lambda * lambda);
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Input("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_x − F_y|`, evaluated after
/// each block of tied values, with the asymptotic p-value
/// `Q_KS((√n_e + 0.12 + 0.11/√n_e)·D)`, `n_e = nm/(n+m)`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestOutcome> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Input("two-sample KS needs two nonempty samples".into()));
    }
    let (a, b) = (sorted(xs)?, sorted(ys)?);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = libm::sqrt(n * m / (n + m));
    Ok(TestOutcome { statistic: d, p: ks_p_value(d, en) })
}

/// One-sample Kolmogorov–Smirnov test against the uniform law on `[0, 1]`.
pub fn ks_uniform(xs: &[f64]) -> Result<TestOutcome> {
    if xs.is_empty() {
        return Err(Error::Input("KS test needs a nonempty sample".into()));
    }
    let v = sorted(xs)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(TestOutcome { statistic: d, p: ks_p_value(d, libm::sqrt(n)) })
}

fn ks_p_value(d: f64, en: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    kolmogorov_q((en + 0.12 + 0.11 / en) * d)
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

/// A family of `m` tests passes iff every p-value exceeds `alpha / m`.
pub fn bonferroni_pass(ps: &[f64], alpha: f64) -> bool {
    let m = ps.len().max(1) as f64;
    ps.iter().all(|&p| p > alpha / m)
}
