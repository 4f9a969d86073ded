//! Small statistics helpers for the diagnostic suites.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and standard error of the mean (`NaN` below two samples).
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[derive(Debug, Clone, Serialize)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson chi-square test of counts on `{0, 1, 2, ...}` against the
/// geometric law `P(m) = p (1 − p)^m`. Bins are grown from zero while both
/// the bin and the remaining tail expect at least five observations; the
/// tail forms the last bin.
pub fn geometric_chi_square(samples: &[u64], success_prob: f64) -> GoodnessOfFit {
    let total = samples.len() as f64;
    let q = 1.0 - success_prob;
    let mut expected = Vec::new();
    let mut tail_mass = 1.0;
    loop {
        let k = expected.len() as i32;
        let mass = success_prob * q.powi(k);
        if total * mass < 5.0 || total * (tail_mass - mass) < 5.0 {
            break;
        }
        expected.push(total * mass);
        tail_mass -= mass;
    }
    let cutoff = expected.len() as u64;
    expected.push(total * tail_mass);

    let mut observed = vec![0.0; expected.len()];
    for &m in samples {
        observed[m.min(cutoff) as usize] += 1.0;
    }
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = expected.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| 1.0 - d.cdf(statistic))
        .unwrap_or(f64::NAN);
    GoodnessOfFit {
        statistic,
        degrees_of_freedom: dof,
        p_value,
        bins: expected.len(),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
