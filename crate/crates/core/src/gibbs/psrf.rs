//! Split-chain potential scale reduction factor.

use crate::error::{Error, Result};

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Gelman–Rubin R̂ after splitting every chain into halves (a trailing odd
/// draw is dropped). Needs at least two chains of ten draws each.
pub fn psrf(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::invalid("psrf needs at least two chains"));
    }
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    if len < 10 {
        return Err(Error::invalid("psrf needs at least ten draws per chain"));
    }
    let half = len / 2;
    let mut parts = Vec::with_capacity(2 * chains.len());
    for c in chains {
        parts.push(&c[..half]);
        parts.push(&c[half..2 * half]);
    }
    let stats: Vec<(f64, f64)> = parts.iter().map(|p| mean_var(p)).collect();
    let m = stats.len() as f64;
    let n = half as f64;
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
    if !(w > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m;
    let b = n * stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok((var_plus / w).sqrt())
}
