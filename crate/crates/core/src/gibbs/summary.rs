//! Posterior summaries of the global parameters.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::draws::PosteriorDraws;
use super::psrf::psrf;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    /// Split-chain R̂; absent for single-chain fits or constant series.
    pub psrf: Option<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, sd and central 95% interval of a pooled sample.
pub fn describe(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    (mean, sd, quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975))
}

pub fn summarize(draws: &PosteriorDraws) -> Vec<ParamSummary> {
    draws
        .meta
        .param_names
        .iter()
        .enumerate()
        .map(|(idx, name)| {
            let series = draws.series(idx);
            let pooled: Vec<f64> = series.iter().flatten().copied().collect();
            let (mean, sd, q025, q975) = describe(&pooled);
            ParamSummary { parameter: name.clone(), mean, sd, q025, q975, psrf: psrf(&series).ok() }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[ParamSummary], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["parameter", "mean", "sd", "q2.5", "q97.5", "psrf"])?;
    for r in rows {
        out.write_record([
            r.parameter.clone(),
            r.mean.to_string(),
            r.sd.to_string(),
            r.q025.to_string(),
            r.q975.to_string(),
            r.psrf.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_summary_csv(rows: &[ParamSummary], path: impl AsRef<Path>) -> Result<()> {
    write_summary_csv(rows, std::fs::File::create(path)?)
}
