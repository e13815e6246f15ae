//! BIC, DIC3 and LPML.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::density::{draw_subset, log_density_matrix, marginal_log_density, prepared_for, DensityContext, MarginalDensityOpts};
use super::relabel::relabel;
use crate::data::PanelData;
use crate::error::{Error, Result};
use crate::gibbs::{PosteriorDraws, Prepared};
use crate::kernels::log_sum_exp;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriteriaOpts {
    pub density: MarginalDensityOpts,
    /// Use at most this many (evenly spaced) pooled draws for DIC3 and LPML.
    pub max_draws: Option<usize>,
    /// Relabel the draws before forming the posterior-mean plug-in for BIC.
    pub relabel: bool,
}

impl Default for CriteriaOpts {
    fn default() -> Self {
        CriteriaOpts { density: MarginalDensityOpts::default(), max_draws: None, relabel: true }
    }
}

/// Criteria of one fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub classes: usize,
    pub method: String,
    pub bic: f64,
    pub dic3: f64,
    pub lpml: f64,
    pub n_eff: f64,
    pub free_parameters: usize,
    pub draws_used: usize,
}

/// N_eff = Σ n_i / (1 + (n̄ − 1)·ρ̂), where ρ̂ averages the random-intercept
/// intraclass correlation Ψ_kr[0,0] / (Ψ_kr[0,0] + Σ_k[r,r]) over classes,
/// outcomes and draws.
pub fn effective_sample_size(draws: &PosteriorDraws, prep: &Prepared) -> Result<f64> {
    let n = prep.n();
    if n == 0 {
        return Ok(0.0);
    }
    let total: usize = prep.patients.iter().map(|p| p.n_visits()).sum();
    let n_bar = total as f64 / n as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    for d in draws.all() {
        let p = draws.params_of(d)?;
        for (k, sigma) in p.sigma.iter().enumerate() {
            for (r, psi) in p.psi[k].iter().enumerate() {
                let b = psi.get(0, 0);
                acc += b / (b + sigma.get(r, r));
                count += 1;
            }
        }
    }
    let rho = if count > 0 { acc / count as f64 } else { 0.0 };
    Ok(total as f64 / (1.0 + (n_bar - 1.0) * rho))
}

/// −2 Σ log f̂ + d·ln N_eff.
pub fn bic_value(log_lik: f64, free_parameters: usize, n_eff: f64) -> f64 {
    -2.0 * log_lik + free_parameters as f64 * n_eff.ln()
}

/// DIC3 = −4·mean_g Σᵢ log fᵢ(θ^g) + 2·Σᵢ log f̂ᵢ with f̂ᵢ the draw-averaged density.
pub fn dic3_from(ld: &[Vec<f64>]) -> f64 {
    let g = ld.len() as f64;
    let n = ld.first().map_or(0, Vec::len);
    let mean_dev = ld.iter().map(|row| row.iter().sum::<f64>()).sum::<f64>() / g;
    let fhat: f64 = (0..n)
        .map(|i| {
            let col: Vec<f64> = ld.iter().map(|row| row[i]).collect();
            log_sum_exp(&col) - g.ln()
        })
        .sum();
    -4.0 * mean_dev + 2.0 * fhat
}

/// Per-patient log CPO (harmonic mean of the densities over draws).
pub fn log_cpo(ld: &[Vec<f64>], ids: &[String]) -> Result<Vec<f64>> {
    let g = ld.len() as f64;
    let n = ld.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let neg: Vec<f64> = ld.iter().map(|row| -row[i]).collect();
            if neg.iter().any(|v| *v == f64::INFINITY || v.is_nan()) {
                return Err(Error::ZeroDensity { patient: ids.get(i).cloned().unwrap_or_default() });
            }
            Ok(g.ln() - log_sum_exp(&neg))
        })
        .collect()
}

pub fn lpml_from(ld: &[Vec<f64>], ids: &[String]) -> Result<f64> {
    Ok(log_cpo(ld, ids)?.iter().sum())
}

/// Evaluates every criterion for one fit.
pub fn evaluate(draws: &PosteriorDraws, data: &PanelData, opts: &CriteriaOpts, label: &str) -> Result<ComparisonRow> {
    let prep = prepared_for(draws, data)?;
    let total = draws.total();
    if total == 0 {
        return Err(Error::invalid("no retained draws"));
    }
    let subset = draw_subset(total, opts.max_draws);
    let ld = log_density_matrix(draws, &prep, &subset, &opts.density)?;
    let ids: Vec<String> = prep.patients.iter().map(|p| p.id.clone()).collect();
    let dic3 = dic3_from(&ld);
    let lpml = lpml_from(&ld, &ids)?;

    let relabeled;
    let for_mean = if opts.relabel && draws.meta.classes() > 1 {
        relabeled = relabel(draws)?.draws;
        &relabeled
    } else {
        draws
    };
    let mean = draws.meta.layout.unflatten(&for_mean.mean_params())?;
    let ctx = DensityContext::new(&opts.density, &prep.dims)?;
    let plug_in: f64 = (0..prep.n()).map(|i| marginal_log_density(&prep, i, &mean, &ctx)).sum::<Result<f64>>()?;
    let n_eff = effective_sample_size(draws, &prep)?;
    let d = draws.meta.layout.len();
    Ok(ComparisonRow {
        label: label.to_string(),
        classes: draws.meta.classes(),
        method: draws.meta.spec.method.label().to_string(),
        bic: bic_value(plug_in, d, n_eff),
        dic3,
        lpml,
        n_eff,
        free_parameters: d,
        draws_used: subset.len(),
    })
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_comparison_csv(rows: &[ComparisonRow], path: impl AsRef<Path>) -> Result<()> {
    write_comparison_csv(rows, std::fs::File::create(path)?)
}
