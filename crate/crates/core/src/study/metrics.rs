//! Replication metrics and class-averaged effects.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gibbs::{describe, GlobalParams, PosteriorDraws};
use crate::kernels::{gauss_legendre, Rule, CLASS_PROB_NODES};
use crate::simulator::{marginal_class_probabilities, weighted_effect};

/// Posterior mean and equal-tailed 95% interval of one quantity in one fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Estimate {
    pub fn from_draws(values: &[f64]) -> Estimate {
        let (mean, _, lower, upper) = describe(values);
        Estimate { mean, lower, upper }
    }
}

/// Bias, MSE, coverage and mean interval length over replications.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric {
    pub bias: f64,
    pub mse: f64,
    pub coverage: f64,
    pub length: f64,
}

pub fn metric(truth: f64, estimates: &[Estimate]) -> Metric {
    let n = estimates.len() as f64;
    if estimates.is_empty() {
        return Metric { bias: f64::NAN, mse: f64::NAN, coverage: f64::NAN, length: f64::NAN };
    }
    let bias = estimates.iter().map(|e| e.mean - truth).sum::<f64>() / n;
    let mse = estimates.iter().map(|e| (e.mean - truth).powi(2)).sum::<f64>() / n;
    let coverage = estimates.iter().filter(|e| e.lower <= truth && truth <= e.upper).count() as f64 / n;
    let length = estimates.iter().map(|e| e.upper - e.lower).sum::<f64>() / n;
    Metric { bias, mse, coverage, length }
}

/// Class-specific (intercept, slope) of outcome r in class k: (η_rk, β_rk).
pub fn class_coefficient(params: &GlobalParams, r: usize, k: usize, slope: bool) -> f64 {
    if slope {
        params.beta[r][k][0]
    } else {
        params.eta[r][k][0]
    }
}

/// Class-averaged intercept and slope per outcome in one draw:
/// (1/n) Σᵢ Σₖ π_ik(δ) (η_rk, β_rk). Returned as `[r][intercept, slope]`.
pub fn marginal_effects_of(params: &GlobalParams, w: &[Vec<f64>], legendre: &Rule<f64>) -> Vec<[f64; 2]> {
    let kk = params.sigma.len();
    let mut mean_probs = vec![0.0; kk];
    for wi in w {
        for (m, p) in mean_probs.iter_mut().zip(marginal_class_probabilities(wi, &params.delta, legendre)) {
            *m += p;
        }
    }
    mean_probs.iter_mut().for_each(|m| *m /= w.len().max(1) as f64);
    (0..params.beta.len())
        .map(|r| {
            let pick = |slope: bool| -> f64 {
                let values: Vec<f64> = (0..kk).map(|k| class_coefficient(params, r, k, slope)).collect();
                weighted_effect(&mean_probs, &values)
            };
            [pick(false), pick(true)]
        })
        .collect()
}

/// Posterior summaries of the class-averaged effects, `[r][intercept, slope]`.
pub fn marginal_effects(draws: &PosteriorDraws, w: &[Vec<f64>]) -> Result<Vec<[Estimate; 2]>> {
    let legendre = gauss_legendre(CLASS_PROB_NODES)?;
    let rr = draws.meta.layout.dims.outcomes;
    let mut traces = vec![[Vec::new(), Vec::new()]; rr];
    for d in draws.all() {
        let eff = marginal_effects_of(&draws.params_of(d)?, w, &legendre);
        for r in 0..rr {
            traces[r][0].push(eff[r][0]);
            traces[r][1].push(eff[r][1]);
        }
    }
    Ok(traces.iter().map(|t| [Estimate::from_draws(&t[0]), Estimate::from_draws(&t[1])]).collect())
}

/// Minimum, quartiles and maximum (linear interpolation).
pub fn five_numbers(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| crate::gibbs::quantile_sorted(&v, p))
}
