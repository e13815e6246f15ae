//! Marginal (class-averaged) intercepts and slopes.

use serde::{Deserialize, Serialize};

use super::scenario::GenerativeConfig;
use crate::error::{Error, Result};
use crate::kernels::{gauss_legendre, CLASS_PROB_NODES, probit_class_probabilities, std_normal, std_normal_cdf, RngStream, Rule};

/// Per-outcome marginal intercept and slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffects {
    pub intercept: Vec<f64>,
    pub slope: Vec<f64>,
}

/// Class probabilities used for marginal effects.
///
/// The reference-class utility difference carries unit-variance noise on each
/// side, so with K = 2 the class-1 probability is Φ(wδ/√2). For K > 2 the same
/// scaling is applied to every utility mean before the multinomial-probit
/// probabilities are evaluated by quadrature.
pub fn marginal_class_probabilities(w: &[f64], delta: &[Vec<f64>], legendre: &Rule<f64>) -> Vec<f64> {
    let means: Vec<f64> = delta
        .iter()
        .map(|d| d.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / std::f64::consts::SQRT_2)
        .collect();
    if means.len() == 1 {
        let p = std_normal_cdf(means[0]);
        return vec![p, 1.0 - p];
    }
    if means.is_empty() {
        return vec![1.0];
    }
    probit_class_probabilities(&means, legendre)
}

/// Σ_k probs[k]·values[k].
pub fn weighted_effect(probs: &[f64], values: &[f64]) -> f64 {
    probs.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Monte Carlo average over w ~ N(0, 1) of the class-weighted truth.
pub fn marginal_truth(cfg: &GenerativeConfig, mc_draws: usize, seed: u64) -> Result<MarginalEffects> {
    if mc_draws < 100_000 {
        return Err(Error::invalid(format!("marginal truth needs at least 1e5 draws, got {mc_draws}")));
    }
    cfg.validate()?;
    let legendre = gauss_legendre(CLASS_PROB_NODES)?;
    let delta: Vec<Vec<f64>> = cfg.delta.iter().map(|d| d.to_vec()).collect();
    let k = cfg.classes();
    let mut mean_probs = vec![0.0; k];
    let mut rng = RngStream::new(seed, u64::MAX);
    for _ in 0..mc_draws {
        let w = [1.0, std_normal(&mut rng)];
        let p = marginal_class_probabilities(&w, &delta, &legendre);
        for (m, v) in mean_probs.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean_probs.iter_mut().for_each(|m| *m /= mc_draws as f64);
    let pick = |r: usize, g: usize| -> f64 {
        let vals: Vec<f64> = cfg.beta[r].iter().map(|b| b[g]).collect();
        weighted_effect(&mean_probs, &vals)
    };
    let r = cfg.outcomes();
    Ok(MarginalEffects { intercept: (0..r).map(|r| pick(r, 0)).collect(), slope: (0..r).map(|r| pick(r, 1)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::scenario::{scenario_config, Scenario};
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_weights() {
        assert_abs_diff_eq!(weighted_effect(&[0.6, 0.4], &[-0.25, -1.0]), -0.55, epsilon = 1e-15);
    }

    #[test]
    fn zero_delta_is_uniform() {
        let gl = gauss_legendre(64).unwrap();
        let p = marginal_class_probabilities(&[1.0, 0.7], &[vec![0.0, 0.0]], &gl);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn s0_and_s1_truth() {
        let s0 = marginal_truth(&scenario_config(Scenario::S0), 200_000, 3).unwrap();
        assert_abs_diff_eq!(s0.intercept[0], -0.582, epsilon = 0.01);
        assert_abs_diff_eq!(s0.slope[1], 0.444, epsilon = 0.01);
        let s1 = marginal_truth(&scenario_config(Scenario::S1), 200_000, 3).unwrap();
        assert_abs_diff_eq!(s1.slope[1], 0.554, epsilon = 0.01);
        // closed form: E_w Φ((0.25 + w)/√2) = Φ(0.25/√3)
        let p1 = std_normal_cdf(0.25 / 3f64.sqrt());
        assert_abs_diff_eq!(s0.intercept[0], -0.25 * p1 - (1.0 - p1), epsilon = 0.003);
    }

    #[test]
    fn too_few_draws() {
        assert!(marginal_truth(&scenario_config(Scenario::S0), 10, 1).is_err());
    }
}
