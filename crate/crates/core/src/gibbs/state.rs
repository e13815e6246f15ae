//! Full sampler state: global parameters plus every per-patient latent.

use super::params::GlobalParams;

/// One complete draw of every unknown.
///
/// Per-patient blocks are flat: `b` and `kappa` are indexed
/// ((i·R + r)·q + g), `tau` (i·q + g), `xi` (i·(K−1) + k), `xi_d` (i·J + j),
/// `xi_m` ((i·R + r)·J + j), and `y[i]` (j·R + r).
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterState {
    pub params: GlobalParams,
    /// Latent class utilities.
    pub xi: Vec<f64>,
    /// 0-based class labels.
    pub classes: Vec<usize>,
    pub b: Vec<f64>,
    pub tau: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Visit augmentation latents.
    pub xi_d: Vec<f64>,
    /// Response augmentation latents (meaningful at visited windows of modeled outcomes).
    pub xi_m: Vec<f64>,
    /// Completed outcomes per patient: observed values, imputations at visited
    /// windows with a missing response, NaN at unvisited windows.
    pub y: Vec<Vec<f64>>,
    /// Class-assignment probabilities from the latest class step (n·K).
    pub class_probs: Vec<f64>,
}

/// Class implied by utilities: the index of the largest positive utility, or
/// the reference class K−1 when none is positive.
pub fn class_from_utilities(xi: &[f64]) -> usize {
    let mut best = xi.len();
    let mut top = 0.0;
    for (k, &v) in xi.iter().enumerate() {
        if v > top {
            best = k;
            top = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_rule() {
        assert_eq!(class_from_utilities(&[0.5]), 0);
        assert_eq!(class_from_utilities(&[-0.5]), 1);
        assert_eq!(class_from_utilities(&[0.2, 0.7]), 1);
        assert_eq!(class_from_utilities(&[-0.2, -0.7]), 2);
        assert_eq!(class_from_utilities(&[]), 0);
    }
}
