//! Sampler run options.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    /// Total iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    /// Gauss–Hermite nodes used when the draws are evaluated.
    pub quadrature_nodes: usize,
    pub progress: bool,
    /// Keep per-patient latents (random effects, imputations) with the draws.
    pub store_latents: bool,
    /// Additional thinning applied to stored latents.
    pub latent_thin: usize,
    /// Spread of initial values across chains: chain c scales its random
    /// starting values by `1 + dispersion·c`.
    pub dispersion: f64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        McmcOptions {
            iterations: 2000,
            burn_in: 1000,
            thin: 1,
            chains: 1,
            seed: 1,
            quadrature_nodes: 21,
            progress: false,
            store_latents: true,
            latent_thin: 1,
            dispersion: 0.5,
        }
    }
}

impl McmcOptions {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::invalid("iterations must exceed burn-in"));
        }
        if self.thin == 0 || self.latent_thin == 0 {
            return Err(Error::invalid("thinning intervals must be at least 1"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("at least one chain is required"));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether 0-based iteration `it` is kept.
    pub fn keeps(&self, it: usize) -> bool {
        it >= self.burn_in && (it + 1 - self.burn_in).is_multiple_of(self.thin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_count_matches_keeps() {
        for (iters, burn, thin) in [(2000, 1000, 1), (30, 10, 3), (31, 10, 4), (5, 0, 2)] {
            let o = McmcOptions { iterations: iters, burn_in: burn, thin, ..McmcOptions::default() };
            let kept = (0..iters).filter(|&i| o.keeps(i)).count();
            assert_eq!(kept, o.retained());
        }
    }

    #[test]
    fn rejects_bad_options() {
        let o = McmcOptions { iterations: 10, burn_in: 10, ..McmcOptions::default() };
        assert!(o.validate().is_err());
        let o = McmcOptions { thin: 0, ..McmcOptions::default() };
        assert!(o.validate().is_err());
    }
}
