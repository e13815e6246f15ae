//! Generative configurations and the named study scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{GlobalParams, ResponseParams, VisitParams};
use crate::kernels::SymMatrix;

/// Parameters of the data-generating model (random intercepts, linear time in
/// the standardized window index, w ~ N(0, 1), u ≡ 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerativeConfig {
    pub windows: usize,
    /// Class-model coefficients on (1, w) for classes 1..K−1; class K is the reference.
    pub delta: Vec<[f64; 2]>,
    /// Non-centered (intercept, slope) per outcome r and class k: `beta[r][k]`.
    pub beta: Vec<Vec<[f64; 2]>>,
    /// Within-window outcome covariance per class.
    pub sigma: Vec<SymMatrix<f64>>,
    /// Random-intercept variance per class and outcome: `psi[k][r]`.
    pub psi: Vec<Vec<f64>>,
    /// Visit-model (intercept, slope) per class.
    pub phi: Vec<[f64; 2]>,
    /// Visit random-intercept variance per class.
    pub omega: Vec<f64>,
    /// Response-model (intercept, slope) per outcome and class; `None` means the
    /// outcome is always recorded at a visit.
    pub lambda: Vec<Option<Vec<[f64; 2]>>>,
    /// Response random-intercept variance per outcome and class.
    pub theta: Vec<Option<Vec<f64>>>,
}

impl GenerativeConfig {
    pub fn classes(&self) -> usize {
        self.delta.len() + 1
    }

    pub fn outcomes(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.classes();
        let r = self.outcomes();
        let bad = |m: &str| Err(Error::invalid(format!("generative config: {m}")));
        if self.windows < 2 {
            return bad("at least two windows are needed for a time slope");
        }
        if r == 0 || self.beta.iter().any(|b| b.len() != k) {
            return bad("beta must hold one (intercept, slope) per outcome and class");
        }
        if self.sigma.len() != k || self.sigma.iter().any(|s| s.dim() != r || !s.is_positive_definite()) {
            return bad("sigma must be R×R positive definite per class");
        }
        if self.psi.len() != k || self.psi.iter().any(|p| p.len() != r || p.iter().any(|v| !(*v >= 0.0))) {
            return bad("psi must hold a nonnegative variance per class and outcome");
        }
        if self.phi.len() != k || self.omega.len() != k || self.omega.iter().any(|v| !(*v >= 0.0)) {
            return bad("phi and omega need one entry per class");
        }
        if self.lambda.len() != r || self.theta.len() != r {
            return bad("lambda and theta need one entry per outcome");
        }
        for (l, t) in self.lambda.iter().zip(&self.theta) {
            match (l, t) {
                (None, None) => {}
                (Some(l), Some(t)) if l.len() == k && t.len() == k && t.iter().all(|v| *v >= 0.0) => {}
                _ => return bad("lambda and theta must both be set (one entry per class) or both unset"),
            }
        }
        let finite = self.delta.iter().flatten().chain(self.beta.iter().flatten().flatten()).chain(self.phi.iter().flatten());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return bad("coefficients must be finite");
        }
        Ok(())
    }
}

/// Named scenarios of the simulation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    S0,
    S1,
    S2,
    S3,
    S4,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::S0, Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S0" => Ok(Scenario::S0),
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            "S4" => Ok(Scenario::S4),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

impl GenerativeConfig {
    /// The generating values in the sampler's centered parametrization (linear
    /// time, one random intercept, u ≡ 1): η = intercept, β = slope, Ψ = ψ.
    /// `visit` and `response` select which missingness blocks are instantiated.
    pub fn centered_params(&self, visit: bool, response: &[bool]) -> Result<GlobalParams> {
        self.validate()?;
        if response.len() != self.outcomes() {
            return Err(Error::invalid("one response flag per outcome is required"));
        }
        let one = |v: f64| SymMatrix::from_diagonal(&[v]);
        let mut resp = Vec::with_capacity(response.len());
        for (r, &on) in response.iter().enumerate() {
            resp.push(match (on, &self.lambda[r], &self.theta[r]) {
                (false, _, _) => None,
                (true, Some(l), Some(t)) => Some(ResponseParams {
                    lambda: l.iter().map(|c| c.to_vec()).collect(),
                    theta: t.iter().map(|&v| one(v)).collect(),
                }),
                _ => return Err(Error::invalid(format!("outcome {} has no generating response model", r + 1))),
            });
        }
        Ok(GlobalParams {
            delta: self.delta.iter().map(|d| d.to_vec()).collect(),
            beta: self.beta.iter().map(|per| per.iter().map(|b| vec![b[1]]).collect()).collect(),
            eta: self.beta.iter().map(|per| per.iter().map(|b| vec![b[0]]).collect()).collect(),
            sigma: self.sigma.clone(),
            psi: self.psi.iter().map(|row| row.iter().map(|&v| one(v)).collect()).collect(),
            visit: visit.then(|| VisitParams {
                phi: self.phi.iter().map(|c| c.to_vec()).collect(),
                omega: self.omega.iter().map(|&v| one(v)).collect(),
            }),
            response: resp,
        })
    }
}

fn sym2(a: f64, b: f64, c: f64) -> SymMatrix<f64> {
    SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).expect("literal matrix is symmetric")
}

/// True parameter values of a scenario.
pub fn scenario_config(id: Scenario) -> GenerativeConfig {
    // class 2 has probability Φ(−0.25 − w), so class 1 (non-reference) has Φ(0.25 + w)
    let mut cfg = GenerativeConfig {
        windows: 12,
        delta: vec![[0.25, 1.0]],
        beta: vec![vec![[-0.25, 0.1], [-1.0, 0.5]], vec![[0.5, 0.2], [-0.5, 0.75]]],
        sigma: vec![sym2(0.5, 0.2, 0.5), sym2(1.5, 1.0, 1.5)],
        psi: vec![vec![0.6, 0.6], vec![0.6, 0.4]],
        phi: vec![[-0.2, -0.8], [-0.8, 0.2]],
        omega: vec![0.25, 0.25],
        lambda: vec![None, Some(vec![[1.9, 0.1], [1.1, 0.25]])],
        theta: vec![None, Some(vec![0.5, 1.5])],
    };
    match id {
        Scenario::S0 => {}
        Scenario::S1 => cfg.beta[1][1][1] = 1.0,
        Scenario::S2 => cfg.beta[1][1][1] = 0.3,
        Scenario::S3 => cfg.phi = vec![[0.4, -0.2], [-0.1, 0.9]],
        Scenario::S4 => cfg.lambda[1] = Some(vec![[0.8, 0.1], [0.5, 0.2]]),
    }
    cfg
}

/// Parses a scenario id and returns its configuration.
pub fn scenario_by_name(name: &str) -> Result<GenerativeConfig> {
    Ok(scenario_config(name.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_values() {
        let s0 = scenario_config(Scenario::S0);
        s0.validate().unwrap();
        assert_eq!(s0.beta[1][1][1], 0.75);
        let s1 = scenario_config(Scenario::S1);
        assert_eq!(s1.beta[1][1][1], 1.0);
        let mut back = s1.clone();
        back.beta[1][1][1] = 0.75;
        assert_eq!(back, s0);
        assert_eq!(scenario_config(Scenario::S2).beta[1][1][1], 0.3);
        assert_eq!(scenario_config(Scenario::S3).phi[0], [0.4, -0.2]);
        assert_eq!(scenario_config(Scenario::S4).lambda[1].as_ref().unwrap()[0], [0.8, 0.1]);
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(scenario_by_name("S9"), Err(Error::UnknownScenario(_))));
        assert_eq!("s3".parse::<Scenario>().unwrap(), Scenario::S3);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = scenario_config(Scenario::S0);
        cfg.psi[0].pop();
        assert!(cfg.validate().is_err());
    }
}
