//! Model specification, priors and the JSON configuration file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::panel::PanelData;
use crate::error::{Error, Result};
use crate::kernels::SymMatrix;

/// How missingness is handled when fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Unmasked simulated outcomes, no missingness models.
    Full,
    /// Fully observed windows only.
    Naive,
    /// All visited windows, missing responses imputed, no missingness models.
    Mar,
    /// Visit and response processes modeled jointly with the outcomes.
    Mnar,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Full, Method::Naive, Method::Mar, Method::Mnar];

    pub fn models_missingness(self) -> bool {
        self == Method::Mnar
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Naive => "naive",
            Method::Mar => "mar",
            Method::Mnar => "mnar",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Method::Full),
            "naive" => Ok(Method::Naive),
            "mar" => Ok(Method::Mar),
            "mnar" => Ok(Method::Mnar),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Dimensions and structural choices of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Number of latent classes K.
    pub classes: usize,
    /// Expected outcome count R; checked against the data when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
    /// Expected window count J; checked against the data when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<usize>,
    /// Polynomial degree of time in the fixed-effect designs.
    #[serde(default = "one")]
    pub time_degree: usize,
    /// Random effects per outcome (q): intercept, then successive time powers.
    #[serde(default = "one")]
    pub random_effects: usize,
    /// Outcomes whose response process is modeled under MNAR. When absent,
    /// every outcome with at least one missing response at a visited window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_modeled: Option<Vec<bool>>,
    pub method: Method,
}

fn one() -> usize {
    1
}

impl ModelSpec {
    pub fn new(classes: usize, method: Method) -> Self {
        ModelSpec {
            classes,
            outcomes: None,
            windows: None,
            time_degree: 1,
            random_effects: 1,
            response_modeled: None,
            method,
        }
    }

    pub fn check(&self, data: &PanelData) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::invalid("the number of classes must be at least 1"));
        }
        if self.random_effects == 0 {
            return Err(Error::invalid("at least one random effect is required"));
        }
        if self.time_degree < self.random_effects {
            return Err(Error::invalid(format!(
                "time degree {} must be at least the number of random effects {} so the centered design keeps a column",
                self.time_degree, self.random_effects
            )));
        }
        if let Some(r) = self.outcomes {
            if r != data.n_outcomes {
                return Err(Error::invalid(format!("spec expects {r} outcomes, data has {}", data.n_outcomes)));
            }
        }
        if let Some(j) = self.windows {
            if j != data.n_windows {
                return Err(Error::invalid(format!("spec expects {j} windows, data has {}", data.n_windows)));
            }
        }
        if let Some(flags) = &self.response_modeled {
            if flags.len() != data.n_outcomes {
                return Err(Error::invalid("response_modeled needs one flag per outcome"));
            }
        }
        Ok(())
    }

    /// Per-outcome response-model flags, resolved against the data.
    pub fn response_flags(&self, data: &PanelData) -> Vec<bool> {
        if !self.method.models_missingness() {
            return vec![false; data.n_outcomes];
        }
        match &self.response_modeled {
            Some(flags) => flags.clone(),
            None => (0..data.n_outcomes).map(|r| data.has_missing_response(r)).collect(),
        }
    }
}

/// Covariance given as a scalar multiple of I, a diagonal, or a full matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorCov {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl PriorCov {
    pub fn resolve(&self, dim: usize, name: &str) -> Result<SymMatrix<f64>> {
        let m = match self {
            PriorCov::Isotropic(v) => SymMatrix::scaled_identity(dim, *v),
            PriorCov::Diagonal(d) if d.len() == dim => SymMatrix::from_diagonal(d),
            PriorCov::Full(rows) if rows.len() == dim => SymMatrix::from_rows(rows)?,
            _ => return Err(Error::invalid(format!("prior `{name}` does not have dimension {dim}"))),
        };
        if !m.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { what: name.into() });
        }
        Ok(m)
    }
}

/// Prior hyperparameters as configured. Degrees of freedom left unset take
/// their dimension-dependent defaults when resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Priors {
    pub sigma_delta: PriorCov,
    pub sigma_beta: PriorCov,
    pub sigma_eta: PriorCov,
    pub sigma_phi: PriorCov,
    pub mu_phi: f64,
    pub sigma_lambda: PriorCov,
    pub nu_sigma: Option<f64>,
    pub s_sigma: PriorCov,
    pub nu_psi: Option<f64>,
    pub s_psi: PriorCov,
    pub nu_omega: Option<f64>,
    pub s_omega: PriorCov,
    pub nu_theta: Option<f64>,
    pub s_theta: PriorCov,
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            sigma_delta: PriorCov::Isotropic(1.0),
            sigma_beta: PriorCov::Isotropic(100.0),
            sigma_eta: PriorCov::Isotropic(1e4),
            sigma_phi: PriorCov::Isotropic(100.0),
            mu_phi: 0.0,
            sigma_lambda: PriorCov::Isotropic(100.0),
            nu_sigma: None,
            s_sigma: PriorCov::Isotropic(0.5),
            nu_psi: None,
            s_psi: PriorCov::Isotropic(1.0),
            nu_omega: None,
            s_omega: PriorCov::Isotropic(1.0),
            nu_theta: None,
            s_theta: PriorCov::Isotropic(1.0),
        }
    }
}

/// Dimensions that prior matrices are resolved against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub classes: usize,
    pub outcomes: usize,
    pub windows: usize,
    /// Class-model covariates s.
    pub s: usize,
    /// Random-effect-mean covariates e.
    pub e: usize,
    /// Full fixed-effect columns p (intercept + time powers).
    pub p: usize,
    /// Centered fixed-effect columns p^h.
    pub ph: usize,
    /// Random effects per outcome q.
    pub q: usize,
}

impl Dims {
    pub fn new(spec: &ModelSpec, data: &PanelData) -> Self {
        let p = spec.time_degree + 1;
        Dims {
            classes: spec.classes,
            outcomes: data.n_outcomes,
            windows: data.n_windows,
            s: data.class_covariates(),
            e: data.effect_covariates(),
            p,
            ph: p - spec.random_effects,
            q: spec.random_effects,
        }
    }
}

/// Priors with every matrix materialized at the model's dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPriors {
    pub sigma_delta: SymMatrix<f64>,
    pub sigma_beta: SymMatrix<f64>,
    pub sigma_eta: SymMatrix<f64>,
    pub sigma_phi: SymMatrix<f64>,
    pub mu_phi: Vec<f64>,
    pub sigma_lambda: SymMatrix<f64>,
    pub nu_sigma: f64,
    pub s_sigma: SymMatrix<f64>,
    pub nu_psi: f64,
    pub s_psi: SymMatrix<f64>,
    pub nu_omega: f64,
    pub s_omega: SymMatrix<f64>,
    pub nu_theta: f64,
    pub s_theta: SymMatrix<f64>,
}

impl Priors {
    pub fn resolve(&self, dims: &Dims) -> Result<ResolvedPriors> {
        let df = |v: Option<f64>, default: f64, dim: usize, name: &str| -> Result<f64> {
            let nu = v.unwrap_or(default);
            if !(nu > dim as f64 - 1.0) {
                return Err(Error::invalid(format!("{name} = {nu} must exceed {}", dim as f64 - 1.0)));
            }
            Ok(nu)
        };
        Ok(ResolvedPriors {
            sigma_delta: self.sigma_delta.resolve(dims.s, "sigma_delta")?,
            sigma_beta: self.sigma_beta.resolve(dims.ph, "sigma_beta")?,
            sigma_eta: self.sigma_eta.resolve(dims.e, "sigma_eta")?,
            sigma_phi: self.sigma_phi.resolve(dims.p, "sigma_phi")?,
            mu_phi: vec![self.mu_phi; dims.p],
            sigma_lambda: self.sigma_lambda.resolve(dims.p, "sigma_lambda")?,
            nu_sigma: df(self.nu_sigma, dims.outcomes as f64 + 2.0, dims.outcomes, "nu_sigma")?,
            s_sigma: self.s_sigma.resolve(dims.outcomes, "s_sigma")?,
            nu_psi: df(self.nu_psi, dims.q as f64, dims.q, "nu_psi")?,
            s_psi: self.s_psi.resolve(dims.q, "s_psi")?,
            nu_omega: df(self.nu_omega, dims.q as f64, dims.q, "nu_omega")?,
            s_omega: self.s_omega.resolve(dims.q, "s_omega")?,
            nu_theta: df(self.nu_theta, dims.q as f64, dims.q, "nu_theta")?,
            s_theta: self.s_theta.resolve(dims.q, "s_theta")?,
        })
    }
}

/// Contents of the JSON configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSpec,
    #[serde(default)]
    pub priors: Priors,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
