//! Global (non-patient) parameters and their flat layout.

use serde::{Deserialize, Serialize};

use crate::data::Dims;
use crate::error::{Error, Result};
use crate::kernels::SymMatrix;

/// Visit-process coefficients and random-effect covariances.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitParams {
    /// `phi[k]`, length p.
    pub phi: Vec<Vec<f64>>,
    /// `omega[k]`, q×q.
    pub omega: Vec<SymMatrix<f64>>,
}

/// Response-process parameters of one modeled outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseParams {
    /// `lambda[k]`, length p.
    pub lambda: Vec<Vec<f64>>,
    /// `theta[k]`, q×q.
    pub theta: Vec<SymMatrix<f64>>,
}

/// One draw of every parameter that is not patient-specific.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalParams {
    /// `delta[k]` for k < K−1, length s.
    pub delta: Vec<Vec<f64>>,
    /// `beta[r][k]`, length p^h (centered design).
    pub beta: Vec<Vec<Vec<f64>>>,
    /// `eta[r][k]`, q×e row-major: row g holds the coefficients of random effect g.
    pub eta: Vec<Vec<Vec<f64>>>,
    /// `sigma[k]`, R×R.
    pub sigma: Vec<SymMatrix<f64>>,
    /// `psi[k][r]`, q×q.
    pub psi: Vec<Vec<SymMatrix<f64>>>,
    pub visit: Option<VisitParams>,
    /// Per outcome; `None` when the response process is not modeled.
    pub response: Vec<Option<ResponseParams>>,
}

/// Which blocks exist and how they flatten into a vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub dims: Dims,
    pub visit: bool,
    pub response: Vec<bool>,
}

fn push_sym(out: &mut Vec<f64>, m: &SymMatrix<f64>) {
    for a in 0..m.dim() {
        for b in 0..=a {
            out.push(m.get(a, b));
        }
    }
}

fn sym_names(out: &mut Vec<String>, prefix: &str, d: usize) {
    for a in 1..=d {
        for b in 1..=a {
            out.push(format!("{prefix}_{a}_{b}"));
        }
    }
}

struct Reader<'a> {
    v: &'a [f64],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<Vec<f64>> {
        let end = self.at + n;
        let s = self.v.get(self.at..end).ok_or_else(|| Error::Format("parameter vector too short".into()))?;
        self.at = end;
        Ok(s.to_vec())
    }

    fn sym(&mut self, d: usize) -> Result<SymMatrix<f64>> {
        let lower = self.take(d * (d + 1) / 2)?;
        let mut rows = vec![vec![0.0; d]; d];
        let mut it = lower.into_iter();
        for a in 0..d {
            for b in 0..=a {
                let v = it.next().expect("length checked");
                rows[a][b] = v;
                rows[b][a] = v;
            }
        }
        SymMatrix::from_rows(&rows)
    }
}

impl Layout {
    pub fn len(&self) -> usize {
        self.names().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn classes(&self) -> usize {
        self.dims.classes
    }

    /// 1-based parameter names, in flattening order.
    pub fn names(&self) -> Vec<String> {
        let d = &self.dims;
        let mut out = Vec::new();
        for k in 1..d.classes {
            for c in 1..=d.s {
                out.push(format!("delta_k{k}_{c}"));
            }
        }
        for r in 1..=d.outcomes {
            for k in 1..=d.classes {
                for g in 1..=d.ph {
                    out.push(format!("beta_r{r}_k{k}_{g}"));
                }
            }
        }
        for r in 1..=d.outcomes {
            for k in 1..=d.classes {
                for g in 1..=d.q {
                    for c in 1..=d.e {
                        out.push(format!("eta_r{r}_k{k}_{g}_{c}"));
                    }
                }
            }
        }
        for k in 1..=d.classes {
            sym_names(&mut out, &format!("sigma_k{k}"), d.outcomes);
        }
        for k in 1..=d.classes {
            for r in 1..=d.outcomes {
                sym_names(&mut out, &format!("psi_k{k}_r{r}"), d.q);
            }
        }
        if self.visit {
            for k in 1..=d.classes {
                for g in 1..=d.p {
                    out.push(format!("phi_k{k}_{g}"));
                }
            }
            for k in 1..=d.classes {
                sym_names(&mut out, &format!("omega_k{k}"), d.q);
            }
        }
        for (r, &on) in self.response.iter().enumerate() {
            if on {
                for k in 1..=d.classes {
                    for g in 1..=d.p {
                        out.push(format!("lambda_r{}_k{k}_{g}", r + 1));
                    }
                }
                for k in 1..=d.classes {
                    sym_names(&mut out, &format!("theta_r{}_k{k}", r + 1), d.q);
                }
            }
        }
        out
    }

    pub fn flatten(&self, p: &GlobalParams) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        p.delta.iter().for_each(|v| out.extend_from_slice(v));
        p.beta.iter().flatten().for_each(|v| out.extend_from_slice(v));
        p.eta.iter().flatten().for_each(|v| out.extend_from_slice(v));
        p.sigma.iter().for_each(|m| push_sym(&mut out, m));
        p.psi.iter().flatten().for_each(|m| push_sym(&mut out, m));
        if let Some(v) = &p.visit {
            v.phi.iter().for_each(|x| out.extend_from_slice(x));
            v.omega.iter().for_each(|m| push_sym(&mut out, m));
        }
        for resp in p.response.iter().flatten() {
            resp.lambda.iter().for_each(|x| out.extend_from_slice(x));
            resp.theta.iter().for_each(|m| push_sym(&mut out, m));
        }
        out
    }

    pub fn unflatten(&self, v: &[f64]) -> Result<GlobalParams> {
        let d = &self.dims;
        let k_count = d.classes;
        let mut rd = Reader { v, at: 0 };
        let delta = (1..k_count).map(|_| rd.take(d.s)).collect::<Result<_>>()?;
        let beta = (0..d.outcomes)
            .map(|_| (0..k_count).map(|_| rd.take(d.ph)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let eta = (0..d.outcomes)
            .map(|_| (0..k_count).map(|_| rd.take(d.q * d.e)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let sigma = (0..k_count).map(|_| rd.sym(d.outcomes)).collect::<Result<_>>()?;
        let psi = (0..k_count)
            .map(|_| (0..d.outcomes).map(|_| rd.sym(d.q)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let visit = if self.visit {
            let phi = (0..k_count).map(|_| rd.take(d.p)).collect::<Result<_>>()?;
            let omega = (0..k_count).map(|_| rd.sym(d.q)).collect::<Result<_>>()?;
            Some(VisitParams { phi, omega })
        } else {
            None
        };
        let mut response = Vec::with_capacity(d.outcomes);
        for &on in &self.response {
            response.push(if on {
                let lambda = (0..k_count).map(|_| rd.take(d.p)).collect::<Result<_>>()?;
                let theta = (0..k_count).map(|_| rd.sym(d.q)).collect::<Result<_>>()?;
                Some(ResponseParams { lambda, theta })
            } else {
                None
            });
        }
        if rd.at != v.len() {
            return Err(Error::Format(format!("parameter vector has {} values, layout expects {}", v.len(), rd.at)));
        }
        Ok(GlobalParams { delta, beta, eta, sigma, psi, visit, response })
    }
}

impl GlobalParams {
    /// Relabels classes: new class `k` takes the parameters of old class `perm[k]`.
    ///
    /// Class-model coefficients are re-expressed against the new reference
    /// class, δ'_k = δ_perm(k) − δ_perm(K) with δ_K ≡ 0. For K = 2 this is the
    /// exact sign flip of the differenced utility.
    pub fn permuted(&self, perm: &[usize]) -> GlobalParams {
        let k_count = perm.len();
        let s = self.delta.first().map_or(0, Vec::len);
        let full_delta = |k: usize| if k + 1 == k_count { vec![0.0; s] } else { self.delta[k].clone() };
        let base = full_delta(perm[k_count - 1]);
        let delta = (0..k_count - 1)
            .map(|k| full_delta(perm[k]).iter().zip(&base).map(|(a, b)| a - b).collect())
            .collect();
        let by_class = |v: &Vec<Vec<f64>>| perm.iter().map(|&k| v[k].clone()).collect::<Vec<_>>();
        let sym_by_class = |v: &Vec<SymMatrix<f64>>| perm.iter().map(|&k| v[k].clone()).collect::<Vec<_>>();
        GlobalParams {
            delta,
            beta: self.beta.iter().map(by_class).collect(),
            eta: self.eta.iter().map(by_class).collect(),
            sigma: sym_by_class(&self.sigma),
            psi: perm.iter().map(|&k| self.psi[k].clone()).collect(),
            visit: self.visit.as_ref().map(|v| VisitParams { phi: by_class(&v.phi), omega: sym_by_class(&v.omega) }),
            response: self
                .response
                .iter()
                .map(|r| r.as_ref().map(|r| ResponseParams { lambda: by_class(&r.lambda), theta: sym_by_class(&r.theta) }))
                .collect(),
        }
    }
}
