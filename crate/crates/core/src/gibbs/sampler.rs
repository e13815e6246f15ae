//! Full-conditional updates of the blocked Gibbs sampler.

use nalgebra::DMatrix;
use rand::Rng;

use super::conditional::conditional_coefficients;
use super::params::{GlobalParams, ResponseParams, VisitParams};
use super::prepared::{Prepared, PreparedPatient};
use super::state::{class_from_utilities, ParameterState};
use crate::data::ResolvedPriors;
use crate::error::{Error, Result};
use crate::kernels::{
    gauss_legendre, ln_std_normal_cdf, normalize_log_weights, probit_class_probabilities, sample_categorical,
    sample_inverse_wishart, sample_mvn, sample_mvn_precision, sample_truncated_normal, sample_unit_half_line, std_normal, Factored, Rule,
    SymMatrix, CLASS_PROB_NODES,
};

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_flat(m: &mut DMatrix<f64>, flat: &[f64], scale: f64) {
    let d = m.nrows();
    for a in 0..d {
        for b in 0..d {
            m[(a, b)] += scale * flat[a * d + b];
        }
    }
}

fn inverse_of(m: &SymMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    Ok(m.inverse().map_err(|e| e.for_matrix(name))?.into_matrix())
}

/// Draws a probit augmentation latent: N(mean, 1) restricted to (0, ∞) when
/// `positive`, (−∞, 0) otherwise.
#[inline]
pub fn probit_latent<R: Rng + ?Sized>(mean: f64, positive: bool, rng: &mut R) -> Result<f64> {
    sample_unit_half_line(mean, positive, rng)
}

/// Log class-membership prior probabilities log π_ik under the sampler's
/// utility model (independent unit-variance utilities, reference class K).
pub fn log_class_prior(w: &[f64], delta: &[Vec<f64>], legendre: &Rule<f64>) -> Vec<f64> {
    match delta.len() {
        0 => vec![0.0],
        1 => {
            let m = dot(w, &delta[0]);
            vec![ln_std_normal_cdf(m), ln_std_normal_cdf(-m)]
        }
        _ => {
            let means: Vec<f64> = delta.iter().map(|d| dot(w, d)).collect();
            probit_class_probabilities(&means, legendre).into_iter().map(f64::ln).collect()
        }
    }
}

/// Prior precisions reused every iteration.
pub struct Sampler<'a> {
    pub prep: &'a Prepared,
    pub priors: &'a ResolvedPriors,
    delta_prec: DMatrix<f64>,
    beta_prec: DMatrix<f64>,
    eta_prec: DMatrix<f64>,
    phi_prec: DMatrix<f64>,
    phi_h0: Vec<f64>,
    lambda_prec: DMatrix<f64>,
    legendre: Rule<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(prep: &'a Prepared, priors: &'a ResolvedPriors) -> Result<Self> {
        let phi_prec = inverse_of(&priors.sigma_phi, "sigma_phi")?;
        let phi_h0 = (&phi_prec * nalgebra::DVector::from_column_slice(&priors.mu_phi)).iter().copied().collect();
        Ok(Sampler {
            prep,
            priors,
            delta_prec: inverse_of(&priors.sigma_delta, "sigma_delta")?,
            beta_prec: inverse_of(&priors.sigma_beta, "sigma_beta")?,
            eta_prec: inverse_of(&priors.sigma_eta, "sigma_eta")?,
            phi_prec,
            phi_h0,
            lambda_prec: inverse_of(&priors.sigma_lambda, "sigma_lambda")?,
            legendre: gauss_legendre(CLASS_PROB_NODES)?,
        })
    }

    fn k(&self) -> usize {
        self.prep.dims.classes
    }

    /// One full sweep in the fixed order: class model, longitudinal block,
    /// visit block, response blocks, class reassignment, imputation.
    pub fn sweep<R: Rng + ?Sized>(&self, st: &mut ParameterState, rng: &mut R) -> Result<()> {
        self.update_class_membership(st, rng)?;
        self.update_longitudinal(st, rng)?;
        if self.prep.models_visits() {
            self.update_visit_process(st, rng)?;
        }
        for r in 0..self.prep.dims.outcomes {
            if self.prep.response_flags[r] {
                self.update_response_process(st, r, rng)?;
            }
        }
        self.sample_classes(st, rng)?;
        self.impute_missing_responses(st, rng)?;
        Ok(())
    }

    // ---------------------------------------------------------------- class model

    pub fn update_class_membership<R: Rng + ?Sized>(&self, st: &mut ParameterState, rng: &mut R) -> Result<()> {
        let k1 = self.k() - 1;
        if k1 == 0 {
            return Ok(());
        }
        for (i, pat) in self.prep.patients.iter().enumerate() {
            let mu: Vec<f64> = st.params.delta.iter().map(|d| dot(&pat.w, d)).collect();
            let c = st.classes[i];
            let xi = &mut st.xi[i * k1..(i + 1) * k1];
            if k1 == 1 {
                xi[0] = probit_latent(mu[0], c == 0, rng)?;
                continue;
            }
            let mut sweeps = 1;
            if class_from_utilities(xi) != c {
                sweeps = reset_utilities(xi, &mu, c, rng);
            }
            for _ in 0..sweeps {
                for k in 0..k1 {
                    let others = (0..k1).filter(|&l| l != k).map(|l| xi[l]).fold(0.0f64, f64::max);
                    xi[k] = if c == k {
                        sample_truncated_normal(mu[k], 1.0, Some(others), None, rng)?
                    } else {
                        sample_truncated_normal(mu[k], 1.0, None, Some(others), rng)?
                    };
                }
            }
        }
        let delta = self.draw_delta(&st.xi, rng)?;
        st.params.delta = delta;
        Ok(())
    }

    /// δ_k ~ MVN(V Σᵢ wᵢ ξ_ik, V) with V = (Σᵢ wᵢwᵢᵀ + Σ_δ⁻¹)⁻¹.
    pub fn draw_delta<R: Rng + ?Sized>(&self, xi: &[f64], rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let k1 = self.k() - 1;
        let s = self.prep.dims.s;
        let mut prec = self.delta_prec.clone();
        add_flat(&mut prec, &self.prep.w_w, 1.0);
        let mut out = Vec::with_capacity(k1);
        for k in 0..k1 {
            let mut h = vec![0.0; s];
            for (i, pat) in self.prep.patients.iter().enumerate() {
                let x = xi[i * k1 + k];
                for (a, w) in h.iter_mut().zip(&pat.w) {
                    *a += w * x;
                }
            }
            out.push(sample_mvn_precision(&prec, &h, rng).map_err(|e| e.for_matrix("delta precision"))?);
        }
        Ok(out)
    }

    // ------------------------------------------------------------ longitudinal

    /// Residual of outcome r at window j: y − x^h β_rk − z b_ir.
    #[inline]
    fn resid(&self, st: &ParameterState, i: usize, pat: &PreparedPatient, j: usize, r: usize, k: usize) -> f64 {
        let d = &self.prep.dims;
        let y = st.y[i][j * d.outcomes + r];
        let b = &st.b[(i * d.outcomes + r) * d.q..(i * d.outcomes + r + 1) * d.q];
        y - dot(pat.xh_row(j, d.ph), &st.params.beta[r][k]) - dot(pat.z_row(j, d.q), b)
    }

    /// Σ_{r'≠r} q_rr' × residual of r' at window j.
    #[inline]
    fn q_term(&self, st: &ParameterState, i: usize, pat: &PreparedPatient, j: usize, r: usize, k: usize, q: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for r2 in 0..self.prep.dims.outcomes {
            if r2 != r && q[(r, r2)] != 0.0 {
                acc += q[(r, r2)] * self.resid(st, i, pat, j, r2, k);
            }
        }
        acc
    }

    pub fn update_longitudinal<R: Rng + ?Sized>(&self, st: &mut ParameterState, rng: &mut R) -> Result<()> {
        let d = self.prep.dims;
        let (kk, rr, ph, q, e) = (d.classes, d.outcomes, d.ph, d.q, d.e);
        let pats = &self.prep.patients;
        let mut cond = Vec::with_capacity(kk);
        for k in 0..kk {
            cond.push(conditional_coefficients(&st.params.sigma[k])?);
        }
        // β_rk with the Q-adjusted pseudo-response
        for r in 0..rr {
            let mut prec = vec![vec![0.0; ph * ph]; kk];
            let mut h = vec![vec![0.0; ph]; kk];
            for (i, pat) in pats.iter().enumerate() {
                let k = st.classes[i];
                let b = &st.b[(i * rr + r) * q..(i * rr + r + 1) * q];
                for &j in &pat.visited {
                    let pseudo = st.y[i][j * rr + r] - dot(pat.z_row(j, q), b) - self.q_term(st, i, pat, j, r, k, &cond[k].0);
                    for (a, x) in h[k].iter_mut().zip(pat.xh_row(j, ph)) {
                        *a += x * pseudo;
                    }
                }
                for (a, v) in prec[k].iter_mut().zip(&pat.xh_xh) {
                    *a += v;
                }
            }
            for k in 0..kk {
                let s2 = cond[k].1[r];
                let mut p = self.beta_prec.clone();
                add_flat(&mut p, &prec[k], 1.0 / s2);
                let hh: Vec<f64> = h[k].iter().map(|v| v / s2).collect();
                st.params.beta[r][k] = sample_mvn_precision(&p, &hh, rng).map_err(|e| e.for_matrix("beta precision"))?;
            }
        }
        // b_ri
        let mut psi_inv = Vec::with_capacity(kk);
        for k in 0..kk {
            let mut row = Vec::with_capacity(rr);
            for r in 0..rr {
                row.push(inverse_of(&st.params.psi[k][r], "psi")?);
            }
            psi_inv.push(row);
        }
        for (i, pat) in pats.iter().enumerate() {
            let k = st.classes[i];
            for r in 0..rr {
                let s2 = cond[k].1[r];
                let pinv = &psi_inv[k][r];
                let mut p = pinv.clone();
                add_flat(&mut p, &pat.z_z_visited, 1.0 / s2);
                let eta = &st.params.eta[r][k];
                let mut h: Vec<f64> = (0..q)
                    .map(|g| (0..q).map(|g2| pinv[(g, g2)] * dot(&eta[g2 * e..(g2 + 1) * e], &pat.u)).sum())
                    .collect();
                for &j in &pat.visited {
                    let part = st.y[i][j * rr + r]
                        - dot(pat.xh_row(j, ph), &st.params.beta[r][k])
                        - self.q_term(st, i, pat, j, r, k, &cond[k].0);
                    for (a, z) in h.iter_mut().zip(pat.z_row(j, q)) {
                        *a += z * part / s2;
                    }
                }
                let draw = sample_mvn_precision(&p, &h, rng).map_err(|e| e.for_matrix("random effect precision"))?;
                st.b[(i * rr + r) * q..(i * rr + r + 1) * q].copy_from_slice(&draw);
            }
        }
        // η_rk jointly over its q×e entries
        for r in 0..rr {
            for k in 0..kk {
                let (p, h) = self.eta_conditional(st, r, k, &psi_inv[k][r]);
                st.params.eta[r][k] = sample_mvn_precision(&p, &h, rng).map_err(|e| e.for_matrix("eta precision"))?;
            }
        }
        // Σ_k
        for k in 0..kk {
            let (df, scale) = self.sigma_conditional(st, k);
            st.params.sigma[k] = sample_inverse_wishart(df, &scale, rng).map_err(|e| e.for_matrix("sigma scale"))?;
        }
        // Ψ_kr
        for k in 0..kk {
            for r in 0..rr {
                let mut scale = self.priors.s_psi.matrix().clone();
                let mut df = self.priors.nu_psi;
                let eta = &st.params.eta[r][k];
                for (i, pat) in pats.iter().enumerate() {
                    if st.classes[i] != k {
                        continue;
                    }
                    df += 1.0;
                    let b = &st.b[(i * rr + r) * q..(i * rr + r + 1) * q];
                    let dev: Vec<f64> = (0..q).map(|g| b[g] - dot(&eta[g * e..(g + 1) * e], &pat.u)).collect();
                    for a in 0..q {
                        for c in 0..q {
                            scale[(a, c)] += dev[a] * dev[c];
                        }
                    }
                }
                st.params.psi[k][r] = sample_inverse_wishart(df, &SymMatrix::symmetrized(scale), rng).map_err(|e| e.for_matrix("psi scale"))?;
            }
        }
        Ok(())
    }

    /// Canonical (precision, linear term) of the joint q·e vector η_rk given
    /// the class-k random effects, with Ψ_kr⁻¹ supplied.
    pub fn eta_conditional(&self, st: &ParameterState, r: usize, k: usize, psi_inv: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
        let d = self.prep.dims;
        let (rr, q, e) = (d.outcomes, d.q, d.e);
        let mut p = DMatrix::<f64>::zeros(q * e, q * e);
        for g in 0..q {
            p.view_mut((g * e, g * e), (e, e)).copy_from(&self.eta_prec);
        }
        let mut h = vec![0.0; q * e];
        for (i, pat) in self.prep.patients.iter().enumerate() {
            if st.classes[i] != k {
                continue;
            }
            let b = &st.b[(i * rr + r) * q..(i * rr + r + 1) * q];
            for g in 0..q {
                let pb: f64 = (0..q).map(|g2| psi_inv[(g, g2)] * b[g2]).sum();
                for c in 0..e {
                    h[g * e + c] += pb * pat.u[c];
                    for g2 in 0..q {
                        for c2 in 0..e {
                            p[(g * e + c, g2 * e + c2)] += psi_inv[(g, g2)] * pat.u[c] * pat.u[c2];
                        }
                    }
                }
            }
        }
        (p, h)
    }

    /// Inverse-Wishart (df, scale) of Σ_k given the current residuals.
    pub fn sigma_conditional(&self, st: &ParameterState, k: usize) -> (f64, SymMatrix<f64>) {
        let rr = self.prep.dims.outcomes;
        let mut scale = self.priors.s_sigma.matrix().clone();
        let mut df = self.priors.nu_sigma;
        let mut res = vec![0.0; rr];
        for (i, pat) in self.prep.patients.iter().enumerate() {
            if st.classes[i] != k {
                continue;
            }
            df += pat.n_visits() as f64;
            for &j in &pat.visited {
                for (r, v) in res.iter_mut().enumerate() {
                    *v = self.resid(st, i, pat, j, r, k);
                }
                for a in 0..rr {
                    for b in 0..rr {
                        scale[(a, b)] += res[a] * res[b];
                    }
                }
            }
        }
        (df, SymMatrix::symmetrized(scale))
    }

    // ------------------------------------------------------------ visit process

    pub fn update_visit_process<R: Rng + ?Sized>(&self, st: &mut ParameterState, rng: &mut R) -> Result<()> {
        let d = self.prep.dims;
        let (kk, p, q, jj) = (d.classes, d.p, d.q, d.windows);
        let pats = &self.prep.patients;
        let visit = st.params.visit.as_ref().ok_or_else(|| Error::invalid("visit parameters missing"))?;
        for (i, pat) in pats.iter().enumerate() {
            let k = st.classes[i];
            let tau = &st.tau[i * q..(i + 1) * q];
            for j in 0..jj {
                let mean = dot(pat.x_row(j, p), &visit.phi[k]) + dot(pat.z_row(j, q), tau);
                st.xi_d[i * jj + j] = probit_latent(mean, pat.visit[j], rng)?;
            }
        }
        let mut new_phi = Vec::with_capacity(kk);
        {
            let mut prec = vec![self.phi_prec.clone(); kk];
            let mut h = vec![self.phi_h0.clone(); kk];
            for (i, pat) in pats.iter().enumerate() {
                let k = st.classes[i];
                add_flat(&mut prec[k], &pat.x_x_all, 1.0);
                let tau = &st.tau[i * q..(i + 1) * q];
                for j in 0..jj {
                    let t = st.xi_d[i * jj + j] - dot(pat.z_row(j, q), tau);
                    for (a, x) in h[k].iter_mut().zip(pat.x_row(j, p)) {
                        *a += x * t;
                    }
                }
            }
            for k in 0..kk {
                new_phi.push(sample_mvn_precision(&prec[k], &h[k], rng).map_err(|e| e.for_matrix("phi precision"))?);
            }
        }
        let omega_inv = visit.omega.iter().map(|o| inverse_of(o, "omega")).collect::<Result<Vec<_>>>()?;
        for (i, pat) in pats.iter().enumerate() {
            let k = st.classes[i];
            let mut prec = omega_inv[k].clone();
            add_flat(&mut prec, &pat.z_z_all, 1.0);
            let mut h = vec![0.0; q];
            for j in 0..jj {
                let t = st.xi_d[i * jj + j] - dot(pat.x_row(j, p), &new_phi[k]);
                for (a, z) in h.iter_mut().zip(pat.z_row(j, q)) {
                    *a += z * t;
                }
            }
            let draw = sample_mvn_precision(&prec, &h, rng).map_err(|e| e.for_matrix("tau precision"))?;
            st.tau[i * q..(i + 1) * q].copy_from_slice(&draw);
        }
        let mut new_omega = Vec::with_capacity(kk);
        for k in 0..kk {
            let (df, scale) = self.effect_scale(st, &st.tau, q, 1, 0, k, self.priors.nu_omega, &self.priors.s_omega);
            new_omega.push(sample_inverse_wishart(df, &scale, rng).map_err(|e| e.for_matrix("omega scale"))?);
        }
        st.params.visit = Some(VisitParams { phi: new_phi, omega: new_omega });
        Ok(())
    }

    /// IW posterior (df, scale) for zero-mean random effects of class k.
    /// `stride`/`offset` pick block r of a (n·stride·q) vector.
    #[allow(clippy::too_many_arguments)]
    fn effect_scale(
        &self,
        st: &ParameterState,
        v: &[f64],
        q: usize,
        stride: usize,
        offset: usize,
        k: usize,
        nu: f64,
        s: &SymMatrix<f64>,
    ) -> (f64, SymMatrix<f64>) {
        let mut scale = s.matrix().clone();
        let mut df = nu;
        for i in 0..self.prep.n() {
            if st.classes[i] != k {
                continue;
            }
            df += 1.0;
            let t = &v[(i * stride + offset) * q..(i * stride + offset + 1) * q];
            for a in 0..q {
                for b in 0..q {
                    scale[(a, b)] += t[a] * t[b];
                }
            }
        }
        (df, SymMatrix::symmetrized(scale))
    }

    // --------------------------------------------------------- response process

    pub fn update_response_process<R: Rng + ?Sized>(&self, st: &mut ParameterState, r: usize, rng: &mut R) -> Result<()> {
        let d = self.prep.dims;
        let (kk, rr, p, q, jj) = (d.classes, d.outcomes, d.p, d.q, d.windows);
        let pats = &self.prep.patients;
        let resp = st.params.response[r].as_ref().ok_or_else(|| Error::invalid("response parameters missing"))?;
        for (i, pat) in pats.iter().enumerate() {
            let k = st.classes[i];
            let kappa = &st.kappa[(i * rr + r) * q..(i * rr + r + 1) * q];
            for &j in &pat.visited {
                let mean = dot(pat.x_row(j, p), &resp.lambda[k]) + dot(pat.z_row(j, q), kappa);
                st.xi_m[(i * rr + r) * jj + j] = probit_latent(mean, pat.response[j * rr + r], rng)?;
            }
        }
        let mut new_lambda = Vec::with_capacity(kk);
        {
            let mut prec = vec![self.lambda_prec.clone(); kk];
            let mut h = vec![vec![0.0; p]; kk];
            for (i, pat) in pats.iter().enumerate() {
                let k = st.classes[i];
                add_flat(&mut prec[k], &pat.x_x_visited, 1.0);
                let kappa = &st.kappa[(i * rr + r) * q..(i * rr + r + 1) * q];
                for &j in &pat.visited {
                    let t = st.xi_m[(i * rr + r) * jj + j] - dot(pat.z_row(j, q), kappa);
                    for (a, x) in h[k].iter_mut().zip(pat.x_row(j, p)) {
                        *a += x * t;
                    }
                }
            }
            for k in 0..kk {
                new_lambda.push(sample_mvn_precision(&prec[k], &h[k], rng).map_err(|e| e.for_matrix("lambda precision"))?);
            }
        }
        let theta_inv = resp.theta.iter().map(|o| inverse_of(o, "theta")).collect::<Result<Vec<_>>>()?;
        for (i, pat) in pats.iter().enumerate() {
            let k = st.classes[i];
            let mut prec = theta_inv[k].clone();
            add_flat(&mut prec, &pat.z_z_visited, 1.0);
            let mut h = vec![0.0; q];
            for &j in &pat.visited {
                let t = st.xi_m[(i * rr + r) * jj + j] - dot(pat.x_row(j, p), &new_lambda[k]);
                for (a, z) in h.iter_mut().zip(pat.z_row(j, q)) {
                    *a += z * t;
                }
            }
            let draw = sample_mvn_precision(&prec, &h, rng).map_err(|e| e.for_matrix("kappa precision"))?;
            st.kappa[(i * rr + r) * q..(i * rr + r + 1) * q].copy_from_slice(&draw);
        }
        let mut new_theta = Vec::with_capacity(kk);
        for k in 0..kk {
            let (df, scale) = self.effect_scale(st, &st.kappa, q, rr, r, k, self.priors.nu_theta, &self.priors.s_theta);
            new_theta.push(sample_inverse_wishart(df, &scale, rng).map_err(|e| e.for_matrix("theta scale"))?);
        }
        st.params.response[r] = Some(ResponseParams { lambda: new_lambda, theta: new_theta });
        Ok(())
    }

    // ------------------------------------------------------ class reassignment

    /// Unnormalized log p_ik for every class of patient i.
    pub fn class_log_weights(&self, st: &ParameterState, i: usize, cache: &ClassCache) -> Vec<f64> {
        let d = self.prep.dims;
        let (rr, ph, q, e, p, jj) = (d.outcomes, d.ph, d.q, d.e, d.p, d.windows);
        let pat = &self.prep.patients[i];
        let params = &st.params;
        let mut out = log_class_prior(&pat.w, &params.delta, &self.legendre);
        let mut res = vec![0.0; rr];
        let mut dev = vec![0.0; q];
        for (k, lp) in out.iter_mut().enumerate() {
            let mut acc = *lp;
            for &j in &pat.visited {
                for (r, v) in res.iter_mut().enumerate() {
                    let b = &st.b[(i * rr + r) * q..(i * rr + r + 1) * q];
                    *v = st.y[i][j * rr + r] - dot(pat.xh_row(j, ph), &params.beta[r][k]) - dot(pat.z_row(j, q), b);
                }
                acc += cache.sigma[k].mvn_ln_pdf_slice(&res);
            }
            for r in 0..rr {
                let b = &st.b[(i * rr + r) * q..(i * rr + r + 1) * q];
                let eta = &params.eta[r][k];
                for g in 0..q {
                    dev[g] = b[g] - dot(&eta[g * e..(g + 1) * e], &pat.u);
                }
                acc += cache.psi[k][r].mvn_ln_pdf_slice(&dev);
            }
            if let Some(visit) = &params.visit {
                let tau = &st.tau[i * q..(i + 1) * q];
                for j in 0..jj {
                    let m = dot(pat.x_row(j, p), &visit.phi[k]) + dot(pat.z_row(j, q), tau);
                    acc += ln_std_normal_cdf(if pat.visit[j] { m } else { -m });
                }
                acc += cache.omega[k].mvn_ln_pdf_slice(tau);
            }
            for (r, resp) in params.response.iter().enumerate() {
                if let Some(resp) = resp {
                    let kappa = &st.kappa[(i * rr + r) * q..(i * rr + r + 1) * q];
                    for &j in &pat.visited {
                        let m = dot(pat.x_row(j, p), &resp.lambda[k]) + dot(pat.z_row(j, q), kappa);
                        acc += ln_std_normal_cdf(if pat.response[j * rr + r] { m } else { -m });
                    }
                    acc += cache.theta[r][k].mvn_ln_pdf_slice(kappa);
                }
            }
            *lp = acc;
        }
        out
    }

    pub fn sample_classes<R: Rng + ?Sized>(&self, st: &mut ParameterState, rng: &mut R) -> Result<()> {
        let kk = self.k();
        let cache = ClassCache::new(&st.params)?;
        for i in 0..self.prep.n() {
            let mut w = self.class_log_weights(st, i, &cache);
            normalize_log_weights(&mut w)
                .ok_or_else(|| Error::DegenerateClassPosterior { patient: self.prep.patients[i].id.clone() })?;
            st.classes[i] = sample_categorical(&w, rng)?;
            st.class_probs[i * kk..(i + 1) * kk].copy_from_slice(&w);
        }
        Ok(())
    }

    // ----------------------------------------------------------- imputation

    /// Redraws every missing outcome at a visited window from its conditional
    /// normal given the observed outcomes of that window.
    pub fn impute_missing_responses<R: Rng + ?Sized>(&self, st: &mut ParameterState, rng: &mut R) -> Result<()> {
        let rr = self.prep.dims.outcomes;
        if self.prep.missing_cells.is_empty() {
            return Ok(());
        }
        let cond = st.params.sigma.iter().map(conditional_coefficients).collect::<Result<Vec<_>>>()?;
        for (i, pat) in self.prep.patients.iter().enumerate() {
            let k = st.classes[i];
            let mut idx = 0;
            while idx < pat.missing.len() {
                let j = pat.missing[idx] / rr;
                let mut end = idx;
                while end < pat.missing.len() && pat.missing[end] / rr == j {
                    end += 1;
                }
                let mu = self.window_mean(st, i, j, k);
                let y = &st.y[i][j * rr..(j + 1) * rr];
                if end - idx == 1 {
                    // a single gap: regression on the other outcomes via Q
                    let r = pat.missing[idx] % rr;
                    let (q, resid) = &cond[k];
                    let mean = mu[r] + (0..rr).filter(|&o| o != r).map(|o| q[(r, o)] * (y[o] - mu[o])).sum::<f64>();
                    st.y[i][j * rr + r] = mean + resid[r].sqrt() * std_normal(rng);
                } else {
                    let miss: Vec<usize> = pat.missing[idx..end].iter().map(|c| c % rr).collect();
                    let obs: Vec<usize> = (0..rr).filter(|r| !miss.contains(r)).collect();
                    let (mean, cov) = conditional_normal(st.params.sigma[k].matrix(), &mu, y, &miss, &obs)?;
                    let draw = sample_mvn(&mean, &SymMatrix::symmetrized(cov), rng)?;
                    for (r, v) in miss.iter().zip(draw) {
                        st.y[i][j * rr + r] = v;
                    }
                }
                idx = end;
            }
        }
        Ok(())
    }

    /// Mean of every outcome at window j for patient i under class k.
    fn window_mean(&self, st: &ParameterState, i: usize, j: usize, k: usize) -> Vec<f64> {
        let d = self.prep.dims;
        let pat = &self.prep.patients[i];
        (0..d.outcomes)
            .map(|r| {
                let b = &st.b[(i * d.outcomes + r) * d.q..(i * d.outcomes + r + 1) * d.q];
                dot(pat.xh_row(j, d.ph), &st.params.beta[r][k]) + dot(pat.z_row(j, d.q), b)
            })
            .collect()
    }
}

/// Mean and covariance of y_M given y_O for y ~ N(mu, sigma).
pub fn conditional_normal(
    sigma: &DMatrix<f64>,
    mu: &[f64],
    y: &[f64],
    miss: &[usize],
    obs: &[usize],
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let smm = DMatrix::from_fn(miss.len(), miss.len(), |a, b| sigma[(miss[a], miss[b])]);
    if obs.is_empty() {
        return Ok((miss.iter().map(|&r| mu[r]).collect(), smm));
    }
    let smo = DMatrix::from_fn(miss.len(), obs.len(), |a, b| sigma[(miss[a], obs[b])]);
    let soo = DMatrix::from_fn(obs.len(), obs.len(), |a, b| sigma[(obs[a], obs[b])]);
    let chol = nalgebra::Cholesky::new(soo).ok_or(Error::NotPositiveDefinite { what: "sigma".into() })?;
    let dev = nalgebra::DVector::from_iterator(obs.len(), obs.iter().map(|&r| y[r] - mu[r]));
    let coef = chol.solve(&smo.transpose()); // Σ_OO⁻¹ Σ_OM
    let mean: Vec<f64> = miss
        .iter()
        .enumerate()
        .map(|(a, &r)| mu[r] + (coef.column(a).transpose() * &dev)[(0, 0)])
        .collect();
    let cov = smm - &smo * coef;
    Ok((mean, cov))
}

/// Factored covariances used by the class step.
pub struct ClassCache {
    pub sigma: Vec<Factored<f64>>,
    /// `psi[k][r]`
    pub psi: Vec<Vec<Factored<f64>>>,
    pub omega: Vec<Factored<f64>>,
    /// `theta[r][k]`, empty rows for unmodeled outcomes.
    pub theta: Vec<Vec<Factored<f64>>>,
}

impl ClassCache {
    pub fn new(params: &GlobalParams) -> Result<Self> {
        let f = |m: &SymMatrix<f64>, name: &str| Factored::new(m).map_err(|e| e.for_matrix(name));
        Ok(ClassCache {
            sigma: params.sigma.iter().map(|m| f(m, "sigma")).collect::<Result<_>>()?,
            psi: params.psi.iter().map(|row| row.iter().map(|m| f(m, "psi")).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?,
            omega: match &params.visit {
                Some(v) => v.omega.iter().map(|m| f(m, "omega")).collect::<Result<_>>()?,
                None => Vec::new(),
            },
            theta: params
                .response
                .iter()
                .map(|r| match r {
                    Some(r) => r.theta.iter().map(|m| f(m, "theta")).collect::<Result<Vec<_>>>(),
                    None => Ok(Vec::new()),
                })
                .collect::<Result<_>>()?,
        })
    }
}

/// Moves utilities into the cone of class `c`; returns how many Gibbs sweeps
/// should follow. Exact rejection draws are tried first.
fn reset_utilities<R: Rng + ?Sized>(xi: &mut [f64], mu: &[f64], c: usize, rng: &mut R) -> usize {
    for _ in 0..200 {
        for (x, m) in xi.iter_mut().zip(mu) {
            *x = m + std_normal(rng);
        }
        if class_from_utilities(xi) == c {
            return 1;
        }
    }
    for (k, x) in xi.iter_mut().enumerate() {
        *x = if k == c { 1.0 } else { -1.0 };
    }
    20
}
