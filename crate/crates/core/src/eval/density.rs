//! Marginal density of one patient's observed data with classes and random
//! effects integrated out.

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dims;
use crate::error::{Error, Result};
use crate::gibbs::{log_class_prior, GlobalParams, PosteriorDraws, Prepared, PreparedPatient};
use crate::kernels::{gauss_hermite, gauss_legendre, CLASS_PROB_NODES, ln_std_normal_cdf, log_sum_exp, std_normal, RngStream, Rule, SymMatrix};

/// How the probit random-effect integrals are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integration {
    /// Adaptive Gauss–Hermite for one random effect, Monte Carlo otherwise.
    #[default]
    Auto,
    /// Tensor-product Gauss–Hermite in every dimension.
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarginalDensityOpts {
    /// Gauss–Hermite nodes per random-effect dimension.
    pub nodes: usize,
    pub mc_draws: usize,
    pub integration: Integration,
    /// Seed of the Monte Carlo draws (common across posterior draws).
    pub seed: u64,
}

impl Default for MarginalDensityOpts {
    fn default() -> Self {
        MarginalDensityOpts { nodes: 21, mc_draws: 200, integration: Integration::Auto, seed: 1 }
    }
}

impl MarginalDensityOpts {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 5 || self.nodes.is_multiple_of(2) {
            return Err(Error::invalid(format!("quadrature nodes must be odd and at least 5, got {}", self.nodes)));
        }
        if self.mc_draws < 50 {
            return Err(Error::invalid(format!("Monte Carlo fallback needs at least 50 draws, got {}", self.mc_draws)));
        }
        Ok(())
    }
}

/// Reusable rules and per-patient Monte Carlo normals.
pub struct DensityContext {
    opts: MarginalDensityOpts,
    hermite: Rule<f64>,
    legendre: Rule<f64>,
    q: usize,
}

impl DensityContext {
    pub fn new(opts: &MarginalDensityOpts, dims: &Dims) -> Result<Self> {
        opts.validate()?;
        Ok(DensityContext { opts: opts.clone(), hermite: gauss_hermite(opts.nodes)?, legendre: gauss_legendre(CLASS_PROB_NODES)?, q: dims.q })
    }

    fn uses_quadrature(&self) -> bool {
        match self.opts.integration {
            Integration::Auto => self.q == 1,
            Integration::Quadrature => true,
            Integration::MonteCarlo => false,
        }
    }

    /// One-dimensional Gauss–Hermite recentred on the mode of the integrand
    /// and scaled by its curvature. The log-probit integrands are log-concave,
    /// so Newton from 0 converges in a handful of steps.
    fn adaptive_hermite(&self, var: f64, f: impl Fn(f64) -> f64) -> f64 {
        let g = |v: f64| f(v) - 0.5 * v * v / var;
        let sd = var.sqrt();
        let h = 1e-4 * sd;
        let (mut mode, mut curv) = (0.0, -1.0 / var);
        for _ in 0..30 {
            let (g0, gp, gm) = (g(mode), g(mode + h), g(mode - h));
            let d2 = (gp - 2.0 * g0 + gm) / (h * h);
            if !(d2 < 0.0) || !g0.is_finite() {
                break;
            }
            curv = d2;
            let step = -((gp - gm) / (2.0 * h)) / d2;
            mode += step.clamp(-3.0 * sd, 3.0 * sd);
            if step.abs() < 1e-9 * sd {
                break;
            }
        }
        let scale = (-1.0 / curv).sqrt();
        let terms: Vec<f64> = self
            .hermite
            .nodes
            .iter()
            .zip(&self.hermite.weights)
            .map(|(x, w)| w.ln() + x * x + g(mode + std::f64::consts::SQRT_2 * scale * x))
            .collect();
        // ∫ exp(g) dv / √(2π var)
        log_sum_exp(&terms) + (std::f64::consts::SQRT_2 * scale).ln() - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
    }

    /// log E[exp(f(v))] for v ~ N(0, cov). `patient` selects the common
    /// random numbers of the Monte Carlo fallback.
    pub fn log_normal_expectation(&self, cov: &SymMatrix<f64>, patient: usize, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let q = cov.dim();
        if q == 1 && self.uses_quadrature() {
            let var = cov.get(0, 0).max(0.0);
            if var == 0.0 {
                return Ok(f(&[0.0]));
            }
            return Ok(self.adaptive_hermite(var, |v| f(&[v])));
        }
        let chol = cov.cholesky().map_err(|e| e.for_matrix("random-effect covariance"))?;
        let l = chol.l();
        let mut v = vec![0.0; q];
        let transform = |z: &[f64], out: &mut Vec<f64>| {
            for a in 0..q {
                out[a] = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
            }
        };
        let mut terms = Vec::new();
        if self.uses_quadrature() {
            let n = self.hermite.nodes.len();
            let mut idx = vec![0usize; q];
            let mut z = vec![0.0; q];
            loop {
                let mut lw = -0.5 * q as f64 * std::f64::consts::PI.ln();
                for a in 0..q {
                    z[a] = std::f64::consts::SQRT_2 * self.hermite.nodes[idx[a]];
                    lw += self.hermite.weights[idx[a]].ln();
                }
                transform(&z, &mut v);
                terms.push(lw + f(&v));
                let mut a = 0;
                while a < q {
                    idx[a] += 1;
                    if idx[a] < n {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if a == q {
                    break;
                }
            }
            return Ok(log_sum_exp(&terms));
        }
        let mut rng = RngStream::new(self.opts.seed, patient as u64);
        let mut z = vec![0.0; q];
        for _ in 0..self.opts.mc_draws {
            z.iter_mut().for_each(|x| *x = std_normal(&mut rng));
            transform(&z, &mut v);
            terms.push(f(&v));
        }
        Ok(log_sum_exp(&terms) - (self.opts.mc_draws as f64).ln())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// log N(y*; μ, ZΨZᵀ + Σ) over the observed cells of patient `pat` in class k.
fn outcome_ln_density(pat: &PreparedPatient, dims: &Dims, params: &GlobalParams, k: usize) -> Result<f64> {
    let (rr, ph, q, e) = (dims.outcomes, dims.ph, dims.q, dims.e);
    let cells: Vec<(usize, usize)> = pat
        .visited
        .iter()
        .flat_map(|&j| (0..rr).map(move |r| (j, r)))
        .filter(|&(j, r)| pat.y[j * rr + r].is_finite())
        .collect();
    let m = cells.len();
    if m == 0 {
        return Ok(0.0);
    }
    let mut resid = Vec::with_capacity(m);
    for &(j, r) in &cells {
        let eta = &params.eta[r][k];
        let mean_b: Vec<f64> = (0..q).map(|g| dot(&eta[g * e..(g + 1) * e], &pat.u)).collect();
        resid.push(pat.y[j * rr + r] - dot(pat.xh_row(j, ph), &params.beta[r][k]) - dot(pat.z_row(j, q), &mean_b));
    }
    let sigma = &params.sigma[k];
    let cov = DMatrix::from_fn(m, m, |a, b| {
        let (ja, ra) = cells[a];
        let (jb, rb) = cells[b];
        let mut v = if ja == jb { sigma.get(ra, rb) } else { 0.0 };
        if ra == rb {
            let psi = &params.psi[k][ra];
            let (za, zb) = (pat.z_row(ja, q), pat.z_row(jb, q));
            for g in 0..q {
                for h in 0..q {
                    v += za[g] * psi.get(g, h) * zb[h];
                }
            }
        }
        v
    });
    let chol = Cholesky::new(cov).ok_or(Error::NotPositiveDefinite { what: "marginal outcome covariance".into() })?;
    let l = chol.l_dirty();
    let ln_det: f64 = (0..m).map(|a| 2.0 * l[(a, a)].ln()).sum();
    let sol = chol.solve(&nalgebra::DVector::from_vec(resid.clone()));
    let quad: f64 = resid.iter().zip(sol.iter()).map(|(a, b)| a * b).sum();
    Ok(-0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + quad))
}

/// Log marginal density of patient `index` under one parameter draw.
pub fn marginal_log_density(prep: &Prepared, index: usize, params: &GlobalParams, ctx: &DensityContext) -> Result<f64> {
    let dims = &prep.dims;
    let pat = &prep.patients[index];
    let (rr, p, q, jj) = (dims.outcomes, dims.p, dims.q, dims.windows);
    let prior = log_class_prior(&pat.w, &params.delta, &ctx.legendre);
    let mut per_class = Vec::with_capacity(dims.classes);
    for (k, lp) in prior.iter().enumerate() {
        let mut acc = lp + outcome_ln_density(pat, dims, params, k)?;
        if let Some(visit) = &params.visit {
            let lin: Vec<f64> = (0..jj).map(|j| dot(pat.x_row(j, p), &visit.phi[k])).collect();
            acc += ctx.log_normal_expectation(&visit.omega[k], index, |tau| {
                (0..jj)
                    .map(|j| {
                        let m = lin[j] + dot(pat.z_row(j, q), tau);
                        ln_std_normal_cdf(if pat.visit[j] { m } else { -m })
                    })
                    .sum()
            })?;
        }
        for (r, resp) in params.response.iter().enumerate() {
            if let Some(resp) = resp {
                let lin: Vec<f64> = pat.visited.iter().map(|&j| dot(pat.x_row(j, p), &resp.lambda[k])).collect();
                acc += ctx.log_normal_expectation(&resp.theta[k], index, |kappa| {
                    pat.visited
                        .iter()
                        .zip(&lin)
                        .map(|(&j, l)| {
                            let m = l + dot(pat.z_row(j, q), kappa);
                            ln_std_normal_cdf(if pat.response[j * rr + r] { m } else { -m })
                        })
                        .sum()
                })?;
            }
        }
        per_class.push(acc);
    }
    let total = log_sum_exp(&per_class);
    if total == f64::NEG_INFINITY || total.is_nan() {
        return Err(Error::ZeroDensity { patient: pat.id.clone() });
    }
    Ok(total)
}

/// Evenly spaced subset of at most `max` draw indices out of `total`.
pub fn draw_subset(total: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if m > 0 && m < total => (0..m).map(|g| g * total / m).collect(),
        _ => (0..total).collect(),
    }
}

/// Log marginal densities `[draw][patient]` over the pooled draws selected
/// by `subset` (indices into the chain-concatenated draws).
pub fn log_density_matrix(draws: &PosteriorDraws, prep: &Prepared, subset: &[usize], opts: &MarginalDensityOpts) -> Result<Vec<Vec<f64>>> {
    let ctx = DensityContext::new(opts, &prep.dims)?;
    let pooled: Vec<_> = draws.all().collect();
    subset
        .par_iter()
        .map(|&g| {
            let params = draws.params_of(pooled[g])?;
            (0..prep.n()).map(|i| marginal_log_density(prep, i, &params, &ctx)).collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// The evaluation view of `data` matching a fit: same method, same time standardization.
pub fn prepared_for(draws: &PosteriorDraws, data: &crate::data::PanelData) -> Result<Prepared> {
    let frame = &draws.meta.frame;
    let prep = Prepared::with_time(data, &draws.meta.spec, frame.time_mean, frame.time_sd)?;
    let ids: Vec<&String> = prep.patients.iter().map(|p| &p.id).collect();
    if ids.len() != frame.patient_ids.len() || ids.iter().zip(&frame.patient_ids).any(|(a, b)| *a != b) {
        return Err(Error::InvalidData("data patients do not match the patients the draws were fitted to".into()));
    }
    Ok(prep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Method, ModelSpec, PanelData, Patient, Window};
    use crate::kernels::std_normal_cdf;
    use crate::simulator::{scenario_config, simulate_dataset, Scenario};
    use approx::assert_abs_diff_eq;

    fn ctx(opts: MarginalDensityOpts, q: usize) -> DensityContext {
        let dims = Dims { classes: 1, outcomes: 1, windows: 2, s: 1, e: 1, p: 2, ph: 1, q };
        DensityContext::new(&opts, &dims).unwrap()
    }

    #[test]
    fn option_bounds() {
        assert!(MarginalDensityOpts { nodes: 4, ..Default::default() }.validate().is_err());
        assert!(MarginalDensityOpts { nodes: 3, ..Default::default() }.validate().is_err());
        assert!(MarginalDensityOpts { mc_draws: 49, ..Default::default() }.validate().is_err());
        assert!(MarginalDensityOpts::default().validate().is_ok());
    }

    #[test]
    fn zero_variance_collapses_to_the_integrand() {
        let c = ctx(MarginalDensityOpts::default(), 1);
        let f = |v: &[f64]| ln_std_normal_cdf(0.4 + v[0]) + ln_std_normal_cdf(-1.2 + v[0]);
        let got = c.log_normal_expectation(&SymMatrix::from_diagonal(&[0.0]), 0, f).unwrap();
        assert_abs_diff_eq!(got, f(&[0.0]), epsilon = 1e-10);
    }

    #[test]
    fn probit_random_intercept_integral() {
        let c = ctx(MarginalDensityOpts::default(), 1);
        let got = c.log_normal_expectation(&SymMatrix::from_diagonal(&[0.25]), 0, |v| ln_std_normal_cdf(0.3 + v[0])).unwrap();
        assert_abs_diff_eq!(got.exp(), std_normal_cdf(0.3 / 1.25f64.sqrt()), epsilon = 1e-10);
        assert_abs_diff_eq!(got.exp(), 0.6057, epsilon = 1e-4);
    }

    #[test]
    fn tensor_quadrature_and_monte_carlo_agree_with_closed_form() {
        // E Φ(a + v₁ + v₂) = Φ(a / √(1 + 1ᵀC1))
        let cov = SymMatrix::from_rows(&[vec![0.5, 0.2], vec![0.2, 0.3]]).unwrap();
        let target = std_normal_cdf(-0.4 / (1.0f64 + 0.5 + 0.3 + 0.4).sqrt());
        let f = |v: &[f64]| ln_std_normal_cdf(-0.4 + v[0] + v[1]);
        let quad = ctx(MarginalDensityOpts { integration: Integration::Quadrature, ..Default::default() }, 2);
        assert_abs_diff_eq!(quad.log_normal_expectation(&cov, 0, f).unwrap().exp(), target, epsilon = 1e-8);
        let mc = ctx(MarginalDensityOpts { mc_draws: 100_000, ..Default::default() }, 2);
        let got = mc.log_normal_expectation(&cov, 3, f).unwrap().exp();
        // Φ(·) ∈ [0, 1] so the Monte Carlo sd is at most 0.5/√n
        assert!((got - target).abs() < 3.0 * 0.5 / (100_000f64).sqrt());
    }

    #[test]
    fn single_cell_outcome_density() {
        // one window, one outcome: y ~ N(η, Ψ + Σ) in each class, class weights Φ(±δ)
        let pat = Patient { id: "a".into(), w: vec![1.0], u: vec![1.0], windows: vec![
            Window { time: 1.0, visit: true, response: vec![true], y: vec![Some(0.7)] },
            Window::unvisited(2.0, 1),
        ] };
        let data = PanelData::new(1, 2, vec![pat]).unwrap();
        let prep = Prepared::new(&data, &ModelSpec::new(2, Method::Mar)).unwrap();
        let t = prep.patients[0].xh_row(0, prep.dims.ph)[0];
        let params = GlobalParams {
            delta: vec![vec![0.3]],
            beta: vec![vec![vec![0.5], vec![-0.2]]],
            eta: vec![vec![vec![1.0], vec![-1.0]]],
            sigma: vec![SymMatrix::from_diagonal(&[0.5]), SymMatrix::from_diagonal(&[1.5])],
            psi: vec![vec![SymMatrix::from_diagonal(&[0.6])], vec![SymMatrix::from_diagonal(&[0.4])]],
            visit: None,
            response: vec![None],
        };
        let c = DensityContext::new(&MarginalDensityOpts::default(), &prep.dims).unwrap();
        let got = marginal_log_density(&prep, 0, &params, &c).unwrap();
        let npdf = |y: f64, m: f64, v: f64| (-(y - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let want = std_normal_cdf(0.3) * npdf(0.7, 1.0 + 0.5 * t, 1.1) + std_normal_cdf(-0.3) * npdf(0.7, -1.0 - 0.2 * t, 1.9);
        assert_abs_diff_eq!(got, want.ln(), epsilon = 1e-10);
    }

    fn s0_setup() -> (Prepared, GlobalParams) {
        let cfg = scenario_config(Scenario::S0);
        let data = simulate_dataset(&cfg, 8, 5, None).unwrap();
        let spec = ModelSpec::new(2, Method::Mnar);
        let flags = spec.response_flags(&data);
        let prep = Prepared::new(&data, &spec).unwrap();
        (prep, cfg.centered_params(true, &flags).unwrap())
    }

    #[test]
    fn node_doubling_is_stable() {
        let (prep, params) = s0_setup();
        let coarse = DensityContext::new(&MarginalDensityOpts::default(), &prep.dims).unwrap();
        let fine = DensityContext::new(&MarginalDensityOpts { nodes: 41, ..Default::default() }, &prep.dims).unwrap();
        for i in 0..prep.n() {
            let a = marginal_log_density(&prep, i, &params, &coarse).unwrap();
            let b = marginal_log_density(&prep, i, &params, &fine).unwrap();
            assert!((a - b).abs() < 1e-6, "patient {i}: {a} vs {b}");
        }
    }

    #[test]
    fn hermite_matches_monte_carlo_on_a_simulated_patient() {
        let (prep, params) = s0_setup();
        let pat = &prep.patients[2];
        let (p, q) = (prep.dims.p, prep.dims.q);
        let visit = params.visit.as_ref().unwrap();
        let lik = |tau: f64| -> f64 {
            (0..prep.dims.windows)
                .map(|j| {
                    let m = dot(pat.x_row(j, p), &visit.phi[0]) + pat.z_row(j, q)[0] * tau;
                    ln_std_normal_cdf(if pat.visit[j] { m } else { -m })
                })
                .sum()
        };
        let c = DensityContext::new(&MarginalDensityOpts::default(), &prep.dims).unwrap();
        let gh = c.log_normal_expectation(&visit.omega[0], 0, |v| lik(v[0])).unwrap().exp();
        let mut rng = RngStream::new(77, 0);
        let sd = visit.omega[0].get(0, 0).sqrt();
        let vals: Vec<f64> = (0..100_000).map(|_| lik(sd * std_normal(&mut rng)).exp()).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        assert!((gh - mean).abs() < 3.0 * se, "{gh} vs {mean} ± {se}");
    }

    #[test]
    fn class_relabeling_leaves_two_class_density_unchanged() {
        let (prep, params) = s0_setup();
        let swapped = params.permuted(&[1, 0]);
        let c = DensityContext::new(&MarginalDensityOpts::default(), &prep.dims).unwrap();
        for i in 0..prep.n() {
            let a = marginal_log_density(&prep, i, &params, &c).unwrap();
            let b = marginal_log_density(&prep, i, &swapped, &c).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn subsets_are_even_and_bounded() {
        assert_eq!(draw_subset(10, Some(5)), vec![0, 2, 4, 6, 8]);
        assert_eq!(draw_subset(3, Some(5)), vec![0, 1, 2]);
        assert_eq!(draw_subset(4, None).len(), 4);
    }
}
