//! Starting values for a chain.

use rand::Rng;

use super::params::{GlobalParams, ResponseParams, VisitParams};
use super::prepared::Prepared;
use super::sampler::Sampler;
use super::state::ParameterState;
use crate::data::ResolvedPriors;
use crate::error::Result;
use crate::kernels::{sample_mvn, SymMatrix};

/// Per-patient mean of each observed outcome (NaN when the patient has none).
fn outcome_means(prep: &Prepared) -> Vec<Vec<f64>> {
    let rr = prep.dims.outcomes;
    prep.patients
        .iter()
        .map(|p| {
            (0..rr)
                .map(|r| {
                    let vals: Vec<f64> = p.visited.iter().map(|&j| p.y[j * rr + r]).filter(|v| v.is_finite()).collect();
                    if vals.is_empty() {
                        f64::NAN
                    } else {
                        vals.iter().sum::<f64>() / vals.len() as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// k-means++ seeding followed by Lloyd iterations on the rows of `points`.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    if n == 0 || k <= 1 {
        return vec![0; n];
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut centers = vec![points[rng.gen_range(0..n)].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| centers.iter().map(|c| dist(p, c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, v) in d2.iter().enumerate() {
                if t < *v {
                    pick = i;
                    break;
                }
                t -= v;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[next].clone());
    }
    let mut labels = vec![0; n];
    for _ in 0..50 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k).min_by(|&a, &b| dist(p, &centers[a]).total_cmp(&dist(p, &centers[b]))).unwrap_or(0);
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                for (d, v) in center.iter_mut().enumerate() {
                    *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn scaled_draw<R: Rng + ?Sized>(center: &[f64], cov: &SymMatrix<f64>, scale: f64, rng: &mut R) -> Result<Vec<f64>> {
    let zero = vec![0.0; center.len()];
    Ok(sample_mvn(&zero, cov, rng)?.iter().zip(center).map(|(d, c)| c + scale * d).collect())
}

/// Dispersed starting state for chain `chain`, with latents consistent with
/// the observed flags and missing responses already imputed once.
pub fn initial_state<R: Rng + ?Sized>(
    sampler: &Sampler<'_>,
    priors: &ResolvedPriors,
    chain: usize,
    dispersion: f64,
    rng: &mut R,
) -> Result<ParameterState> {
    let prep = sampler.prep;
    let d = prep.dims;
    let (kk, rr, q, e, jj, n) = (d.classes, d.outcomes, d.q, d.e, d.windows, prep.n());
    let scale = 0.1 * (1.0 + dispersion * chain as f64);

    let mut means = outcome_means(prep);
    for r in 0..rr {
        let seen: Vec<f64> = means.iter().map(|m| m[r]).filter(|v| v.is_finite()).collect();
        let fill = if seen.is_empty() { 0.0 } else { seen.iter().sum::<f64>() / seen.len() as f64 };
        for m in means.iter_mut() {
            if !m[r].is_finite() {
                m[r] = fill;
            }
        }
    }
    let classes = kmeans(&means, kk, rng);

    let delta = (1..kk).map(|_| scaled_draw(&vec![0.0; d.s], &priors.sigma_delta, scale, rng)).collect::<Result<_>>()?;
    let beta = (0..rr)
        .map(|_| (0..kk).map(|_| scaled_draw(&vec![0.0; d.ph], &priors.sigma_beta, scale, rng)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut b = vec![0.0; n * rr * q];
    for i in 0..n {
        for r in 0..rr {
            b[(i * rr + r) * q] = means[i][r];
        }
    }
    let mut eta = vec![vec![vec![0.0; q * e]; kk]; rr];
    for (r, eta_r) in eta.iter_mut().enumerate() {
        for (k, eta_rk) in eta_r.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| classes[i] == k).collect();
            if !members.is_empty() {
                eta_rk[0] = members.iter().map(|&i| b[(i * rr + r) * q]).sum::<f64>() / members.len() as f64;
            }
        }
    }

    let visit = if prep.models_visits() {
        Some(VisitParams {
            phi: (0..kk).map(|_| scaled_draw(&priors.mu_phi, &priors.sigma_phi, scale, rng)).collect::<Result<_>>()?,
            omega: vec![priors.s_omega.clone(); kk],
        })
    } else {
        None
    };
    let mut response = Vec::with_capacity(rr);
    for r in 0..rr {
        response.push(if prep.response_flags[r] {
            Some(ResponseParams {
                lambda: (0..kk).map(|_| scaled_draw(&vec![0.0; d.p], &priors.sigma_lambda, scale, rng)).collect::<Result<_>>()?,
                theta: vec![priors.s_theta.clone(); kk],
            })
        } else {
            None
        });
    }
    let params = GlobalParams {
        delta,
        beta,
        eta,
        sigma: vec![priors.s_sigma.clone(); kk],
        psi: vec![vec![priors.s_psi.clone(); rr]; kk],
        visit,
        response,
    };

    let mut xi = vec![-0.5; n * (kk - 1)];
    for (i, &c) in classes.iter().enumerate() {
        if c < kk - 1 {
            xi[i * (kk - 1) + c] = 0.5;
        }
    }
    let sign = |b: bool| if b { 0.5 } else { -0.5 };
    let mut xi_d = vec![0.0; n * jj];
    let mut xi_m = vec![0.0; n * rr * jj];
    for (i, p) in prep.patients.iter().enumerate() {
        for j in 0..jj {
            xi_d[i * jj + j] = sign(p.visit[j]);
            for r in 0..rr {
                xi_m[(i * rr + r) * jj + j] = sign(p.response[j * rr + r]);
            }
        }
    }
    let mut st = ParameterState {
        params,
        xi,
        classes,
        b,
        tau: vec![0.0; n * q],
        kappa: vec![0.0; n * rr * q],
        xi_d,
        xi_m,
        y: prep.patients.iter().map(|p| p.y.clone()).collect(),
        class_probs: vec![1.0 / kk as f64; n * kk],
    };
    sampler.impute_missing_responses(&mut st, rng)?;
    Ok(st)
}
