//! Synthetic panels from a generative configuration.

use rand::Rng;

use super::marginal::{marginal_truth, MarginalEffects};
use super::scenario::GenerativeConfig;
use super::truth::TruthBlock;
use crate::data::{PanelData, Patient, Window};
use crate::error::Result;
use crate::kernels::{sample_mvn, std_normal, RngStream};

/// Standardized window times: raw index 1..J, zero mean, unit population sd.
pub fn standardized_times(windows: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=windows).map(|j| j as f64).collect();
    let mean = raw.iter().sum::<f64>() / windows as f64;
    let sd = (raw.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / windows as f64).sqrt();
    raw.iter().map(|t| (t - mean) / sd).collect()
}

fn probit_draw<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> bool {
    eta + std_normal(rng) > 0.0
}

/// Simulates `n` patients. Outcomes are generated at every window and masked
/// afterwards; the returned panel carries the [`TruthBlock`].
///
/// Marginal truth is attached when `marginal` is given; see
/// [`simulate_with_truth`] for the variant that computes it.
pub fn simulate_dataset(cfg: &GenerativeConfig, n: usize, seed: u64, marginal: Option<MarginalEffects>) -> Result<PanelData> {
    cfg.validate()?;
    let j_count = cfg.windows;
    let r_count = cfg.outcomes();
    let k_count = cfg.classes();
    let times = standardized_times(j_count);
    let root = RngStream::new(seed, 0);
    let mut patients = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    let mut full_y = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = root.child(i as u64);
        let w = [1.0, std_normal(&mut rng)];
        // utilities ξ_k ~ N(wδ_k, 1); class K when all are negative
        let util: Vec<f64> = cfg.delta.iter().map(|d| d[0] * w[0] + d[1] * w[1] + std_normal(&mut rng)).collect();
        let k = util.iter().enumerate().fold((k_count - 1, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc }).0;
        let b: Vec<f64> = (0..r_count).map(|r| cfg.psi[k][r].sqrt() * std_normal(&mut rng)).collect();
        let tau = cfg.omega[k].sqrt() * std_normal(&mut rng);
        let kappa: Vec<f64> = (0..r_count)
            .map(|r| cfg.theta[r].as_ref().map_or(0.0, |t| t[k].sqrt() * std_normal(&mut rng)))
            .collect();
        let mut windows = Vec::with_capacity(j_count);
        let mut ys = Vec::with_capacity(j_count);
        for (j, &t) in times.iter().enumerate() {
            let mean: Vec<f64> = (0..r_count).map(|r| cfg.beta[r][k][0] + cfg.beta[r][k][1] * t + b[r]).collect();
            let y = sample_mvn(&mean, &cfg.sigma[k], &mut rng)?;
            let visit = probit_draw(cfg.phi[k][0] + cfg.phi[k][1] * t + tau, &mut rng);
            let response: Vec<bool> = (0..r_count)
                .map(|r| match &cfg.lambda[r] {
                    Some(l) => probit_draw(l[k][0] + l[k][1] * t + kappa[r], &mut rng),
                    None => true,
                })
                .collect();
            let response: Vec<bool> = response.into_iter().map(|m| m && visit).collect();
            let observed = (0..r_count).map(|r| if response[r] { Some(y[r]) } else { None }).collect();
            windows.push(Window { time: (j + 1) as f64, visit, response, y: observed });
            ys.push(y);
        }
        let id = format!("{}", i + 1);
        patients.push(Patient { id, w: w.to_vec(), u: vec![1.0], windows });
        classes.push(k + 1);
        full_y.push(ys);
    }
    let truth = TruthBlock {
        patient_ids: patients.iter().map(|p| p.id.clone()).collect(),
        classes,
        full_y,
        marginal,
        config: Some(cfg.clone()),
    };
    PanelData::new(r_count, j_count, patients)?.with_truth(truth)
}

/// [`simulate_dataset`] with marginal truth from 2·10⁵ covariate draws.
pub fn simulate_with_truth(cfg: &GenerativeConfig, n: usize, seed: u64) -> Result<PanelData> {
    let marginal = marginal_truth(cfg, 200_000, seed ^ 0x6d61_7267)?;
    simulate_dataset(cfg, n, seed, Some(marginal))
}

/// Missed-visit and missed-response fractions by true class.
#[derive(Clone, Debug, PartialEq)]
pub struct MissingnessRates {
    /// `missed_visit[k]`: unvisited windows over all windows of class-k patients.
    pub missed_visit: Vec<f64>,
    /// `missed_response[r][k]`: missing y_r over visited windows of class-k patients.
    pub missed_response: Vec<Vec<f64>>,
    pub class_share: Vec<f64>,
}

pub fn missingness_rates(data: &PanelData, classes: usize) -> Option<MissingnessRates> {
    let truth = data.truth.as_ref()?;
    let r_count = data.n_outcomes;
    let mut windows = vec![0usize; classes];
    let mut missed = vec![0usize; classes];
    let mut visited = vec![0usize; classes];
    let mut no_resp = vec![vec![0usize; classes]; r_count];
    let mut members = vec![0usize; classes];
    for (p, &c) in data.patients.iter().zip(&truth.classes) {
        let k = c - 1;
        members[k] += 1;
        for w in &p.windows {
            windows[k] += 1;
            if w.visit {
                visited[k] += 1;
                for r in 0..r_count {
                    if !w.response[r] {
                        no_resp[r][k] += 1;
                    }
                }
            } else {
                missed[k] += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
    Some(MissingnessRates {
        missed_visit: (0..classes).map(|k| ratio(missed[k], windows[k])).collect(),
        missed_response: (0..r_count).map(|r| (0..classes).map(|k| ratio(no_resp[r][k], visited[k])).collect()).collect(),
        class_share: (0..classes).map(|k| ratio(members[k], data.n_patients())).collect(),
    })
}
