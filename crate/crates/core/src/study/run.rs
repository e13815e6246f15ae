//! Replication study driver.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::align::{align_labels, misclassification};
use super::metrics::{class_coefficient, five_numbers, marginal_effects, metric, Estimate};
use super::report::{MetricRow, MisclassRow, StudyReport};
use crate::data::{Method, ModelSpec, PanelData, Priors};
use crate::error::{Error, Result};
use crate::gibbs::{fit, McmcOptions, PosteriorDraws};
use crate::kernels::RngStream;
use crate::simulator::{marginal_truth, scenario_config, simulate_dataset, GenerativeConfig, Scenario};

/// Environment variable that caps the worker threads of a study.
pub const THREADS_ENV: &str = "SPGMM_THREADS";

/// Largest share of failed fits a study tolerates.
pub const FAILED_FIT_BUDGET: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub patients: usize,
    pub mcmc: McmcOptions,
    #[serde(default)]
    pub priors: Priors,
    pub seed: u64,
    /// Worker threads; falls back to the environment variable, then to rayon's default.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            scenarios: vec![Scenario::S0],
            methods: Method::ALL.to_vec(),
            replications: 100,
            patients: 500,
            mcmc: McmcOptions { iterations: 3000, burn_in: 1000, store_latents: false, ..McmcOptions::default() },
            priors: Priors::default(),
            seed: 42,
            threads: None,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("a study needs at least one replication"));
        }
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("a study needs at least one scenario and one method"));
        }
        if self.patients == 0 {
            return Err(Error::invalid("a study needs at least one patient per dataset"));
        }
        self.mcmc.validate()
    }

    fn threads(&self) -> Option<usize> {
        self.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok())).filter(|&t| t > 0)
    }
}

/// One fit's scores: class coefficients `[r][k][intercept, slope]` after
/// alignment, class-averaged effects `[r][intercept, slope]` and misclassification.
#[derive(Clone, Debug, PartialEq)]
pub struct FitScore {
    pub class: Vec<Vec<[Estimate; 2]>>,
    pub marginal: Vec<[Estimate; 2]>,
    pub misclassification: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedFit {
    pub scenario: Scenario,
    pub method: Method,
    /// 1-based replication.
    pub replication: usize,
    pub error: String,
}

/// Scores a fit against the generating classes carried by `data`.
pub fn score_fit(draws: &PosteriorDraws, data: &PanelData) -> Result<FitScore> {
    let truth = data.truth.as_ref().ok_or_else(|| Error::InvalidData("scoring needs simulated data with a truth block".into()))?;
    let kk = draws.meta.classes();
    let sub = truth.restrict(&draws.meta.frame.patient_ids);
    let true_classes: Vec<usize> = sub.classes.iter().map(|c| c - 1).collect();
    let probs = draws.mean_class_probs();
    let modal: Vec<usize> = probs
        .chunks(kk)
        .map(|row| row.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (k, &p)| if p > b.1 { (k, p) } else { b }).0)
        .collect();
    let perm = align_labels(&modal, &true_classes, kk)?;
    let params: Vec<_> = draws.all().map(|d| draws.params_of(d)).collect::<Result<_>>()?;
    let rr = draws.meta.layout.dims.outcomes;
    let class = (0..rr)
        .map(|r| {
            (0..kk)
                .map(|k| {
                    [false, true].map(|slope| {
                        let trace: Vec<f64> = params.iter().map(|p| class_coefficient(p, r, perm[k], slope)).collect();
                        Estimate::from_draws(&trace)
                    })
                })
                .collect()
        })
        .collect();
    let w: Vec<Vec<f64>> = data.patients.iter().map(|p| p.w.clone()).collect();
    Ok(FitScore { class, marginal: marginal_effects(draws, &w)?, misclassification: misclassification(&modal, &true_classes, &perm) })
}

struct Replication {
    scores: Vec<std::result::Result<FitScore, String>>,
}

fn run_replication(cfg: &StudyConfig, gen: &GenerativeConfig, scenario_index: usize, rep: usize) -> Result<Replication> {
    let mut seeds = RngStream::new(cfg.seed, scenario_index as u64).child(rep as u64);
    let data = simulate_dataset(gen, cfg.patients, seeds.next_u64(), None)?;
    let classes = gen.classes();
    let scores = cfg
        .methods
        .iter()
        .map(|&method| {
            let opts = McmcOptions { seed: seeds.next_u64(), progress: false, ..cfg.mcmc.clone() };
            fit(&data, &ModelSpec::new(classes, method), &cfg.priors, &opts)
                .and_then(|draws| score_fit(&draws, &data))
                .map_err(|e| e.to_string())
        })
        .collect();
    Ok(Replication { scores })
}

fn parameter_name(r: usize, k: usize, l: usize) -> String {
    format!("beta_{}{}{}", r + 1, k + 1, l + 1)
}

fn marginal_name(r: usize, l: usize) -> String {
    format!("marginal_{}{}", r + 1, l + 1)
}

/// Simulates, fits every method on the same draw (FULL on its unmasked
/// version) and aggregates metrics. Failed fits are listed and excluded.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let body = || -> Result<StudyReport> {
        let mut report = StudyReport::default();
        for (si, &scenario) in cfg.scenarios.iter().enumerate() {
            let gen = scenario_config(scenario);
            let truth_marginal = marginal_truth(&gen, 200_000, cfg.seed)?;
            let reps = (0..cfg.replications)
                .into_par_iter()
                .map(|rep| run_replication(cfg, &gen, si, rep))
                .collect::<Result<Vec<_>>>()?;
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let mut scores = Vec::new();
                for (rep, r) in reps.iter().enumerate() {
                    report.total_fits += 1;
                    match &r.scores[mi] {
                        Ok(s) => scores.push(s),
                        Err(e) => report.failures.push(FailedFit { scenario, method, replication: rep + 1, error: e.clone() }),
                    }
                }
                let label = |s: &str| (scenario.to_string(), method.to_string(), s.to_string());
                for r in 0..gen.outcomes() {
                    for k in 0..gen.classes() {
                        for l in 0..2 {
                            let est: Vec<Estimate> = scores.iter().map(|s| s.class[r][k][l]).collect();
                            let (sc, me, pa) = label(&parameter_name(r, k, l));
                            report.rows.push(MetricRow::new(sc, r + 1, pa, me, gen.beta[r][k][l], metric(gen.beta[r][k][l], &est), est.len()));
                        }
                    }
                    for l in 0..2 {
                        let truth = if l == 0 { truth_marginal.intercept[r] } else { truth_marginal.slope[r] };
                        let est: Vec<Estimate> = scores.iter().map(|s| s.marginal[r][l]).collect();
                        let (sc, me, pa) = label(&marginal_name(r, l));
                        report.rows.push(MetricRow::new(sc, r + 1, pa, me, truth, metric(truth, &est), est.len()));
                    }
                }
                let mis: Vec<f64> = scores.iter().map(|s| s.misclassification).collect();
                if !mis.is_empty() {
                    let q = five_numbers(&mis);
                    report.misclassification.push(MisclassRow {
                        scenario: scenario.to_string(),
                        method: method.to_string(),
                        fits: mis.len(),
                        min: q[0],
                        q25: q[1],
                        median: q[2],
                        q75: q[3],
                        max: q[4],
                    });
                }
            }
        }
        report.rows.sort_by(|a, b| (&a.scenario, a.outcome, &a.parameter).cmp(&(&b.scenario, b.outcome, &b.parameter)));
        report.mark_best();
        Ok(report)
    };
    match cfg.threads() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}
