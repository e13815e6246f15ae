use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use spgmm::data::{load_panel_csv, save_panel_csv, Config, Method, ModelSpec, PanelData, Priors};
use spgmm::eval::{evaluate, lcid_rows, save_comparison_csv, save_lcid_csv, CriteriaOpts, MarginalDensityOpts};
use spgmm::gibbs::{fit, save_summary_csv, summarize, McmcOptions, PosteriorDraws};
use spgmm::ppc::{run_ppc, save_histogram_csv, save_ppc_csv, PpcOpts};
use spgmm::simulator::{scenario_config, simulate_with_truth, GenerativeConfig, Scenario, TruthBlock};
use spgmm::study::{run_study, StudyConfig};

#[derive(Parser)]
#[command(name = "spgmm", version, about = "Shared-parameter growth mixture models with informative missingness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a panel from a named scenario or a generative config.
    Simulate {
        #[arg(long, default_value = "S0")]
        scenario: Scenario,
        /// JSON generative config; overrides --scenario.
        #[arg(long)]
        generative: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the truth block (classes, unmasked outcomes, marginal truth).
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run the Gibbs sampler.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// JSON with `model` and optional `priors`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Truth block, needed for the full-data method.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Store per-patient latents every this many retained draws.
        #[arg(long, default_value_t = 1)]
        latent_thin: usize,
        #[arg(long)]
        no_latents: bool,
        #[arg(long)]
        progress: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// BIC, DIC3 and LPML for one or more fits of the same data.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        draws: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Evaluate DIC3 and LPML on at most this many evenly spaced draws.
        #[arg(long)]
        max_draws: Option<usize>,
        #[arg(long, default_value_t = 21)]
        nodes: usize,
    },
    /// Prior and posterior draws of the class-membership coefficients.
    Lcid {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Posterior predictive check with the multivariate MSE discrepancy.
    Ppc {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        hist: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        hist_iters: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Replication study over scenarios and methods.
    Study {
        /// Comma-separated scenario ids.
        #[arg(long, default_value = "S0", value_delimiter = ',')]
        scenario: Vec<Scenario>,
        #[arg(long, default_value = "full,naive,mar,mnar", value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 3000)]
        iters: usize,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Worker threads (defaults to SPGMM_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_data(path: &Path, truth: Option<&Path>, spec: Option<&ModelSpec>) -> Result<PanelData> {
    let data = load_panel_csv(path, spec).with_context(|| format!("reading {}", path.display()))?;
    match truth {
        Some(t) => {
            let block = TruthBlock::load_json(t).with_context(|| format!("reading {}", t.display()))?;
            Ok(data.with_truth(block)?)
        }
        None => Ok(data),
    }
}

fn load_draws(path: &Path) -> Result<PosteriorDraws> {
    PosteriorDraws::load(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { scenario, generative, n, seed, out, truth } => {
            let cfg: GenerativeConfig = match generative {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => scenario_config(scenario),
            };
            let data = simulate_with_truth(&cfg, n, seed)?;
            save_panel_csv(&data, &out)?;
            if let (Some(path), Some(block)) = (truth, &data.truth) {
                block.save_json(path)?;
            }
            println!("simulated {} patients × {} windows → {}", n, cfg.windows, out.display());
        }
        Command::Fit { data, config, truth, method, k, iters, burnin, thin, chains, seed, latent_thin, no_latents, progress, out, summary } => {
            let (mut spec, priors) = match config {
                Some(p) => {
                    let c = Config::load(&p).with_context(|| format!("reading {}", p.display()))?;
                    (c.model, c.priors)
                }
                None => (ModelSpec::new(2, Method::Mnar), Priors::default()),
            };
            if let Some(m) = method {
                spec.method = m;
            }
            if let Some(k) = k {
                spec.classes = k;
            }
            let panel = load_data(&data, truth.as_deref(), Some(&spec))?;
            let opts = McmcOptions {
                iterations: iters,
                burn_in: burnin,
                thin,
                chains,
                seed,
                progress,
                store_latents: !no_latents,
                latent_thin,
                ..McmcOptions::default()
            };
            let draws = fit(&panel, &spec, &priors, &opts)?;
            draws.save(&out)?;
            let rows = summarize(&draws);
            if let Some(s) = summary {
                save_summary_csv(&rows, s)?;
            }
            println!("{} draws of {} parameters → {}", draws.total(), rows.len(), out.display());
        }
        Command::Compare { draws, data, truth, out, max_draws, nodes } => {
            let opts = CriteriaOpts { density: MarginalDensityOpts { nodes, ..Default::default() }, max_draws, ..Default::default() };
            let mut rows = Vec::new();
            let mut panel: Option<PanelData> = None;
            for path in &draws {
                let d = load_draws(path)?;
                let p = match &panel {
                    Some(p) => p,
                    None => panel.insert(load_data(&data, truth.as_deref(), None)?),
                };
                let label = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                let row = evaluate(&d, p, &opts, &label)?;
                println!("{:<16} K={} BIC {:.1}  DIC3 {:.1}  LPML {:.1}", row.label, row.classes, row.bic, row.dic3, row.lpml);
                rows.push(row);
            }
            save_comparison_csv(&rows, &out)?;
        }
        Command::Lcid { draws, out, seed } => {
            let rows = lcid_rows(&load_draws(&draws)?, seed)?;
            save_lcid_csv(&rows, &out)?;
            println!("{} rows → {}", rows.len(), out.display());
        }
        Command::Ppc { draws, data, truth, out, hist, hist_iters, seed } => {
            let d = load_draws(&draws)?;
            let panel = load_data(&data, truth.as_deref(), None)?;
            let res = run_ppc(&d, &panel, &PpcOpts { seed, hist_iters })?;
            save_ppc_csv(&res.pairs, &out)?;
            if let Some(h) = hist {
                save_histogram_csv(&res.histogram, h)?;
            }
            println!("predictive p-value {:.3} over {} draws", res.p_value, res.pairs.len());
        }
        Command::Study { scenario, methods, reps, n, iters, burnin, seed, threads, out } => {
            if iters <= burnin {
                bail!("--iters must exceed --burnin");
            }
            let base = StudyConfig::default();
            let cfg = StudyConfig {
                scenarios: scenario,
                methods,
                replications: reps,
                patients: n,
                mcmc: McmcOptions { iterations: iters, burn_in: burnin, ..base.mcmc },
                seed,
                threads,
                ..base
            };
            let report = run_study(&cfg)?;
            report.save(&out)?;
            print!("{}", report.to_text());
            if report.failure_budget_exceeded() {
                eprintln!("error: {} of {} fits failed, above the 5% budget", report.failures.len(), report.total_fits);
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
