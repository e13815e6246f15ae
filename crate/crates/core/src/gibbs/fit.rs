//! Running chains and collecting retained draws.

use rayon::prelude::*;

use super::draws::{Draw, DrawsMeta, Latents, PosteriorDraws};
use super::init::initial_state;
use super::options::McmcOptions;
use super::params::Layout;
use super::prepared::Prepared;
use super::sampler::Sampler;
use super::state::ParameterState;
use crate::data::{ModelSpec, PanelData, Priors, ResolvedPriors};
use crate::error::{Error, Result};
use crate::kernels::RngStream;

/// Fits `spec` to `data` and returns every retained draw of every chain.
pub fn fit(data: &PanelData, spec: &ModelSpec, priors: &Priors, opts: &McmcOptions) -> Result<PosteriorDraws> {
    let prep = Prepared::new(data, spec)?;
    fit_prepared(&prep, spec, priors, opts)
}

pub fn layout_of(prep: &Prepared) -> Layout {
    Layout { dims: prep.dims, visit: prep.models_visits(), response: prep.response_flags.clone() }
}

pub fn fit_prepared(prep: &Prepared, spec: &ModelSpec, priors: &Priors, opts: &McmcOptions) -> Result<PosteriorDraws> {
    opts.validate()?;
    let resolved = priors.resolve(&prep.dims)?;
    let layout = layout_of(prep);
    let run = |c: usize| run_chain(prep, &resolved, &layout, opts, c);
    let chains = if opts.chains > 1 {
        (0..opts.chains).into_par_iter().map(run).collect::<Result<Vec<_>>>()?
    } else {
        vec![run(0)?]
    };
    Ok(PosteriorDraws {
        meta: DrawsMeta {
            spec: spec.clone(),
            priors: priors.clone(),
            options: opts.clone(),
            param_names: layout.names(),
            layout,
            frame: prep.frame(),
            missing_cells: prep.missing_cells.clone(),
            naive_report: prep.naive_report.clone(),
        },
        chains,
    })
}

fn record(prep: &Prepared, layout: &Layout, st: &ParameterState, iteration: usize, latents: bool) -> Draw {
    let latents = latents.then(|| Latents {
        b: st.b.clone(),
        tau: if layout.visit { st.tau.clone() } else { Vec::new() },
        kappa: if layout.response.iter().any(|&f| f) { st.kappa.clone() } else { Vec::new() },
        imputed: prep
            .patients
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.missing.iter().map(move |&c| st.y[i][c]))
            .collect(),
    });
    Draw {
        iteration: (iteration + 1) as u32,
        params: layout.flatten(&st.params),
        classes: st.classes.iter().map(|&c| c as u16).collect(),
        class_probs: st.class_probs.clone(),
        latents,
    }
}

/// Runs one chain on its own random stream (seed, chain + 1).
pub fn run_chain(prep: &Prepared, priors: &ResolvedPriors, layout: &Layout, opts: &McmcOptions, chain: usize) -> Result<Vec<Draw>> {
    if prep.dims.classes > u16::MAX as usize {
        return Err(Error::TooManyClasses { classes: prep.dims.classes });
    }
    let sampler = Sampler::new(prep, priors)?;
    let mut rng = RngStream::new(opts.seed, chain as u64 + 1);
    let mut st = initial_state(&sampler, priors, chain, opts.dispersion, &mut rng)
        .map_err(|e| Error::Sampler { iteration: 0, source: Box::new(e) })?;
    let mut out = Vec::with_capacity(opts.retained());
    let step = (opts.iterations / 10).max(1);
    for it in 0..opts.iterations {
        sampler
            .sweep(&mut st, &mut rng)
            .map_err(|e| Error::Sampler { iteration: it + 1, source: Box::new(e) })?;
        if opts.keeps(it) {
            let keep_latents = opts.store_latents && out.len() % opts.latent_thin == 0;
            out.push(record(prep, layout, &st, it, keep_latents));
        }
        if opts.progress && (it + 1) % step == 0 {
            eprintln!("chain {}: iteration {}/{}", chain + 1, it + 1, opts.iterations);
        }
    }
    Ok(out)
}
