//! Completed and replicated datasets per retained draw, and the predictive p-value.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discrepancy::{discrepancy, window_mean};
use crate::data::PanelData;
use crate::error::{Error, Result};
use crate::eval::prepared_for;
use crate::gibbs::{Draw, GlobalParams, PosteriorDraws, Prepared};
use crate::kernels::{sample_mvn, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Observed,
    /// Visited window with a missing response.
    Imputed,
    /// Drawn from the class model at a window without a visit.
    Unvisited,
}

/// Outcomes at every (patient, window, outcome) for one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletedDataset {
    pub outcomes: usize,
    pub windows: usize,
    /// Per patient, J·R values indexed j·R + r.
    pub values: Vec<Vec<f64>>,
    pub provenance: Vec<Vec<Provenance>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcOpts {
    pub seed: u64,
    /// Draws whose completed and replicated values are exported for histograms.
    pub hist_iters: usize,
}

impl Default for PpcOpts {
    fn default() -> Self {
        PpcOpts { seed: 1, hist_iters: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcPair {
    /// 1-based chain.
    pub chain: usize,
    pub iteration: u32,
    pub t_completed: f64,
    pub t_replicated: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Completed,
    Replicated,
}

/// One histogram value; class, window and outcome are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistRow {
    pub chain: usize,
    pub iteration: u32,
    pub patient: String,
    pub class: usize,
    pub window: usize,
    pub outcome: usize,
    pub source: Source,
    /// Set for completed values only.
    pub provenance: Option<Provenance>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpcResult {
    pub pairs: Vec<PpcPair>,
    pub p_value: f64,
    pub histogram: Vec<HistRow>,
}

/// Share of pairs with T_rep ≥ T_comp.
pub fn p_value(pairs: &[PpcPair]) -> f64 {
    if pairs.is_empty() {
        return f64::NAN;
    }
    pairs.iter().filter(|p| p.t_replicated >= p.t_completed).count() as f64 / pairs.len() as f64
}

/// Random effects of patient `i` from a flat latent vector.
fn effects_of(b: &[f64], i: usize, width: usize) -> &[f64] {
    &b[i * width..(i + 1) * width]
}

/// Observed values, the draw's stored imputations at visited windows, and
/// class-model draws at unvisited windows.
pub fn completed_dataset<R: Rng + ?Sized>(prep: &Prepared, params: &GlobalParams, draw: &Draw, rng: &mut R) -> Result<CompletedDataset> {
    let lat = draw.latents.as_ref().ok_or_else(|| Error::invalid("posterior predictive checks need draws stored with latents"))?;
    let (rr, jj, q) = (prep.dims.outcomes, prep.dims.windows, prep.dims.q);
    let mut values = Vec::with_capacity(prep.n());
    let mut provenance = Vec::with_capacity(prep.n());
    let mut mu = vec![0.0; rr];
    for (i, pat) in prep.patients.iter().enumerate() {
        let k = draw.classes[i] as usize;
        let b_i = effects_of(&lat.b, i, rr * q);
        let mut y = pat.y.clone();
        let mut prov = vec![Provenance::Observed; jj * rr];
        for (m, &cell) in pat.missing.iter().enumerate() {
            y[cell] = lat.imputed[pat.missing_offset + m];
            prov[cell] = Provenance::Imputed;
        }
        for j in (0..jj).filter(|&j| !pat.visit[j]) {
            window_mean(pat, params, b_i, j, k, &mut mu);
            let v = sample_mvn(&mu, &params.sigma[k], rng)?;
            y[j * rr..(j + 1) * rr].copy_from_slice(&v);
            prov[j * rr..(j + 1) * rr].fill(Provenance::Unvisited);
        }
        values.push(y);
        provenance.push(prov);
    }
    Ok(CompletedDataset { outcomes: rr, windows: jj, values, provenance })
}

/// A fresh dataset at every window from the draw's classes, random effects and Σ.
pub fn replicate<R: Rng + ?Sized>(prep: &Prepared, params: &GlobalParams, classes: &[usize], b: &[f64], rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let (rr, jj, q) = (prep.dims.outcomes, prep.dims.windows, prep.dims.q);
    let mut mu = vec![0.0; rr];
    prep.patients
        .iter()
        .enumerate()
        .map(|(i, pat)| {
            let mut y = vec![0.0; jj * rr];
            for j in 0..jj {
                window_mean(pat, params, effects_of(b, i, rr * q), j, classes[i], &mut mu);
                y[j * rr..(j + 1) * rr].copy_from_slice(&sample_mvn(&mu, &params.sigma[classes[i]], rng)?);
            }
            Ok(y)
        })
        .collect()
}

struct Evaluated {
    pair: PpcPair,
    hist: Vec<HistRow>,
}

fn evaluate_draw(prep: &Prepared, draws: &PosteriorDraws, chain: usize, draw: &Draw, stream: u64, seed: u64, export: bool) -> Result<Evaluated> {
    let mut rng = RngStream::new(seed, stream);
    let params = draws.params_of(draw)?;
    let completed = completed_dataset(prep, &params, draw, &mut rng)?;
    let classes: Vec<usize> = draw.classes.iter().map(|&c| c as usize).collect();
    let b = &draw.latents.as_ref().expect("checked by completed_dataset").b;
    let replicated = replicate(prep, &params, &classes, b, &mut rng)?;
    let pair = PpcPair {
        chain: chain + 1,
        iteration: draw.iteration,
        t_completed: discrepancy(prep, &completed.values, &params, &classes, b)?,
        t_replicated: discrepancy(prep, &replicated, &params, &classes, b)?,
    };
    let mut hist = Vec::new();
    if export {
        let rr = prep.dims.outcomes;
        for (i, pat) in prep.patients.iter().enumerate() {
            for cell in 0..completed.values[i].len() {
                let base = HistRow {
                    chain: chain + 1,
                    iteration: draw.iteration,
                    patient: pat.id.clone(),
                    class: classes[i] + 1,
                    window: cell / rr + 1,
                    outcome: cell % rr + 1,
                    source: Source::Completed,
                    provenance: Some(completed.provenance[i][cell]),
                    value: completed.values[i][cell],
                };
                hist.push(HistRow { source: Source::Replicated, provenance: None, value: replicated[i][cell], ..base.clone() });
                hist.push(base);
            }
        }
    }
    Ok(Evaluated { pair, hist })
}

/// T pairs for every draw that carries latents; histogram rows for
/// `opts.hist_iters` of them chosen at random.
pub fn run_ppc(draws: &PosteriorDraws, data: &PanelData, opts: &PpcOpts) -> Result<PpcResult> {
    let prep = prepared_for(draws, data)?;
    let usable: Vec<(usize, usize, &Draw)> = draws
        .chains
        .iter()
        .enumerate()
        .flat_map(|(c, chain)| chain.iter().map(move |d| (c, d)))
        .enumerate()
        .filter(|(_, (_, d))| d.latents.is_some())
        .map(|(g, (c, d))| (g, c, d))
        .collect();
    if usable.is_empty() {
        return Err(Error::invalid("posterior predictive checks need draws stored with latents"));
    }
    let mut pick = RngStream::new(opts.seed, u64::MAX);
    let chosen = sample(&mut pick, usable.len(), opts.hist_iters.min(usable.len())).into_vec();
    let results = usable
        .par_iter()
        .enumerate()
        .map(|(u, &(g, c, d))| evaluate_draw(&prep, draws, c, d, g as u64, opts.seed, chosen.contains(&u)))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::with_capacity(results.len());
    let mut histogram = Vec::new();
    for r in results {
        pairs.push(r.pair);
        histogram.extend(r.hist);
    }
    Ok(PpcResult { p_value: p_value(&pairs), pairs, histogram })
}

pub fn write_ppc_csv<W: Write>(pairs: &[PpcPair], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in pairs {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ppc_csv<R: Read>(r: R) -> Result<Vec<PpcPair>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn save_ppc_csv(pairs: &[PpcPair], path: impl AsRef<Path>) -> Result<()> {
    write_ppc_csv(pairs, std::fs::File::create(path)?)
}

pub fn load_ppc_csv(path: impl AsRef<Path>) -> Result<Vec<PpcPair>> {
    read_ppc_csv(std::fs::File::open(path)?)
}

pub fn write_histogram_csv<W: Write>(rows: &[HistRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_histogram_csv(rows: &[HistRow], path: impl AsRef<Path>) -> Result<()> {
    write_histogram_csv(rows, std::fs::File::create(path)?)
}
