//! Retained draws and their binary file format.
//!
//! File layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "SPGMMDRW"
//! version  u32      currently 1
//! hlen     u64      length of the JSON header in bytes
//! header   hlen bytes of UTF-8 JSON: {"meta": DrawsMeta, "counts": [draws per chain]}
//! records  for each chain, for each draw:
//!            iteration  u32
//!            params     f64 × layout length
//!            classes    u16 × n            (0-based)
//!            probs      f64 × n·K          (row-major by patient)
//!            latent     u8                 (0 or 1)
//!            if latent = 1:
//!              b        f64 × n·R·q
//!              tau      f64 × n·q          (only when the visit model is on)
//!              kappa    f64 × n·R·q        (only when some response model is on)
//!              imputed  f64 × missing cells
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::options::McmcOptions;
use super::params::{GlobalParams, Layout};
use super::prepared::{Cell, FitFrame};
use crate::data::{ModelSpec, NaiveReport, Priors};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SPGMMDRW";
pub const FORMAT_VERSION: u32 = 1;

/// Per-patient latent values of one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Latents {
    /// n·R·q random effects, indexed ((i·R + r)·q + g).
    pub b: Vec<f64>,
    /// n·q visit random effects (empty without a visit model).
    pub tau: Vec<f64>,
    /// n·R·q response random effects (empty without response models).
    pub kappa: Vec<f64>,
    /// One value per missing cell, in `DrawsMeta::missing_cells` order.
    pub imputed: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    /// 1-based sampler iteration.
    pub iteration: u32,
    pub params: Vec<f64>,
    /// 0-based class labels.
    pub classes: Vec<u16>,
    /// n·K class-assignment probabilities, row-major by patient.
    pub class_probs: Vec<f64>,
    pub latents: Option<Latents>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawsMeta {
    pub spec: ModelSpec,
    pub priors: Priors,
    pub options: McmcOptions,
    pub layout: Layout,
    pub param_names: Vec<String>,
    pub frame: FitFrame,
    pub missing_cells: Vec<Cell>,
    pub naive_report: Option<NaiveReport>,
}

impl DrawsMeta {
    pub fn n(&self) -> usize {
        self.frame.patient_ids.len()
    }

    pub fn classes(&self) -> usize {
        self.layout.dims.classes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub meta: DrawsMeta,
    pub chains: Vec<Vec<Draw>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: DrawsMeta,
    counts: Vec<usize>,
}

impl PosteriorDraws {
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.meta.param_names.iter().position(|n| n == name)
    }

    /// Every draw of every chain, chain-major.
    pub fn all(&self) -> impl Iterator<Item = &Draw> {
        self.chains.iter().flatten()
    }

    pub fn total(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    /// One parameter's trace per chain.
    pub fn series(&self, index: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.iter().map(|d| d.params[index]).collect()).collect()
    }

    pub fn params_of(&self, draw: &Draw) -> Result<GlobalParams> {
        self.meta.layout.unflatten(&draw.params)
    }

    /// Posterior mean of the flat parameter vector over all chains.
    pub fn mean_params(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.meta.param_names.len()];
        let n = self.total().max(1) as f64;
        for d in self.all() {
            for (a, v) in acc.iter_mut().zip(&d.params) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Posterior mean of the class-assignment probabilities (n·K).
    pub fn mean_class_probs(&self) -> Vec<f64> {
        let len = self.meta.n() * self.meta.classes();
        let mut acc = vec![0.0; len];
        let n = self.total().max(1) as f64;
        for d in self.all() {
            for (a, v) in acc.iter_mut().zip(&d.class_probs) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    fn latent_lengths(&self) -> (usize, usize, usize, usize) {
        let d = &self.meta.layout.dims;
        let n = self.meta.n();
        let tau = if self.meta.layout.visit { n * d.q } else { 0 };
        let kappa = if self.meta.layout.response.iter().any(|&f| f) { n * d.outcomes * d.q } else { 0 };
        (n * d.outcomes * d.q, tau, kappa, self.meta.missing_cells.len())
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let header = serde_json::to_vec(&Header {
            meta: self.meta.clone(),
            counts: self.chains.iter().map(Vec::len).collect(),
        })?;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        let (nb, nt, nk, nm) = self.latent_lengths();
        let n_params = self.meta.param_names.len();
        let n = self.meta.n();
        let probs = n * self.meta.classes();
        let put = |w: &mut BufWriter<W>, v: &[f64]| -> Result<()> {
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
            Ok(())
        };
        for chain in &self.chains {
            for d in chain {
                if d.params.len() != n_params || d.classes.len() != n || d.class_probs.len() != probs {
                    return Err(Error::Format("draw does not match the header dimensions".into()));
                }
                w.write_all(&d.iteration.to_le_bytes())?;
                put(&mut w, &d.params)?;
                for c in &d.classes {
                    w.write_all(&c.to_le_bytes())?;
                }
                put(&mut w, &d.class_probs)?;
                match &d.latents {
                    None => w.write_all(&[0u8])?,
                    Some(l) => {
                        if (l.b.len(), l.tau.len(), l.kappa.len(), l.imputed.len()) != (nb, nt, nk, nm) {
                            return Err(Error::Format("latent block does not match the header dimensions".into()));
                        }
                        w.write_all(&[1u8])?;
                        put(&mut w, &l.b)?;
                        put(&mut w, &l.tau)?;
                        put(&mut w, &l.kappa)?;
                        put(&mut w, &l.imputed)?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a draws file (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported draws format version {version}")));
        }
        r.read_exact(&mut b8)?;
        let hlen = u64::from_le_bytes(b8) as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header: Header = serde_json::from_slice(&hbuf)?;
        let mut out = PosteriorDraws { meta: header.meta, chains: Vec::new() };
        let (nb, nt, nk, nm) = out.latent_lengths();
        let n_params = out.meta.param_names.len();
        let n = out.meta.n();
        let probs = n * out.meta.classes();
        let mut vec_f64 = |r: &mut BufReader<R>, len: usize| -> Result<Vec<f64>> {
            let mut v = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut b8)?;
                v.push(f64::from_le_bytes(b8));
            }
            Ok(v)
        };
        for &count in &header.counts {
            let mut chain = Vec::with_capacity(count);
            for _ in 0..count {
                let mut it = [0u8; 4];
                r.read_exact(&mut it)?;
                let params = vec_f64(&mut r, n_params)?;
                let mut classes = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut c = [0u8; 2];
                    r.read_exact(&mut c)?;
                    classes.push(u16::from_le_bytes(c));
                }
                let class_probs = vec_f64(&mut r, probs)?;
                let mut flag = [0u8; 1];
                r.read_exact(&mut flag)?;
                let latents = match flag[0] {
                    0 => None,
                    1 => Some(Latents {
                        b: vec_f64(&mut r, nb)?,
                        tau: vec_f64(&mut r, nt)?,
                        kappa: vec_f64(&mut r, nk)?,
                        imputed: vec_f64(&mut r, nm)?,
                    }),
                    other => return Err(Error::Format(format!("bad latent flag {other}"))),
                };
                chain.push(Draw { iteration: u32::from_le_bytes(it), params, classes, class_probs, latents });
            }
            out.chains.push(chain);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after the last draw".into()));
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
