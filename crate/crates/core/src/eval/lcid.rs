//! Prior-versus-posterior draws of the class-membership coefficients.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gibbs::PosteriorDraws;
use crate::kernels::{sample_mvn, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcidRow {
    pub parameter: String,
    /// "prior" or "posterior".
    pub source: String,
    pub value: f64,
}

/// One posterior row per retained draw of every δ coefficient, and as many
/// fresh draws from its prior.
pub fn lcid_rows(draws: &PosteriorDraws, seed: u64) -> Result<Vec<LcidRow>> {
    let layout = &draws.meta.layout;
    let dims = layout.dims;
    let prior = draws.meta.priors.resolve(&dims)?;
    let names = &draws.meta.param_names;
    let total = draws.total();
    let mut rows = Vec::new();
    let mut rng = RngStream::new(seed, 0);
    let zero = vec![0.0; dims.s];
    for k in 0..dims.classes.saturating_sub(1) {
        let prior_draws: Vec<Vec<f64>> = (0..total).map(|_| sample_mvn(&zero, &prior.sigma_delta, &mut rng)).collect::<Result<_>>()?;
        for c in 0..dims.s {
            let idx = k * dims.s + c;
            let name = &names[idx];
            rows.extend(draws.all().map(|d| LcidRow { parameter: name.clone(), source: "posterior".into(), value: d.params[idx] }));
            rows.extend(prior_draws.iter().map(|v| LcidRow { parameter: name.clone(), source: "prior".into(), value: v[c] }));
        }
    }
    Ok(rows)
}

pub fn write_lcid_csv<W: Write>(rows: &[LcidRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_lcid_csv(rows: &[LcidRow], path: impl AsRef<Path>) -> Result<()> {
    write_lcid_csv(rows, std::fs::File::create(path)?)
}
