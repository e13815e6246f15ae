//! Multivariate mean-square-error discrepancy of completed outcomes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gibbs::{GlobalParams, Prepared, PreparedPatient};
use crate::kernels::Factored;

/// Σ over rows of rᵀ Σ⁻¹ r, the residuals given as consecutive rows of length R.
pub fn residual_discrepancy(resid: &[f64], sigma_inv: &DMatrix<f64>) -> f64 {
    let rr = sigma_inv.nrows();
    resid
        .chunks(rr)
        .map(|row| {
            let mut t = 0.0;
            for a in 0..rr {
                for b in 0..rr {
                    t += row[a] * sigma_inv[(a, b)] * row[b];
                }
            }
            t
        })
        .sum()
}

/// μ_ij for outcome r in class k given the patient's random effects `b_i`
/// (R·q values).
pub(crate) fn window_mean(pat: &PreparedPatient, params: &GlobalParams, b_i: &[f64], j: usize, k: usize, out: &mut [f64]) {
    let rr = params.beta.len();
    let ph = params.beta[0][k].len();
    let q = b_i.len() / rr;
    let xh = pat.xh_row(j, ph);
    let z = pat.z_row(j, q);
    for (r, o) in out.iter_mut().enumerate().take(rr) {
        let fixed: f64 = xh.iter().zip(&params.beta[r][k]).map(|(a, b)| a * b).sum();
        let random: f64 = z.iter().zip(&b_i[r * q..(r + 1) * q]).map(|(a, b)| a * b).sum();
        *o = fixed + random;
    }
}

/// T = Σᵢ Σ over visited windows (y − μ) Σ_{cᵢ}⁻¹ (y − μ)ᵀ.
///
/// `y[i]` holds J·R completed values (j·R + r); only visited windows are read.
/// `b` is indexed ((i·R + r)·q + g) as in the sampler state.
pub fn discrepancy(prep: &Prepared, y: &[Vec<f64>], params: &GlobalParams, classes: &[usize], b: &[f64]) -> Result<f64> {
    let inverses = params
        .sigma
        .iter()
        .map(|s| Factored::new(s).map(|f| f.inverse).map_err(|e| e.for_matrix("outcome covariance")))
        .collect::<Result<Vec<_>>>()?;
    let (rr, q) = (prep.dims.outcomes, prep.dims.q);
    let mut total = 0.0;
    let mut mu = vec![0.0; rr];
    let mut resid = Vec::new();
    for (i, pat) in prep.patients.iter().enumerate() {
        let k = classes[i];
        let b_i = &b[i * rr * q..(i + 1) * rr * q];
        resid.clear();
        for &j in &pat.visited {
            window_mean(pat, params, b_i, j, k, &mut mu);
            for r in 0..rr {
                let v = y[i][j * rr + r];
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!("patient {} has no completed value at window {}", pat.id, j + 1)));
                }
                resid.push(v - mu[r]);
            }
        }
        total += residual_discrepancy(&resid, &inverses[k]);
    }
    Ok(total)
}
