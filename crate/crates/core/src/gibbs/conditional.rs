//! Conditional-regression form of a multivariate normal.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::kernels::SymMatrix;

/// Q = I − diag(Σ⁻¹)⁻¹Σ⁻¹ and the conditional variances 1/(Σ⁻¹)_rr.
///
/// Row r of Q holds the coefficients of outcome r regressed on the others.
pub fn conditional_coefficients(sigma: &SymMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let prec = sigma.inverse().map_err(|e| e.for_matrix("sigma"))?;
    let r = sigma.dim();
    let resid: Vec<f64> = (0..r).map(|a| 1.0 / prec.get(a, a)).collect();
    let q = DMatrix::from_fn(r, r, |a, b| if a == b { 0.0 } else { -prec.get(a, b) * resid[a] });
    Ok((q, resid))
}
