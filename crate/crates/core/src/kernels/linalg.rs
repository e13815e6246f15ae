//! Symmetric matrices and Cholesky-based helpers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square symmetric matrix.
///
/// Construction checks symmetry to a relative tolerance and then stores the
/// exactly symmetrized average `(A + Aᵀ)/2`. Positive-definiteness is not a
/// construction invariant; operations that need it check it through a
/// Cholesky factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<Vec<T>>",
    into = "Vec<Vec<T>>",
    bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>")
)]
pub struct SymMatrix<T: Real> {
    entries: DMatrix<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::invalid("symmetric matrix must have positive dimension"));
        }
        let scale = entries.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = T::symmetry_tolerance() * scale.max(T::one());
        for i in 0..entries.nrows() {
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if !(a - b).abs().le(&tol) {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(entries))
    }

    /// Wraps `(m + mᵀ)/2` without checking. Used for sums of outer products
    /// that are symmetric up to rounding.
    pub fn symmetrized(m: DMatrix<T>) -> Self {
        let half = T::of(0.5);
        let entries = (&m + m.transpose()) * half;
        SymMatrix { entries }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix { entries: DMatrix::identity(dim, dim) }
    }

    pub fn scaled_identity(dim: usize, scale: T) -> Self {
        SymMatrix { entries: DMatrix::identity(dim, dim) * scale }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        SymMatrix { entries: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    /// Row-major construction, checked for symmetry.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("symmetric matrix rows must form a square"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.entries[(i, j)]).collect()).collect()
    }

    pub fn cholesky(&self) -> Result<Cholesky<T, Dyn>> {
        if self.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite { what: "matrix".into() });
        }
        Cholesky::new(self.entries.clone()).ok_or(Error::NotPositiveDefinite { what: "matrix".into() })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// Inverse formed from the Cholesky factor.
    pub fn inverse(&self) -> Result<SymMatrix<T>> {
        Ok(Self::symmetrized(self.cholesky()?.inverse()))
    }

    pub fn ln_det(&self) -> Result<T> {
        let chol = self.cholesky()?;
        let two = T::of(2.0);
        Ok(chol.l_dirty().diagonal().iter().fold(T::zero(), |acc, d| acc + two * d.ln()))
    }

    pub fn scale(&self, factor: T) -> SymMatrix<T> {
        SymMatrix { entries: &self.entries * factor }
    }

    pub fn add(&self, other: &SymMatrix<T>) -> SymMatrix<T> {
        SymMatrix { entries: &self.entries + &other.entries }
    }

    pub fn diagonal(&self) -> Vec<T> {
        self.entries.diagonal().iter().copied().collect()
    }
}

impl<T: Real> TryFrom<Vec<Vec<T>>> for SymMatrix<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl<T: Real> From<SymMatrix<T>> for Vec<Vec<T>> {
    fn from(m: SymMatrix<T>) -> Self {
        m.to_rows()
    }
}

/// Precision-form view of a positive-definite matrix: Cholesky factor,
/// inverse and log-determinant, computed once.
#[derive(Clone, Debug)]
pub struct Factored<T: Real> {
    pub inverse: DMatrix<T>,
    pub ln_det: T,
}

impl<T: Real> Factored<T> {
    pub fn new(m: &SymMatrix<T>) -> Result<Self> {
        let chol = m.cholesky()?;
        let two = T::of(2.0);
        let ln_det = chol.l_dirty().diagonal().iter().fold(T::zero(), |acc, d| acc + two * d.ln());
        let inv = chol.inverse();
        Ok(Factored { inverse: (&inv + inv.transpose()) * T::of(0.5), ln_det })
    }

    /// Multivariate normal log density of a residual with this covariance.
    pub fn mvn_ln_pdf(&self, resid: &DVector<T>) -> T {
        let d = T::of(resid.len() as f64);
        let quad = (resid.transpose() * &self.inverse * resid)[(0, 0)];
        -T::of(0.5) * (d * T::of((2.0 * std::f64::consts::PI).ln()) + self.ln_det + quad)
    }

    /// Same as [`Self::mvn_ln_pdf`] for a residual given as a slice.
    pub fn mvn_ln_pdf_slice(&self, resid: &[T]) -> T {
        let d = resid.len();
        let mut quad = T::zero();
        for a in 0..d {
            let mut row = T::zero();
            for b in 0..d {
                row += self.inverse[(a, b)] * resid[b];
            }
            quad += resid[a] * row;
        }
        -T::of(0.5) * (T::of(d as f64) * T::of((2.0 * std::f64::consts::PI).ln()) + self.ln_det + quad)
    }
}
