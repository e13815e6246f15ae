//! Multivariate normal, inverse-Wishart and categorical draws.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::linalg::SymMatrix;
use crate::error::{Error, Result};

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn std_normal_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Draws from MVN(mean, cov).
///
/// A positive semi-definite `cov` that fails Cholesky (for example `[[0]]`) is
/// handled through its eigendecomposition; anything with a clearly negative
/// eigenvalue is rejected.
pub fn sample_mvn<R: Rng + ?Sized>(mean: &[f64], cov: &SymMatrix<f64>, rng: &mut R) -> Result<Vec<f64>> {
    let d = mean.len();
    if cov.dim() != d {
        return Err(Error::invalid(format!("mean has length {d} but covariance is {0}x{0}", cov.dim())));
    }
    let z = std_normal_vec(d, rng);
    let shift = match cov.cholesky() {
        Ok(chol) => chol.l() * z,
        Err(_) => {
            if cov.matrix().iter().any(|v| !v.is_finite()) {
                return Err(Error::NotPositiveDefinite { what: "covariance".into() });
            }
            let eig = SymmetricEigen::new(cov.matrix().clone());
            let scale = eig.eigenvalues.amax().max(1.0);
            if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
                return Err(Error::NotPositiveDefinite { what: "covariance".into() });
            }
            let root = DVector::from_fn(d, |i, _| eig.eigenvalues[i].max(0.0).sqrt());
            &eig.eigenvectors * root.component_mul(&z)
        }
    };
    Ok(mean.iter().zip(shift.iter()).map(|(m, s)| m + s).collect())
}

/// Draws from the canonical-form normal with precision `P` and linear term `h`,
/// i.e. MVN(P⁻¹h, P⁻¹). This is the shape of every conjugate full conditional.
pub fn sample_mvn_precision<R: Rng + ?Sized>(precision: &DMatrix<f64>, h: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let d = h.len();
    if precision.nrows() != d || precision.ncols() != d {
        return Err(Error::invalid("precision and linear term dimensions differ"));
    }
    if d == 1 {
        let p = precision[(0, 0)];
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::NotPositiveDefinite { what: "precision".into() });
        }
        return Ok(vec![h[0] / p + std_normal(rng) / p.sqrt()]);
    }
    let chol = nalgebra::Cholesky::new(precision.clone())
        .ok_or(Error::NotPositiveDefinite { what: "precision".into() })?;
    let mean = chol.solve(&DVector::from_column_slice(h));
    // x = mean + L⁻ᵀ z has covariance (L Lᵀ)⁻¹
    let z = std_normal_vec(d, rng);
    let shift = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or(Error::NotPositiveDefinite { what: "precision".into() })?;
    Ok((mean + shift).iter().copied().collect())
}

/// Draws from the inverse-Wishart IW(ν, S) with density ∝ |X|^{−(ν+d+1)/2} exp(−tr(S X⁻¹)/2).
pub fn sample_inverse_wishart<R: Rng + ?Sized>(df: f64, scale: &SymMatrix<f64>, rng: &mut R) -> Result<SymMatrix<f64>> {
    let d = scale.dim();
    if !(df > d as f64 - 1.0) || !df.is_finite() {
        return Err(Error::invalid(format!("inverse-Wishart needs df > {}, got {df}", d as f64 - 1.0)));
    }
    let chol = scale.cholesky().map_err(|e| e.for_matrix("inverse-Wishart scale"))?;
    if d == 1 {
        let chi2 = ChiSquared::new(df).map_err(|e| Error::invalid(e.to_string()))?.sample(rng);
        return Ok(SymMatrix::from_diagonal(&[scale.get(0, 0) / chi2]));
    }
    // Bartlett: A lower triangular, A_ii² ~ χ²(ν − i), A_ij ~ N(0,1) below the diagonal.
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new(df - i as f64).map_err(|e| Error::invalid(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = std_normal(rng);
        }
    }
    // X = L (A Aᵀ)⁻¹ Lᵀ = (L A⁻ᵀ)(L A⁻ᵀ)ᵀ
    let a_inv_t = a
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or(Error::NotPositiveDefinite { what: "Bartlett factor".into() })?;
    let m = chol.l() * a_inv_t;
    Ok(SymMatrix::symmetrized(&m * m.transpose()))
}

/// Draws an index in `0..K` with probability proportional to `probs`.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::invalid("categorical probabilities must be finite and nonnegative"));
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("categorical probabilities are all zero"));
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return Ok(k);
            }
        }
    }
    Ok(last)
}

/// Normalizes log weights in place to probabilities (max-subtracted). Returns
/// `None` when every weight is −∞ or any is NaN.
pub fn normalize_log_weights(logw: &mut [f64]) -> Option<()> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || logw.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut total = 0.0;
    for v in logw.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in logw.iter_mut() {
        *v /= total;
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::rng::RngStream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mvn_standard_mean() {
        let mut rng = RngStream::new(10, 0);
        let cov = SymMatrix::identity(2);
        let mut sum = [0.0; 2];
        let n = 100_000;
        for _ in 0..n {
            let x = sample_mvn(&[0.0, 0.0], &cov, &mut rng).unwrap();
            sum[0] += x[0];
            sum[1] += x[1];
        }
        assert_abs_diff_eq!(sum[0] / n as f64, 0.0, epsilon = 0.02);
        assert_abs_diff_eq!(sum[1] / n as f64, 0.0, epsilon = 0.02);
    }

    #[test]
    fn mvn_degenerate() {
        let mut rng = RngStream::new(11, 0);
        let cov = SymMatrix::from_rows(&[vec![0.0]]).unwrap();
        for _ in 0..10 {
            assert_eq!(sample_mvn(&[3.0], &cov, &mut rng).unwrap(), vec![3.0]);
        }
    }

    #[test]
    fn mvn_rejects_indefinite() {
        let mut rng = RngStream::new(12, 0);
        let cov = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let err = sample_mvn(&[0.0, 0.0], &cov, &mut rng).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    fn empirical_cov(xs: &[Vec<f64>]) -> [[f64; 2]; 2] {
        let n = xs.len() as f64;
        let m0 = xs.iter().map(|x| x[0]).sum::<f64>() / n;
        let m1 = xs.iter().map(|x| x[1]).sum::<f64>() / n;
        let mut c = [[0.0; 2]; 2];
        for x in xs {
            let d = [x[0] - m0, x[1] - m1];
            for a in 0..2 {
                for b in 0..2 {
                    c[a][b] += d[a] * d[b] / n;
                }
            }
        }
        c
    }

    #[test]
    fn mvn_covariance() {
        let mut rng = RngStream::new(13, 0);
        let cov = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let xs: Vec<_> = (0..100_000).map(|_| sample_mvn(&[1.0, -1.0], &cov, &mut rng).unwrap()).collect();
        let c = empirical_cov(&xs);
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(c[a][b], cov.get(a, b), epsilon = 0.05);
            }
        }
    }

    #[test]
    fn canonical_form_moments() {
        let mut rng = RngStream::new(14, 0);
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let h = [1.0, 0.0];
        // mean = P⁻¹h = (2/3, −1/3), cov = P⁻¹ = [[2/3, −1/3], [−1/3, 2/3]]
        let xs: Vec<_> = (0..100_000).map(|_| sample_mvn_precision(&p, &h, &mut rng).unwrap()).collect();
        let n = xs.len() as f64;
        assert_abs_diff_eq!(xs.iter().map(|x| x[0]).sum::<f64>() / n, 2.0 / 3.0, epsilon = 0.01);
        assert_abs_diff_eq!(xs.iter().map(|x| x[1]).sum::<f64>() / n, -1.0 / 3.0, epsilon = 0.01);
        let c = empirical_cov(&xs);
        assert_abs_diff_eq!(c[0][0], 2.0 / 3.0, epsilon = 0.02);
        assert_abs_diff_eq!(c[0][1], -1.0 / 3.0, epsilon = 0.02);
        let one: Vec<f64> = (0..100_000).map(|_| sample_mvn_precision(&DMatrix::from_element(1, 1, 4.0), &[2.0], &mut rng).unwrap()[0]).collect();
        assert_abs_diff_eq!(one.iter().sum::<f64>() / n, 0.5, epsilon = 0.01);
    }

    #[test]
    fn inverse_wishart_scalar_mean() {
        let mut rng = RngStream::new(15, 0);
        let s = SymMatrix::identity(1);
        let n = 100_000;
        let m = (0..n).map(|_| sample_inverse_wishart(5.0, &s, &mut rng).unwrap().get(0, 0)).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(m, 1.0 / 3.0, epsilon = 0.02);
    }

    #[test]
    fn inverse_wishart_matrix_mean() {
        let mut rng = RngStream::new(16, 0);
        let s = SymMatrix::identity(2);
        let n = 100_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let x = sample_inverse_wishart(10.0, &s, &mut rng).unwrap();
            assert!(x.is_positive_definite());
            acc += x.matrix();
        }
        acc /= n as f64;
        for a in 0..2 {
            for b in 0..2 {
                let expected = if a == b { 1.0 / 7.0 } else { 0.0 };
                assert_abs_diff_eq!(acc[(a, b)], expected, epsilon = 0.05);
            }
        }
    }

    #[test]
    fn inverse_wishart_nonidentity_scale() {
        let mut rng = RngStream::new(17, 0);
        let s = SymMatrix::from_rows(&[vec![2.0, 0.6, 0.0], vec![0.6, 1.0, 0.3], vec![0.0, 0.3, 0.5]]).unwrap();
        let n = 50_000;
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            acc += sample_inverse_wishart(12.0, &s, &mut rng).unwrap().matrix();
        }
        acc /= n as f64;
        for a in 0..3 {
            for b in 0..3 {
                assert_abs_diff_eq!(acc[(a, b)], s.get(a, b) / 8.0, epsilon = 0.01);
            }
        }
    }

    #[test]
    fn inverse_wishart_rejects_small_df() {
        let mut rng = RngStream::new(18, 0);
        assert!(sample_inverse_wishart(0.5, &SymMatrix::identity(2), &mut rng).is_err());
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = RngStream::new(19, 0);
        assert!((0..100).all(|_| sample_categorical(&[1.0, 0.0, 0.0], &mut rng).unwrap() == 0));
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample_categorical(&[0.2, 0.3, 0.5], &mut rng).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip([0.2, 0.3, 0.5]) {
            assert_abs_diff_eq!(*c as f64 / n as f64, p, epsilon = 0.01);
        }
        let half = (0..n).filter(|_| sample_categorical(&[0.5, 0.5], &mut rng).unwrap() == 0).count();
        assert_abs_diff_eq!(half as f64 / n as f64, 0.5, epsilon = 0.01);
        assert!(sample_categorical(&[0.0, 0.0], &mut rng).is_err());
    }

    #[test]
    fn log_weights_normalize() {
        let mut w = [-1000.0, -1000.0 + 3f64.ln()];
        normalize_log_weights(&mut w).unwrap();
        assert_abs_diff_eq!(w[0], 0.25, epsilon = 1e-12);
        let mut dead = [f64::NEG_INFINITY; 2];
        assert!(normalize_log_weights(&mut dead).is_none());
    }
}
